//! varlex: command-line front end for the variable-exponent space toolkit.
//!
//! Exit codes: 0 success (including verdicts pass and unstable), 1 verdict
//! violated, 2 preconditions not met or any configuration error. Every
//! artifact carries its fully resolved configuration: JSON outputs embed a
//! `config` object, CSV outputs start with a `# config:` comment line, and
//! `--out` files get a `.config.json` sibling.

use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use varlex_core::domain::{Cube, DiscreteDomain, DomainIndex, DomainSpec};
use varlex_core::fields::{omega_set, FieldSpec, OmegaSet};
use varlex_core::operators::{
    fractional_integral, maximal, EvalMode, OperatorOutput, DEFAULT_DYADIC_DEPTH,
};
use varlex_core::space::{luxemburg_norm, DEFAULT_NORM_TOL};
use varlex_core::verify::{run as run_verifier, Verdict, VerifierKind, VerifyConfig};
use varlex_core::weights::{a1_constant, muckenhoupt_constant, CubeSampler, WeightSpec};

type CliResult<T> = Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(
    name = "varlex",
    version,
    about = "Variable-exponent Lebesgue space machinery over discretized domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Luxemburg norm of a field.
    Norm(NormArgs),
    /// Apply the fractional maximal operator or the fractional integral.
    Op(OpArgs),
    /// Muckenhoupt-class constant of a weight.
    WeightConstant(WeightConstantArgs),
    /// Lower Ahlfors regularity constant of a domain.
    CheckAhlfors(CheckAhlforsArgs),
    /// Measure-doubling probe over a cube family.
    Doubling(DoublingArgs),
    /// Run one inequality verifier and write its report.
    Verify(VerifyArgs),
    /// Re-run a verifier across a resolution ladder and emit the trend.
    Study(StudyArgs),
}

#[derive(Args)]
struct NormArgs {
    /// Domain: builder shorthand (unit_square[:N], unit_interval[:N],
    /// paper_example[:N]) or a JSON file.
    #[arg(long)]
    domain: String,
    /// Field: JSON spec file or `constant:VALUE`.
    #[arg(long)]
    field: String,
    /// Exponent field: JSON spec file or `constant:VALUE`.
    #[arg(long)]
    exponent: String,
    /// Subset JSON file: {"indices": [...]} or {"t": spec, "r": R, "eps": E}.
    #[arg(long)]
    subset: Option<PathBuf>,
    /// Relative bisection tolerance on the norm value.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OperatorName {
    Maximal,
    Frint,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModeName {
    Exact,
    Dyadic,
}

#[derive(Args)]
struct OpArgs {
    /// Which operator to apply.
    operator: OperatorName,
    #[arg(long)]
    domain: String,
    #[arg(long)]
    field: String,
    /// Operator order alpha.
    #[arg(long)]
    alpha: f64,
    /// Cube family: exact (all critical cubes) or dyadic.
    #[arg(long, value_enum, default_value = "exact")]
    mode: ModeName,
    /// Dyadic ladder depth (with --mode dyadic).
    #[arg(long)]
    depth: Option<u32>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WeightConstantArgs {
    #[arg(long)]
    domain: String,
    /// Weight JSON spec file.
    #[arg(long)]
    weight: PathBuf,
    /// Class parameter; 1 selects the strongest class.
    #[arg(long)]
    s: f64,
    #[arg(long, value_enum, default_value = "exact")]
    sampler: ModeName,
    #[arg(long)]
    depth: Option<u32>,
}

#[derive(Args)]
struct CheckAhlforsArgs {
    #[arg(long)]
    domain: String,
    /// Override the regularity dimension of the domain.
    #[arg(long)]
    beta: Option<f64>,
    /// Probe radii (comma separated); default: a dyadic ladder below the
    /// diameter.
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
}

#[derive(Args)]
struct DoublingArgs {
    #[arg(long)]
    domain: String,
    /// Cube side lengths, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    sides: Vec<f64>,
    /// Cube center coordinates, comma separated. Defaults to the corner
    /// family on the mixed example domain.
    #[arg(long, value_delimiter = ',')]
    center: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Verifier id: rara, acotacion, global, coro1, ialfa, samko, reverse,
    /// tres, cinco, factorization, or welland.
    id: String,
    #[arg(long)]
    config: PathBuf,
    /// RNG seed; required for every randomized verifier.
    #[arg(long)]
    seed: Option<u64>,
    /// Report path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StudyArgs {
    /// Verifier id to drive across the ladder.
    #[arg(long)]
    verifier: String,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Resolution ladder (at least two entries).
    #[arg(long, value_delimiter = ',', required = true)]
    resolutions: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    if let Ok(v) = std::env::var("VARLEX_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: VARLEX_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(2);
            }
        }
    }
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> CliResult<u8> {
    match cmd {
        Command::Norm(a) => cmd_norm(a),
        Command::Op(a) => cmd_op(a),
        Command::WeightConstant(a) => cmd_weight_constant(a),
        Command::CheckAhlfors(a) => cmd_check_ahlfors(a),
        Command::Doubling(a) => cmd_doubling(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Study(a) => cmd_study(a),
    }
}

/// Domain argument: builder shorthand, a DomainSpec JSON file (detected by
/// its "builder" key), or a raw domain data file.
fn parse_domain(s: &str) -> CliResult<DomainSpec> {
    let p = Path::new(s);
    if p.exists() {
        let text = fs::read_to_string(p)?;
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| format!("{s}: {e}"))?;
        if v.get("builder").is_some() {
            return Ok(serde_json::from_value(v).map_err(|e| format!("{s}: {e}"))?);
        }
        return Ok(DomainSpec::File {
            path: s.to_string(),
        });
    }
    let (name, res) = match s.split_once(':') {
        Some((n, r)) => (
            n,
            r.parse::<usize>()
                .map_err(|_| format!("bad resolution in domain spec {s:?}"))?,
        ),
        None => (s, 16),
    };
    match name {
        "unit_square" => Ok(DomainSpec::unit_square(res)),
        "unit_interval" => Ok(DomainSpec::unit_interval(res)),
        "paper_example" => Ok(DomainSpec::PaperExample { resolution: res }),
        _ => Err(format!(
            "unknown domain {s:?}: expected unit_square[:N], unit_interval[:N], \
             paper_example[:N], or a JSON file path"
        )
        .into()),
    }
}

/// Field argument: a FieldSpec JSON file or `constant:VALUE`.
fn parse_field(s: &str) -> CliResult<FieldSpec> {
    let p = Path::new(s);
    if p.exists() {
        let text = fs::read_to_string(p)?;
        return Ok(serde_json::from_str(&text).map_err(|e| format!("{s}: {e}"))?);
    }
    if let Some(v) = s.strip_prefix("constant:") {
        let value: f64 = v
            .parse()
            .map_err(|_| format!("bad constant field value {v:?}"))?;
        return Ok(FieldSpec::constant(value));
    }
    Err(format!("field {s:?} is neither an existing JSON file nor constant:VALUE").into())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SubsetFile {
    Indices { indices: Vec<usize> },
    Level { t: FieldSpec, r: f64, eps: f64 },
}

fn load_subset(path: &Path, domain: &Arc<DiscreteDomain>) -> CliResult<OmegaSet> {
    let text = fs::read_to_string(path)?;
    let parsed: SubsetFile =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(match parsed {
        SubsetFile::Indices { indices } => OmegaSet::from_indices(Arc::clone(domain), indices)?,
        SubsetFile::Level { t, r, eps } => omega_set(&t.realize(domain)?, r, eps)?,
    })
}

fn eval_mode(mode: ModeName, depth: Option<u32>) -> EvalMode {
    match mode {
        ModeName::Exact => EvalMode::Exact,
        ModeName::Dyadic => EvalMode::Dyadic {
            depth: depth.unwrap_or(DEFAULT_DYADIC_DEPTH),
        },
    }
}

fn cube_sampler(mode: ModeName, depth: Option<u32>) -> CubeSampler {
    match mode {
        ModeName::Exact => CubeSampler::Exact,
        ModeName::Dyadic => CubeSampler::Dyadic {
            depth: depth.unwrap_or(DEFAULT_DYADIC_DEPTH),
        },
    }
}

fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| format!("{} has no file name", path.display()))?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Sibling path carrying the resolved config: report.json -> report.config.json.
fn config_sibling(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}.config.json"))
}

fn emit_csv(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write_atomic(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_norm(a: NormArgs) -> CliResult<u8> {
    let dspec = parse_domain(&a.domain)?;
    let fspec = parse_field(&a.field)?;
    let pspec = parse_field(&a.exponent)?;
    let domain = Arc::new(dspec.build()?);
    let f = fspec.realize(&domain)?;
    let p = pspec.realize(&domain)?;
    let subset = match &a.subset {
        Some(path) => Some(load_subset(path, &domain)?),
        None => None,
    };
    let result = luxemburg_norm(&f, &p, subset.as_ref(), a.tol)?;
    let config = json!({
        "command": "norm",
        "domain": dspec,
        "field": fspec,
        "exponent": pspec,
        "subset": a.subset.as_ref().map(|p| p.display().to_string()),
        "tol": a.tol.unwrap_or(DEFAULT_NORM_TOL),
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({ "config": config, "result": result }))?
    );
    Ok(0)
}

fn operator_csv(domain: &DiscreteDomain, out: &OperatorOutput) -> String {
    let dim = domain.ambient_dim();
    let mut text = String::new();
    text.push_str("index");
    for k in 0..dim {
        text.push_str(&format!(",x{k}"));
    }
    text.push_str(",value,argmax_radius\n");
    for i in 0..domain.len() {
        text.push_str(&i.to_string());
        for c in domain.coords(i) {
            text.push_str(&format!(",{c}"));
        }
        text.push_str(&format!(",{}", out.field.value(i)));
        match &out.argmax_radius {
            Some(r) => text.push_str(&format!(",{}\n", r[i])),
            None => text.push_str(",\n"),
        }
    }
    text
}

fn cmd_op(a: OpArgs) -> CliResult<u8> {
    let dspec = parse_domain(&a.domain)?;
    let fspec = parse_field(&a.field)?;
    let domain = Arc::new(dspec.build()?);
    let f = fspec.realize(&domain)?;
    let idx = DomainIndex::new(Arc::clone(&domain));
    let mode = eval_mode(a.mode, a.depth);
    let (name, output) = match a.operator {
        OperatorName::Maximal => ("maximal", maximal(&idx, &f, a.alpha, mode)?),
        OperatorName::Frint => ("frint", fractional_integral(&idx, &f, a.alpha)?),
    };
    let config = json!({
        "command": "op",
        "operator": name,
        "domain": dspec,
        "field": fspec,
        "alpha": a.alpha,
        "mode": match mode { EvalMode::Exact => "exact".to_string(), EvalMode::Dyadic { depth } => format!("dyadic:{depth}") },
    });
    let mut text = format!("# config: {}\n", serde_json::to_string(&config)?);
    text.push_str(&operator_csv(&domain, &output));
    emit_csv(a.out.as_deref(), &text)?;
    Ok(0)
}

fn cmd_weight_constant(a: WeightConstantArgs) -> CliResult<u8> {
    let dspec = parse_domain(&a.domain)?;
    let text = fs::read_to_string(&a.weight)?;
    let wspec: WeightSpec =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", a.weight.display()))?;
    let domain = Arc::new(dspec.build()?);
    let w = wspec.realize(&domain, None)?;
    let idx = DomainIndex::new(Arc::clone(&domain));
    let sampler = cube_sampler(a.sampler, a.depth);
    let constant = if a.s == 1.0 {
        a1_constant(&idx, &w, &sampler)?
    } else {
        muckenhoupt_constant(&idx, &w, a.s, &sampler)?
    };
    let config = json!({
        "command": "weight-constant",
        "domain": dspec,
        "weight": wspec,
        "s": a.s,
        "sampler": sampler,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(
            &json!({ "config": config, "result": { "constant": constant } })
        )?
    );
    Ok(0)
}

fn cmd_check_ahlfors(a: CheckAhlforsArgs) -> CliResult<u8> {
    let dspec = parse_domain(&a.domain)?;
    let built = dspec.build()?;
    let domain = match a.beta {
        Some(b) => built.with_ahlfors_dim(b)?,
        None => built,
    };
    let radii = match &a.radii {
        Some(r) => r.clone(),
        None => {
            let lo = 2.0 * domain.min_spacing();
            let ladder: Vec<f64> = (1..=6)
                .map(|k| domain.diameter() / f64::powi(2.0, k))
                .filter(|&r| r >= lo)
                .collect();
            if ladder.is_empty() {
                return Err("domain too coarse for the default radius ladder; pass --radii".into());
            }
            ladder
        }
    };
    let centers: Vec<usize> = (0..domain.len()).collect();
    let c_hat = domain.ahlfors_constant(&radii, &centers)?;
    let config = json!({
        "command": "check-ahlfors",
        "domain": dspec,
        "beta": domain.ahlfors_dim(),
        "radii": radii,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "config": config,
            "result": { "c_hat": c_hat, "beta": domain.ahlfors_dim(), "radii": radii }
        }))?
    );
    Ok(0)
}

fn cmd_doubling(a: DoublingArgs) -> CliResult<u8> {
    let dspec = parse_domain(&a.domain)?;
    let domain = Arc::new(dspec.build()?);
    let cubes: Vec<Cube> = match &a.center {
        Some(center) => a
            .sides
            .iter()
            .map(|&l| Cube::new(center.clone(), l))
            .collect::<Result<_, _>>()?,
        None => match &dspec {
            DomainSpec::PaperExample { .. } => {
                varlex_core::domain::mixed_example_corner_cubes(&a.sides)?
            }
            _ => return Err("--center is required unless the domain is paper_example".into()),
        },
    };
    let samples = domain.doubling_probe(&cubes);
    let config = json!({
        "command": "doubling",
        "domain": dspec,
        "sides": a.sides,
        "center": a.center,
    });
    let mut text = format!("# config: {}\n", serde_json::to_string(&config)?);
    text.push_str("side,ratio\n");
    for s in &samples {
        text.push_str(&format!("{},{}\n", s.side, s.ratio));
    }
    emit_csv(a.out.as_deref(), &text)?;
    Ok(0)
}

fn load_verify_config(path: &Path) -> CliResult<VerifyConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    VerifyConfig::from_json(&text)
        .map_err(|e| format!("{}: {e}", path.display()).into())
}

fn resolve_verifier(id: &str, seed: Option<u64>) -> CliResult<(VerifierKind, u64)> {
    let kind = VerifierKind::from_id(id).ok_or_else(|| {
        format!(
            "unknown verifier {id:?}; expected one of {}",
            VerifierKind::ALL
                .iter()
                .map(|k| k.id())
                .collect::<Vec<_>>()
                .join(", ")
        )
    })?;
    match seed {
        Some(s) => Ok((kind, s)),
        None if kind.randomized() => {
            Err(format!("--seed is required for the randomized verifier {id:?}").into())
        }
        None => Ok((kind, 0)),
    }
}

fn cmd_verify(a: VerifyArgs) -> CliResult<u8> {
    let cfg = load_verify_config(&a.config)?;
    let (kind, seed) = resolve_verifier(&a.id, a.seed)?;
    let report = run_verifier(kind, &cfg, seed)?;
    write_atomic(&a.out, &(report.to_json()? + "\n"))?;
    let echo = json!({
        "command": "verify",
        "id": kind.id(),
        "seed": seed,
        "config": cfg,
    });
    write_atomic(
        &config_sibling(&a.out),
        &(serde_json::to_string_pretty(&echo)? + "\n"),
    )?;
    let verdict_str = serde_json::to_value(report.verdict)?
        .as_str()
        .unwrap_or("unknown")
        .to_string();
    println!(
        "{}: {} (max_ratio {}, report {})",
        kind.id(),
        verdict_str,
        report.max_ratio,
        a.out.display()
    );
    Ok(match report.verdict {
        Verdict::Pass | Verdict::Unstable => 0,
        Verdict::Violated => 1,
        Verdict::PreconditionsNotMet => 2,
    })
}

/// Every analytic descriptor in the config must be resamplable to drive a
/// refinement study; raw tables are pinned to one grid.
fn check_resamplable(cfg: &VerifyConfig) -> CliResult<()> {
    fn field_ok(spec: &FieldSpec, what: &str) -> CliResult<()> {
        if spec.is_resamplable() {
            Ok(())
        } else {
            Err(format!("{what} is a raw table and cannot be resampled across resolutions").into())
        }
    }
    fn weight_ok(spec: &WeightSpec, what: &str) -> CliResult<()> {
        match spec {
            WeightSpec::Table { .. } => Err(format!(
                "{what} is a raw table and cannot be resampled across resolutions"
            )
            .into()),
            WeightSpec::Samko { w1, w2 } => {
                weight_ok(w1, what)?;
                weight_ok(w2, what)
            }
            _ => Ok(()),
        }
    }
    field_ok(&cfg.p, "exponent p")?;
    if let Some(t) = &cfg.t {
        field_ok(t, "exponent t")?;
    }
    if let Some(fam) = &cfg.a_family {
        for (i, s) in fam.iter().enumerate() {
            field_ok(s, &format!("a_family[{i}]"))?;
        }
    }
    if let Some(w) = &cfg.weight {
        weight_ok(w, "weight")?;
    }
    if let Some(w) = &cfg.weight2 {
        weight_ok(w, "weight2")?;
    }
    Ok(())
}

fn cmd_study(a: StudyArgs) -> CliResult<u8> {
    if a.resolutions.len() < 2 {
        return Err("a refinement study needs at least two resolutions".into());
    }
    let base = load_verify_config(&a.config)?;
    let (kind, seed) = resolve_verifier(&a.verifier, a.seed)?;
    check_resamplable(&base)?;
    for &r in &a.resolutions {
        base.domain.at_resolution(r)?;
    }

    let mut rows = String::from("resolution,c_hat,runtime_seconds\n");
    for &res in &a.resolutions {
        let mut cfg = base.clone();
        cfg.resolutions = vec![res];
        let start = Instant::now();
        let report = run_verifier(kind, &cfg, seed)?;
        let secs = start.elapsed().as_secs_f64();
        rows.push_str(&format!("{res},{},{secs:.3}\n", report.max_ratio));
    }

    let config = json!({
        "command": "study",
        "verifier": kind.id(),
        "seed": seed,
        "resolutions": a.resolutions,
        "config": base,
    });
    let text = format!("# config: {}\n{rows}", serde_json::to_string(&config)?);
    emit_csv(a.out.as_deref(), &text)?;
    if let Some(out) = &a.out {
        write_atomic(
            &config_sibling(out),
            &(serde_json::to_string_pretty(&config)? + "\n"),
        )?;
    }
    Ok(0)
}
