//! Inequality verification harness.
//!
//! Each verifier estimates the best constant in one inequality by maximizing
//! the ratio of its two sides over seeded random inputs, repeats the
//! estimate across a ladder of grid resolutions, and judges the outcome:
//!
//! * `pass`: every estimate finite, and the finest-grid estimate is within
//!   `stability_factor` (default 2) of the coarsest-grid one;
//! * `unstable`: estimates finite but growing beyond that factor, the
//!   signature of a hypothesis violation that only shows under refinement;
//! * `violated`: a pointwise bound with an exact declared constant was
//!   exceeded beyond tolerance;
//! * `preconditions_not_met`: a machine-checked hypothesis (weight class
//!   membership, admissibility window, integrability) failed, so the
//!   inequality was never exercised.
//!
//! Reports are deterministic: the same seed and config produce byte
//! identical JSON.

mod ops;
mod random;

pub use ops::MaximalVariant;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{DiscreteDomain, DomainSpec};
use crate::error::Result;
use crate::fields::FieldSpec;
use crate::weights::{CubeSampler, WeightSpec};

/// Outcome classification of a verification run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Unstable,
    Violated,
    PreconditionsNotMet,
}

/// The input and atom attaining the reported maximum ratio.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    pub input: String,
    pub atom: usize,
}

impl Witness {
    pub fn none() -> Self {
        Witness {
            input: "none".into(),
            atom: 0,
        }
    }
}

/// One machine-checked hypothesis with its per-resolution values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub values: Vec<f64>,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub id: String,
    pub seed: u64,
    pub trials: usize,
    pub max_ratio: f64,
    pub witness: Witness,
    pub trend: Vec<(usize, f64)>,
    pub verdict: Verdict,
    pub hypotheses: Vec<HypothesisCheck>,
}

impl VerificationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Which inequality to verify. The ids double as CLI subcommand arguments
/// and report labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifierKind {
    /// Weighted maximal inequality on the trimmed level set.
    Rara,
    /// Same, with the input supported inside the trimmed level set.
    Acotacion,
    /// Global weighted maximal inequality (level set equals the domain).
    Global,
    /// Global inequality for power weights inside the admissibility window.
    Coro1,
    /// Weighted fractional integral inequality.
    Ialfa,
    /// Fractional integral inequality with the composite two-weight build.
    Samko,
    /// Stability of A_1 under variable powers of a clipped power weight.
    Reverse,
    /// Cube-measure versus exponent-oscillation bound.
    Tres,
    /// Pointwise maximal-function domination for low exponents.
    Cinco,
    /// Pointwise factorization bound with constant exactly 1.
    Factorization,
    /// Pointwise geometric-mean bound for the fractional integral.
    Welland,
}

impl VerifierKind {
    pub const ALL: [VerifierKind; 11] = [
        VerifierKind::Rara,
        VerifierKind::Acotacion,
        VerifierKind::Global,
        VerifierKind::Coro1,
        VerifierKind::Ialfa,
        VerifierKind::Samko,
        VerifierKind::Reverse,
        VerifierKind::Tres,
        VerifierKind::Cinco,
        VerifierKind::Factorization,
        VerifierKind::Welland,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            VerifierKind::Rara => "rara",
            VerifierKind::Acotacion => "acotacion",
            VerifierKind::Global => "global",
            VerifierKind::Coro1 => "coro1",
            VerifierKind::Ialfa => "ialfa",
            VerifierKind::Samko => "samko",
            VerifierKind::Reverse => "reverse",
            VerifierKind::Tres => "tres",
            VerifierKind::Cinco => "cinco",
            VerifierKind::Factorization => "factorization",
            VerifierKind::Welland => "welland",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.id() == id)
    }

    /// Whether the verifier draws random trial inputs (and therefore needs
    /// a seed to be meaningful).
    pub fn randomized(&self) -> bool {
        !matches!(self, VerifierKind::Tres)
    }
}

/// Superset configuration for every verifier; each reads the fields it
/// needs. Serialization materializes all fields, so an echoed config never
/// contains hidden defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Domain builder; rebuilt at each entry of `resolutions`.
    pub domain: DomainSpec,
    /// Refinement ladder (per-axis resolutions). Empty: run the builder as
    /// given, with the atom count as the trend label.
    pub resolutions: Vec<usize>,
    /// Random trials per resolution.
    pub trials: usize,
    /// Variable exponent p.
    pub p: FieldSpec,
    /// Operator order.
    pub alpha: f64,
    /// Shift for the shifted exponent pair (fractional integral verifiers)
    /// and for the pointwise geometric-mean bound.
    pub epsilon: Option<f64>,
    /// Norm weight (or first composite factor).
    pub weight: Option<WeightSpec>,
    /// Second composite factor.
    pub weight2: Option<WeightSpec>,
    /// Low-exponent field for the pointwise maximal verifier.
    pub t: Option<FieldSpec>,
    /// Level for the trimmed level set.
    pub r: Option<f64>,
    /// Class offset: the weight class checked is A_(r - delta).
    pub delta: Option<f64>,
    /// Margin for the trimmed level set; default: largest dyadic margin
    /// leaving positive measure.
    pub eps: Option<f64>,
    /// Power weight exponent (admissibility-window verifier).
    pub eta: Option<f64>,
    /// Power weight center.
    pub x0: Option<Vec<f64>>,
    /// Explicit exponent fields for the variable-power verifier; default:
    /// seeded random log-Hoelder fields.
    pub a_family: Option<Vec<FieldSpec>>,
    /// Cube family for weight constants and cube scans.
    pub sampler: CubeSampler,
    /// Allowed growth of estimates from coarsest to finest resolution.
    pub stability_factor: f64,
    /// Relative tolerance for exact-constant pointwise bounds.
    pub tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            domain: DomainSpec::unit_square(16),
            resolutions: vec![16, 32, 64],
            trials: 50,
            p: FieldSpec::constant(2.0),
            alpha: 0.0,
            epsilon: None,
            weight: None,
            weight2: None,
            t: None,
            r: None,
            delta: None,
            eps: None,
            eta: None,
            x0: None,
            a_family: None,
            sampler: CubeSampler::Exact,
            stability_factor: 2.0,
            tol: 1e-9,
        }
    }
}

impl VerifyConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// The resolution ladder as (label, built domain) pairs.
    pub(crate) fn ladder(&self) -> Result<Vec<(usize, Arc<DiscreteDomain>)>> {
        if self.resolutions.is_empty() {
            let d = Arc::new(self.domain.build()?);
            let label = d.len();
            return Ok(vec![(label, d)]);
        }
        self.resolutions
            .iter()
            .map(|&res| {
                let d = Arc::new(self.domain.at_resolution(res)?.build()?);
                Ok((res, d))
            })
            .collect()
    }
}

/// Run one verifier.
pub fn run(kind: VerifierKind, cfg: &VerifyConfig, seed: u64) -> Result<VerificationReport> {
    match kind {
        VerifierKind::Rara => ops::weighted_maximal(cfg, seed, MaximalVariant::Full),
        VerifierKind::Acotacion => ops::weighted_maximal(cfg, seed, MaximalVariant::Supported),
        VerifierKind::Global => ops::weighted_maximal(cfg, seed, MaximalVariant::Global),
        VerifierKind::Coro1 => ops::weighted_maximal(cfg, seed, MaximalVariant::PowerWindow),
        VerifierKind::Ialfa => ops::fractional_integral(cfg, seed, false),
        VerifierKind::Samko => ops::fractional_integral(cfg, seed, true),
        VerifierKind::Reverse => ops::reverse(cfg, seed),
        VerifierKind::Tres => ops::measure_exponent_bound(cfg, seed),
        VerifierKind::Cinco => ops::pointwise_maximal(cfg, seed),
        VerifierKind::Factorization => ops::pointwise_factorization(cfg, seed),
        VerifierKind::Welland => ops::welland(cfg, seed),
    }
}

/// Convenience wrappers under the operation names used throughout the docs.
pub fn verify_weighted_maximal(
    cfg: &VerifyConfig,
    seed: u64,
    variant: MaximalVariant,
) -> Result<VerificationReport> {
    ops::weighted_maximal(cfg, seed, variant)
}

pub fn verify_fractional_integral(
    cfg: &VerifyConfig,
    seed: u64,
    composite: bool,
) -> Result<VerificationReport> {
    ops::fractional_integral(cfg, seed, composite)
}

pub fn verify_reverse(cfg: &VerifyConfig, seed: u64) -> Result<VerificationReport> {
    ops::reverse(cfg, seed)
}

pub fn verify_measure_exponent_bound(cfg: &VerifyConfig, seed: u64) -> Result<VerificationReport> {
    ops::measure_exponent_bound(cfg, seed)
}

pub fn verify_pointwise_maximal(cfg: &VerifyConfig, seed: u64) -> Result<VerificationReport> {
    ops::pointwise_maximal(cfg, seed)
}

pub fn verify_pointwise_factorization(
    cfg: &VerifyConfig,
    seed: u64,
) -> Result<VerificationReport> {
    ops::pointwise_factorization(cfg, seed)
}

pub fn verify_welland(cfg: &VerifyConfig, seed: u64) -> Result<VerificationReport> {
    ops::welland(cfg, seed)
}

/// Seed for the per-resolution random stream.
pub(crate) fn mix_seed(seed: u64, label: usize) -> u64 {
    seed ^ (label as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Finest-to-coarsest growth check.
pub(crate) fn is_stable(values: &[f64], factor: f64) -> bool {
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let first = values[0];
    let last = values[values.len() - 1];
    if first <= 0.0 {
        return last <= 0.0;
    }
    last <= factor * first
}

/// Accumulates named hypothesis values across the resolution ladder.
/// Gating entries decide preconditions_not_met; informational entries are
/// reported but never veto a verdict.
#[derive(Default)]
pub(crate) struct HypothesisLog {
    entries: Vec<LogEntry>,
}

struct LogEntry {
    name: String,
    values: Vec<f64>,
    kind: HypKind,
    gating: bool,
}

#[derive(PartialEq, Eq, Clone, Copy)]
pub(crate) enum HypKind {
    /// Numeric estimate that must stay finite and refinement-stable.
    Stability,
    /// Boolean condition recorded as 0/1 that must always hold.
    Boolean,
}

impl HypothesisLog {
    pub(crate) fn record(&mut self, name: &str, value: f64) {
        self.record_kind(name, value, HypKind::Stability, true);
    }

    pub(crate) fn record_info(&mut self, name: &str, value: f64) {
        self.record_kind(name, value, HypKind::Stability, false);
    }

    pub(crate) fn record_bool(&mut self, name: &str, pass: bool) {
        self.record_kind(name, if pass { 1.0 } else { 0.0 }, HypKind::Boolean, true);
    }

    pub(crate) fn record_info_bool(&mut self, name: &str, pass: bool) {
        self.record_kind(name, if pass { 1.0 } else { 0.0 }, HypKind::Boolean, false);
    }

    fn record_kind(&mut self, name: &str, value: f64, kind: HypKind, gating: bool) {
        if let Some(e) = self.entries.iter_mut().find(|e| e.name == name) {
            e.values.push(value);
        } else {
            self.entries.push(LogEntry {
                name: name.to_string(),
                values: vec![value],
                kind,
                gating,
            });
        }
    }

    /// Evaluate all entries; the second component is true when every
    /// gating hypothesis holds.
    pub(crate) fn finalize(&self, factor: f64) -> (Vec<HypothesisCheck>, bool) {
        let mut all_ok = true;
        let checks = self
            .entries
            .iter()
            .map(|e| {
                let ok = match e.kind {
                    HypKind::Stability => is_stable(&e.values, factor),
                    HypKind::Boolean => e.values.iter().all(|&v| v == 1.0),
                };
                if e.gating {
                    all_ok &= ok;
                }
                HypothesisCheck {
                    name: e.name.clone(),
                    values: e.values.clone(),
                    ok,
                }
            })
            .collect();
        (checks, all_ok)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verifier_ids_roundtrip() {
        for k in VerifierKind::ALL {
            assert_eq!(VerifierKind::from_id(k.id()), Some(k));
        }
        assert_eq!(VerifierKind::from_id("nope"), None);
    }

    #[test]
    fn config_defaults_materialize_in_json() {
        let cfg = VerifyConfig::default();
        let text = cfg.to_json().unwrap();
        for key in [
            "\"domain\"",
            "\"resolutions\"",
            "\"trials\"",
            "\"alpha\"",
            "\"epsilon\"",
            "\"weight\"",
            "\"sampler\"",
            "\"stability_factor\"",
            "\"tol\"",
        ] {
            assert!(text.contains(key), "missing {key} in {text}");
        }
        let back = VerifyConfig::from_json(&text).unwrap();
        assert_eq!(back.trials, cfg.trials);
    }

    #[test]
    fn config_rejects_unknown_fields() {
        let err = VerifyConfig::from_json(r#"{"trails": 3}"#);
        assert!(err.is_err());
    }

    #[test]
    fn stability_rule() {
        assert!(is_stable(&[1.0, 1.5, 1.9], 2.0));
        assert!(!is_stable(&[1.0, 3.0, 2.1], 2.0));
        assert!(is_stable(&[1.0], 2.0));
        assert!(!is_stable(&[1.0, f64::INFINITY], 2.0));
        assert!(is_stable(&[2.0, 1.0, 0.5], 2.0));
    }

    #[test]
    fn hypothesis_log_tracks_stability_and_booleans() {
        let mut log = HypothesisLog::default();
        log.record("a_s(w^q)", 1.0);
        log.record("a_s(w^q)", 5.0);
        log.record_bool("window", true);
        let (checks, ok) = log.finalize(2.0);
        assert!(!ok);
        assert_eq!(checks.len(), 2);
        assert!(!checks[0].ok);
        assert!(checks[1].ok);
    }

    #[test]
    fn informational_entries_do_not_gate() {
        let mut log = HypothesisLog::default();
        log.record_info("log_holder(t)", 1.0);
        log.record_info("log_holder(t)", 50.0);
        log.record_info_bool("range", false);
        let (checks, ok) = log.finalize(2.0);
        assert!(ok, "info entries must not veto");
        assert!(checks.iter().all(|c| !c.ok));
    }

    #[test]
    fn mixed_seed_differs_across_resolutions() {
        assert_ne!(mix_seed(7, 16), mix_seed(7, 32));
        assert_eq!(mix_seed(7, 16), mix_seed(7, 16));
    }
}
