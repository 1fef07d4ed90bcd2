//! Weights and Muckenhoupt-type constants over atomic measures.
//!
//! A weight is a strictly positive field. The A_s constant is estimated as
//! a maximum of cube averages over a sampled family of atom-centered cubes:
//! either every distinct cube (one per tie-group prefix of the
//! distance-sorted atom list, exactly as the maximal operator scans) or a
//! dyadic ladder of side lengths.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{l2_dist, DiscreteDomain, DomainIndex};
use crate::error::{Error, Result};
use crate::fields::{ExponentSystem, ScalarField};

/// Cube family over which weight constants are maximized.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CubeSampler {
    /// Every distinct atom-centered cube. Exhaustive; quadratic in the atom
    /// count, intended for domains up to a few thousand atoms.
    Exact,
    /// Atom-centered cubes with sides diameter * 2^-k, k = 0..=depth.
    Dyadic { depth: u32 },
}

impl Default for CubeSampler {
    fn default() -> Self {
        CubeSampler::Exact
    }
}

fn check_weight(w: &ScalarField) -> Result<()> {
    if let Some(i) = w.values().iter().position(|&v| v <= 0.0) {
        return Err(Error::InvalidWeight(format!(
            "weight must be strictly positive; value {} at atom {i}",
            w.value(i)
        )));
    }
    Ok(())
}

/// Scan the sampled cube family around every center, reducing each cube's
/// prefix aggregate to a candidate value, and return the maximum.
///
/// `fold` absorbs one atom into the running state; `eval` turns the state
/// after a complete tie group into a candidate (or `None` to skip).
fn scan_max<S: Clone + Send>(
    idx: &DomainIndex,
    sampler: &CubeSampler,
    init: S,
    fold: impl Fn(&mut S, usize) + Sync,
    eval: impl Fn(&S) -> Option<f64> + Sync,
) -> f64
where
    S: Sync,
{
    let d = idx.domain();
    let diam = d.diameter();
    (0..d.len())
        .into_par_iter()
        .map(|c| {
            let mut states: Vec<(f64, S)> = Vec::new();
            let mut state = init.clone();
            idx.for_each_group(c, |dist, members| {
                for &j in members {
                    fold(&mut state, j as usize);
                }
                states.push((dist, state.clone()));
            });
            let mut local = f64::NEG_INFINITY;
            match sampler {
                CubeSampler::Exact => {
                    for (_, s) in &states {
                        if let Some(v) = eval(s) {
                            local = local.max(v);
                        }
                    }
                }
                CubeSampler::Dyadic { depth } => {
                    for k in 0..=*depth {
                        let r = diam * 0.5f64.powi(k as i32);
                        if r <= 0.0 {
                            break;
                        }
                        let g = states.partition_point(|(dist, _)| *dist <= r / 2.0);
                        if g == 0 {
                            continue;
                        }
                        if let Some(v) = eval(&states[g - 1].1) {
                            local = local.max(v);
                        }
                    }
                }
            }
            local
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Muckenhoupt A_s constant estimate for s > 1:
/// max over sampled cubes of (avg of w) * (avg of w^(-1/(s-1)))^(s-1),
/// averages taken against the atomic measure restricted to the cube.
/// Always at least 1 (up to rounding) by Jensen's inequality.
pub fn muckenhoupt_constant(
    idx: &DomainIndex,
    w: &ScalarField,
    s: f64,
    sampler: &CubeSampler,
) -> Result<f64> {
    if w.domain().len() != idx.domain().len() {
        return Err(Error::InvalidWeight(
            "weight and index live on different domains".into(),
        ));
    }
    if !(s.is_finite() && s > 1.0) {
        return Err(Error::InvalidWeight(format!(
            "A_s requires s > 1, got {s}; use a1_constant for s = 1"
        )));
    }
    check_weight(w)?;
    let d = idx.domain();
    let dual = -1.0 / (s - 1.0);
    // running (mass, integral of w, integral of w^dual)
    let c = scan_max(
        idx,
        sampler,
        (0.0f64, 0.0f64, 0.0f64),
        |state, j| {
            let m = d.mass(j);
            state.0 += m;
            state.1 += w.value(j) * m;
            state.2 += w.value(j).powf(dual) * m;
        },
        |&(mass, iw, idual)| {
            if mass == 0.0 {
                None
            } else {
                Some((iw / mass) * (idual / mass).powf(s - 1.0))
            }
        },
    );
    Ok(c)
}

/// A_1 constant estimate: max over sampled cubes of
/// (avg of w) / (min of w over the cube).
pub fn a1_constant(idx: &DomainIndex, w: &ScalarField, sampler: &CubeSampler) -> Result<f64> {
    if w.domain().len() != idx.domain().len() {
        return Err(Error::InvalidWeight(
            "weight and index live on different domains".into(),
        ));
    }
    check_weight(w)?;
    let d = idx.domain();
    let c = scan_max(
        idx,
        sampler,
        (0.0f64, 0.0f64, f64::INFINITY),
        |state, j| {
            let m = d.mass(j);
            state.0 += m;
            state.1 += w.value(j) * m;
            state.2 = state.2.min(w.value(j));
        },
        |&(mass, iw, wmin)| {
            if mass == 0.0 {
                None
            } else {
                Some((iw / mass) / wmin)
            }
        },
    );
    Ok(c)
}

/// Buildable description of a weight, usable in config files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    /// |x - x0|^eta.
    Power { x0: Vec<f64>, eta: f64 },
    /// Product of power factors around several centers.
    ProductPower { factors: Vec<PowerFactor> },
    /// max(floor, max_i |x - x_i|^-theta): bounded below by `floor`
    /// (default 1) with clipped power singularities at the given points.
    ClippedPower {
        singularities: Vec<Vec<f64>>,
        theta: f64,
        #[serde(default = "default_floor")]
        floor: f64,
    },
    /// w1^(1/q_eps^-) * w2^((1/q_eps^-)(1 - inf s_eps^-)), the composite
    /// weight transferring a pair of A_1 weights into the shifted class.
    /// Realization requires an exponent system with a shift.
    Samko {
        w1: Box<WeightSpec>,
        w2: Box<WeightSpec>,
    },
    /// On the mixed example: x^a at the diagonal atoms (x > 0),
    /// |x y|^a at the square atoms.
    #[serde(rename = "paper_example")]
    PaperExample { a: f64 },
    Table { values: Vec<f64> },
}

fn default_floor() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerFactor {
    pub x0: Vec<f64>,
    pub eta: f64,
}

impl WeightSpec {
    pub fn realize(
        &self,
        domain: &Arc<DiscreteDomain>,
        sys: Option<&ExponentSystem>,
    ) -> Result<ScalarField> {
        let field = match self {
            WeightSpec::Power { x0, eta } => build_power_weight(domain, x0, *eta)?,
            WeightSpec::ProductPower { factors } => {
                let mut values = vec![1.0f64; domain.len()];
                for f in factors {
                    let factor = build_power_weight(domain, &f.x0, f.eta)?;
                    for (v, fv) in values.iter_mut().zip(factor.values()) {
                        *v *= fv;
                    }
                }
                ScalarField::from_values(domain.clone(), values, None)?
            }
            WeightSpec::ClippedPower {
                singularities,
                theta,
                floor,
            } => build_clipped_power_weight(domain, singularities, *theta, *floor)?,
            WeightSpec::Samko { w1, w2 } => {
                let sys = sys.ok_or_else(|| {
                    Error::InvalidWeight(
                        "composite weight needs an exponent system with a shift".into(),
                    )
                })?;
                let w1 = w1.realize(domain, Some(sys))?;
                let w2 = w2.realize(domain, Some(sys))?;
                build_samko_weight(&w1, &w2, sys)?
            }
            WeightSpec::PaperExample { a } => build_example_weight(domain, *a)?,
            WeightSpec::Table { values } => {
                ScalarField::from_values(domain.clone(), values.clone(), None)?
            }
        };
        check_weight(&field)?;
        Ok(field)
    }
}

/// |x - x0|^eta sampled on the atoms. Rejected if an atom sits exactly at
/// x0 while eta < 0 (the weight would be infinite) or eta > 0 with the
/// value degenerating to 0.
pub fn build_power_weight(
    domain: &Arc<DiscreteDomain>,
    x0: &[f64],
    eta: f64,
) -> Result<ScalarField> {
    if x0.len() != domain.ambient_dim() {
        return Err(Error::InvalidWeight(format!(
            "weight center has {} coordinates, domain is {}-dimensional",
            x0.len(),
            domain.ambient_dim()
        )));
    }
    let values: Vec<f64> = (0..domain.len())
        .map(|i| l2_dist(domain.coords(i), x0).powf(eta))
        .collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Error::InvalidWeight(format!(
            "power weight degenerate at atom {i} (atom coincides with the center)"
        )));
    }
    ScalarField::from_values(domain.clone(), values, None)
}

pub fn build_clipped_power_weight(
    domain: &Arc<DiscreteDomain>,
    singularities: &[Vec<f64>],
    theta: f64,
    floor: f64,
) -> Result<ScalarField> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::InvalidWeight(format!(
            "clipped power exponent theta must be positive, got {theta}"
        )));
    }
    if !(floor.is_finite() && floor >= 1.0) {
        return Err(Error::InvalidWeight(format!(
            "clip floor must be at least 1, got {floor}"
        )));
    }
    for s in singularities {
        if s.len() != domain.ambient_dim() {
            return Err(Error::InvalidWeight("singularity dimension mismatch".into()));
        }
    }
    let values: Vec<f64> = (0..domain.len())
        .map(|i| {
            let spike = singularities
                .iter()
                .map(|s| l2_dist(domain.coords(i), s).powf(-theta))
                .fold(0.0f64, f64::max);
            floor.max(spike)
        })
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidWeight(
            "an atom coincides with a clipped power singularity".into(),
        ));
    }
    ScalarField::from_values(domain.clone(), values, None)
}

/// Composite weight w1^(1/q_eps^-) * w2^((1/q_eps^-)(1 - inf s_eps^-)),
/// pointwise in the shifted exponent q_eps^-.
pub fn build_samko_weight(
    w1: &ScalarField,
    w2: &ScalarField,
    sys: &ExponentSystem,
) -> Result<ScalarField> {
    check_weight(w1)?;
    check_weight(w2)?;
    w1.check_same_domain(w2)?;
    let shifted = sys.shifted().ok_or_else(|| {
        Error::InvalidWeight("composite weight needs an exponent system with a shift".into())
    })?;
    let s_minus_inf = shifted.s_minus.min_value();
    let q_minus = &shifted.q_minus;
    let values: Vec<f64> = (0..w1.len())
        .map(|i| {
            let e = 1.0 / q_minus.value(i);
            w1.value(i).powf(e) * w2.value(i).powf(e * (1.0 - s_minus_inf))
        })
        .collect();
    ScalarField::from_values(w1.domain().clone(), values, None)
}

/// w^a pointwise; demands w >= 1 and a >= 1 so the power only amplifies.
pub fn variable_power_weight(w: &ScalarField, a: &ScalarField) -> Result<ScalarField> {
    w.check_same_domain(a)?;
    if w.min_value() < 1.0 {
        return Err(Error::InvalidWeight(format!(
            "variable power needs w >= 1, found {}",
            w.min_value()
        )));
    }
    if a.min_value() < 1.0 {
        return Err(Error::InvalidWeight(format!(
            "variable power needs exponent >= 1, found {}",
            a.min_value()
        )));
    }
    w.zip_map(a, |wv, av| wv.powf(av))
}

/// The mixed example's companion weight: x^a on the diagonal atoms,
/// |x y|^a on the square atoms.
pub fn build_example_weight(domain: &Arc<DiscreteDomain>, a: f64) -> Result<ScalarField> {
    if domain.ambient_dim() != 2 {
        return Err(Error::InvalidWeight(
            "example weight is defined on the 2-dimensional mixed example".into(),
        ));
    }
    let values: Vec<f64> = (0..domain.len())
        .map(|i| {
            let c = domain.coords(i);
            if c[0] > 0.0 {
                c[0].powf(a)
            } else {
                (c[0] * c[1]).abs().powf(a)
            }
        })
        .collect();
    ScalarField::from_values(domain.clone(), values, None)
}

/// Admissible window (-n/q(x0), n/p'(x0)) for the power weight exponent at
/// center x0, evaluated via the exponent field's analytic tag when present
/// and at the nearest atom otherwise.
pub fn power_weight_window(sys: &ExponentSystem, x0: &[f64]) -> Result<(f64, f64)> {
    let domain = sys.p().domain();
    let n = domain.ambient_dim() as f64;
    if x0.len() != domain.ambient_dim() {
        return Err(Error::InvalidWeight("window center dimension mismatch".into()));
    }
    let p_at = match sys.p().spec().and_then(|s| s.eval(x0)) {
        Some(v) => v,
        None => {
            let nearest = (0..domain.len())
                .min_by(|&a, &b| {
                    l2_dist(domain.coords(a), x0)
                        .partial_cmp(&l2_dist(domain.coords(b), x0))
                        .unwrap()
                })
                .expect("domains are nonempty");
            sys.p().value(nearest)
        }
    };
    if p_at <= 1.0 {
        return Err(Error::InvalidExponent(format!(
            "p(x0) = {p_at} must exceed 1"
        )));
    }
    let q_at = 1.0 / (1.0 / p_at - sys.alpha() / sys.beta());
    let p_conj_at = p_at / (p_at - 1.0);
    Ok((-n / q_at, n / p_conj_at))
}
