//! Scalar fields on a domain, exponent systems, and level-set machinery.
//!
//! A [`ScalarField`] is one finite value per atom, optionally tagged with
//! the analytic expression it was sampled from so it can be resampled on a
//! refined grid. [`ExponentSystem`] bundles a variable exponent p with the
//! operator order alpha and the regularity dimension beta, and derives the
//! conjugate, Sobolev, and shifted exponents used by the inequality
//! harness. [`omega_set`] carves out the super-level set of a field with a
//! safety margin away from its complement.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{l2_dist, DiscreteDomain};
use crate::error::{Error, Result};

/// Analytic description of a field, evaluable at arbitrary points. Table
/// fields carry raw samples and cannot be resampled on a refined domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Constant {
        value: f64,
    },
    /// |x - x0|^eta (Euclidean distance).
    Power {
        x0: Vec<f64>,
        eta: f64,
    },
    /// base + amp / ln(e + 1/|x - x0|): a log-Hoelder continuous bump.
    #[serde(rename = "logperturb")]
    LogPerturb {
        base: f64,
        amp: f64,
        x0: Vec<f64>,
    },
    /// Jump along one axis: `left` where coordinate < threshold, else
    /// `right`. Deliberately not log-Hoelder; used as a negative control.
    Step {
        axis: usize,
        threshold: f64,
        left: f64,
        right: f64,
    },
    Table {
        values: Vec<f64>,
    },
}

impl FieldSpec {
    pub fn constant(value: f64) -> Self {
        FieldSpec::Constant { value }
    }

    /// Pointwise evaluation; `None` for table specs.
    pub fn eval(&self, point: &[f64]) -> Option<f64> {
        match self {
            FieldSpec::Constant { value } => Some(*value),
            FieldSpec::Power { x0, eta } => Some(l2_dist(point, x0).powf(*eta)),
            FieldSpec::LogPerturb { base, amp, x0 } => {
                let d = l2_dist(point, x0);
                // at d = 0 the perturbation vanishes in the limit
                Some(base + amp / (std::f64::consts::E + 1.0 / d).ln())
            }
            FieldSpec::Step {
                axis,
                threshold,
                left,
                right,
            } => Some(if point[*axis] < *threshold { *left } else { *right }),
            FieldSpec::Table { .. } => None,
        }
    }

    pub fn is_resamplable(&self) -> bool {
        !matches!(self, FieldSpec::Table { .. })
    }

    pub fn realize(&self, domain: &Arc<DiscreteDomain>) -> Result<ScalarField> {
        match self {
            FieldSpec::Table { values } => {
                ScalarField::from_values(domain.clone(), values.clone(), Some(self.clone()))
            }
            FieldSpec::Step { axis, .. } if *axis >= domain.ambient_dim() => {
                Err(Error::InvalidField(format!(
                    "step axis {axis} out of range for ambient dimension {}",
                    domain.ambient_dim()
                )))
            }
            _ => {
                let values: Vec<f64> = (0..domain.len())
                    .map(|i| self.eval(domain.coords(i)).unwrap())
                    .collect();
                ScalarField::from_values(domain.clone(), values, Some(self.clone()))
            }
        }
    }
}

/// Finite per-atom samples of a scalar function.
#[derive(Debug, Clone)]
pub struct ScalarField {
    domain: Arc<DiscreteDomain>,
    values: Vec<f64>,
    spec: Option<FieldSpec>,
}

impl ScalarField {
    pub fn from_values(
        domain: Arc<DiscreteDomain>,
        values: Vec<f64>,
        spec: Option<FieldSpec>,
    ) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::InvalidField(format!(
                "{} values for {} atoms",
                values.len(),
                domain.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!(
                "non-finite value {} at atom {i}",
                values[i]
            )));
        }
        Ok(ScalarField { domain, values, spec })
    }

    pub fn constant(domain: Arc<DiscreteDomain>, value: f64) -> Result<Self> {
        let n = domain.len();
        ScalarField::from_values(domain, vec![value; n], Some(FieldSpec::Constant { value }))
    }

    pub fn domain(&self) -> &Arc<DiscreteDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spec(&self) -> Option<&FieldSpec> {
        self.spec.as_ref()
    }

    /// Pointwise transform. The analytic tag is dropped: the result is no
    /// longer a sample of a known expression.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<ScalarField> {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        ScalarField::from_values(self.domain.clone(), values, None)
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        self.check_same_domain(other)?;
        let values: Vec<f64> = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        ScalarField::from_values(self.domain.clone(), values, None)
    }

    pub fn scale(&self, c: f64) -> Result<ScalarField> {
        self.map(|v| c * v)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Extrema restricted to a subset of atoms; `None` if the subset is empty.
    pub fn extrema_on(&self, indices: &[usize]) -> Option<(f64, f64)> {
        if indices.is_empty() {
            return None;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in indices {
            lo = lo.min(self.values[i]);
            hi = hi.max(self.values[i]);
        }
        Some((lo, hi))
    }

    pub fn check_same_domain(&self, other: &ScalarField) -> Result<()> {
        if self.domain.len() != other.domain.len() {
            return Err(Error::InvalidField(format!(
                "fields live on different domains ({} vs {} atoms)",
                self.domain.len(),
                other.domain.len()
            )));
        }
        Ok(())
    }
}

/// Smallest C such that |t(x) - t(y)| <= C / ln(1/|x-y|) over all atom pairs
/// with 0 < |x - y| <= 1/2. Pairs further apart carry no information (the
/// logarithm is too small) and are ignored.
pub fn log_holder_constant(t: &ScalarField) -> Result<f64> {
    Ok(log_holder_witness(t)?.0)
}

/// Same scan, also reporting the attaining pair.
pub fn log_holder_witness(t: &ScalarField) -> Result<(f64, (usize, usize))> {
    let d = t.domain();
    let n = d.len();
    let mut best = -1.0f64;
    let mut pair = (0usize, 0usize);
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = l2_dist(d.coords(i), d.coords(j));
            if dist <= 0.0 || dist > 0.5 {
                continue;
            }
            let c = (t.value(i) - t.value(j)).abs() * (1.0 / dist).ln();
            if c > best {
                best = c;
                pair = (i, j);
            }
        }
    }
    if best < 0.0 {
        return Err(Error::InvalidField(
            "no atom pairs within distance 1/2; log-Hoelder constant undefined".into(),
        ));
    }
    Ok((best, pair))
}

/// A variable exponent p together with the operator order alpha and the
/// regularity dimension beta, plus every exponent derived from them:
///
/// * conjugate p' with 1/p + 1/p' = 1,
/// * Sobolev image q with 1/q = 1/p - alpha/beta,
/// * s = 1 + q/p' (equal to p when alpha = 0),
/// * optional shifted pair q_eps^{+/-} with 1/q_eps = 1/p - (alpha+/-eps)/beta
///   and their s_eps counterparts, for a shift eps inside the admissible
///   window 0 < eps < min(alpha, beta - alpha, beta/sup q,
///   beta (1/sup p - 1/inf q)).
#[derive(Debug, Clone)]
pub struct ExponentSystem {
    p: ScalarField,
    alpha: f64,
    beta: f64,
    epsilon: Option<f64>,
    p_conj: ScalarField,
    q: ScalarField,
    s: ScalarField,
    shifted: Option<ShiftedExponents>,
}

#[derive(Debug, Clone)]
pub struct ShiftedExponents {
    pub q_plus: ScalarField,
    pub q_minus: ScalarField,
    pub s_plus: ScalarField,
    pub s_minus: ScalarField,
}

impl ExponentSystem {
    pub fn build(p: ScalarField, alpha: f64, beta: f64, epsilon: Option<f64>) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidExponent(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidExponent(format!(
                "alpha must be nonnegative and finite, got {alpha}"
            )));
        }
        if alpha >= beta {
            return Err(Error::InvalidExponent(format!(
                "alpha {alpha} must be below beta {beta}"
            )));
        }
        let p_inf = p.min_value();
        let p_sup = p.max_value();
        if p_inf <= 1.0 {
            return Err(Error::InvalidExponent(format!(
                "inf p = {p_inf} violates 1 < inf p"
            )));
        }
        if alpha > 0.0 && p_sup >= beta / alpha {
            return Err(Error::InvalidExponent(format!(
                "sup p = {p_sup} violates sup p < beta/alpha = {}",
                beta / alpha
            )));
        }
        let p_conj = p.map(|v| v / (v - 1.0))?;
        let q = p.map(|v| 1.0 / (1.0 / v - alpha / beta))?;
        let s = q.zip_map(&p_conj, |qv, pcv| 1.0 + qv / pcv)?;
        let shifted = match epsilon {
            None => None,
            Some(eps) => {
                let q_sup = q.max_value();
                let q_inf = q.min_value();
                let window = (alpha)
                    .min(beta - alpha)
                    .min(beta / q_sup)
                    .min(beta * (1.0 / p_sup - 1.0 / q_inf));
                if !(eps > 0.0 && eps < window) {
                    return Err(Error::InvalidExponent(format!(
                        "epsilon {eps} outside the admissible window (0, {window})"
                    )));
                }
                let q_plus = p.map(|v| 1.0 / (1.0 / v - (alpha + eps) / beta))?;
                let q_minus = p.map(|v| 1.0 / (1.0 / v - (alpha - eps) / beta))?;
                let s_plus = q_plus.zip_map(&p_conj, |qv, pcv| 1.0 + qv / pcv)?;
                let s_minus = q_minus.zip_map(&p_conj, |qv, pcv| 1.0 + qv / pcv)?;
                Some(ShiftedExponents {
                    q_plus,
                    q_minus,
                    s_plus,
                    s_minus,
                })
            }
        };
        Ok(ExponentSystem {
            p,
            alpha,
            beta,
            epsilon,
            p_conj,
            q,
            s,
            shifted,
        })
    }

    pub fn p(&self) -> &ScalarField {
        &self.p
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    pub fn p_conj(&self) -> &ScalarField {
        &self.p_conj
    }

    pub fn q(&self) -> &ScalarField {
        &self.q
    }

    pub fn s(&self) -> &ScalarField {
        &self.s
    }

    pub fn shifted(&self) -> Option<&ShiftedExponents> {
        self.shifted.as_ref()
    }

    pub fn p_inf(&self) -> f64 {
        self.p.min_value()
    }

    pub fn p_sup(&self) -> f64 {
        self.p.max_value()
    }

    pub fn s_inf(&self) -> f64 {
        self.s.min_value()
    }

    pub fn s_sup(&self) -> f64 {
        self.s.max_value()
    }
}

/// Super-level set of a field with an exclusion margin: the atoms x with
/// t(x) > r whose Euclidean distance to every atom of the complement
/// {t <= r} is at least eps (removal by open balls, so ties survive).
#[derive(Debug, Clone)]
pub struct OmegaSet {
    domain: Arc<DiscreteDomain>,
    indices: Vec<usize>,
    params: Option<OmegaParams>,
}

#[derive(Debug, Clone)]
pub struct OmegaParams {
    pub t: ScalarField,
    pub r: f64,
    pub eps: f64,
}

impl OmegaSet {
    /// Explicit atom subset, no level-set interpretation attached.
    pub fn from_indices(domain: Arc<DiscreteDomain>, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.iter().any(|&i| i >= domain.len()) {
            return Err(Error::InvalidField("subset index out of range".into()));
        }
        Ok(OmegaSet {
            domain,
            indices,
            params: None,
        })
    }

    pub fn full(domain: Arc<DiscreteDomain>) -> Self {
        let indices = (0..domain.len()).collect();
        OmegaSet {
            domain,
            indices,
            params: None,
        }
    }

    pub fn domain(&self) -> &Arc<DiscreteDomain> {
        &self.domain
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn params(&self) -> Option<&OmegaParams> {
        self.params.as_ref()
    }

    pub fn complement(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.domain.len() - self.indices.len());
        let mut k = 0;
        for i in 0..self.domain.len() {
            if k < self.indices.len() && self.indices[k] == i {
                k += 1;
            } else {
                out.push(i);
            }
        }
        out
    }

    pub fn measure(&self) -> f64 {
        self.indices.iter().map(|&i| self.domain.mass(i)).sum()
    }
}

/// Build the margin-trimmed super-level set of `t` at level `r`.
pub fn omega_set(t: &ScalarField, r: f64, eps: f64) -> Result<OmegaSet> {
    if !r.is_finite() {
        return Err(Error::InvalidField(format!("level r must be finite, got {r}")));
    }
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InvalidField(format!(
            "margin eps must be nonnegative and finite, got {eps}"
        )));
    }
    let d = t.domain();
    let above: Vec<usize> = (0..d.len()).filter(|&i| t.value(i) > r).collect();
    let below: Vec<usize> = (0..d.len()).filter(|&i| t.value(i) <= r).collect();
    let indices: Vec<usize> = above
        .into_iter()
        .filter(|&i| {
            below
                .iter()
                .all(|&j| l2_dist(d.coords(i), d.coords(j)) >= eps)
        })
        .collect();
    Ok(OmegaSet {
        domain: d.clone(),
        indices,
        params: Some(OmegaParams {
            t: t.clone(),
            r,
            eps,
        }),
    })
}

/// Largest margin eps on the dyadic ladder diameter * 2^-k, k = 1..=depth,
/// for which the trimmed level set still has positive measure.
pub fn find_epsilon0(t: &ScalarField, r: f64, depth: u32) -> Result<f64> {
    let d = t.domain();
    if !(0..d.len()).any(|i| t.value(i) > r) {
        return Err(Error::Preconditions(format!(
            "level set of t above r = {r} is empty"
        )));
    }
    let diam = d.diameter();
    if diam <= 0.0 {
        return Err(Error::Preconditions("domain has zero diameter".into()));
    }
    for k in 1..=depth {
        let eps = diam * 0.5f64.powi(k as i32);
        let set = omega_set(t, r, eps)?;
        if set.measure() > 0.0 {
            return Ok(eps);
        }
    }
    Err(Error::Preconditions(format!(
        "no dyadic margin down to diameter * 2^-{depth} leaves positive measure"
    )))
}
