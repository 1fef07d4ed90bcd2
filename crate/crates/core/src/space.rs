//! Modulars and Luxemburg norms with variable exponents.
//!
//! For a field f, an exponent field p >= 1, and an optional integration
//! subset, the modular is sum of |f(x)|^p(x) mass(x) over the subset. The
//! Luxemburg norm is the infimum of lambda > 0 with modular(f/lambda) <= 1;
//! since the modular is strictly decreasing in lambda wherever it is
//! positive, the norm is located by bracketing and bisection.

use crate::error::{Error, Result};
use crate::fields::{OmegaSet, ScalarField};

/// Compensated (Kahan) summation; keeps modular sums deterministic and
/// accurate independent of atom count.
pub(crate) fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

fn subset_indices<'a>(f: &ScalarField, subset: Option<&'a OmegaSet>) -> Result<Vec<usize>> {
    match subset {
        None => Ok((0..f.len()).collect()),
        Some(s) => {
            if s.domain().len() != f.domain().len() {
                return Err(Error::InvalidField(
                    "subset and field live on different domains".into(),
                ));
            }
            Ok(s.indices().to_vec())
        }
    }
}

fn check_exponent_on(p: &ScalarField, indices: &[usize]) -> Result<()> {
    for &i in indices {
        if p.value(i) < 1.0 {
            return Err(Error::InvalidExponent(format!(
                "exponent {} at atom {i} violates p >= 1 on the integration set",
                p.value(i)
            )));
        }
    }
    Ok(())
}

/// sum over the subset of |f(x)|^p(x) mass(x).
pub fn modular(f: &ScalarField, p: &ScalarField, subset: Option<&OmegaSet>) -> Result<f64> {
    f.check_same_domain(p)?;
    let indices = subset_indices(f, subset)?;
    check_exponent_on(p, &indices)?;
    let d = f.domain();
    Ok(kahan_sum(indices.iter().map(|&i| {
        let v = f.value(i).abs();
        if v == 0.0 {
            0.0
        } else {
            v.powf(p.value(i)) * d.mass(i)
        }
    })))
}

fn modular_unchecked(f: &ScalarField, p: &ScalarField, indices: &[usize], lambda: f64) -> f64 {
    let d = f.domain();
    kahan_sum(indices.iter().map(|&i| {
        let v = f.value(i).abs() / lambda;
        if v == 0.0 {
            0.0
        } else {
            v.powf(p.value(i)) * d.mass(i)
        }
    }))
}

/// Outcome of a Luxemburg norm computation.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct NormResult {
    pub value: f64,
    pub iterations: u32,
    pub bracket: (f64, f64),
    pub modular_at_value: f64,
}

pub const DEFAULT_NORM_TOL: f64 = 1e-10;

/// Luxemburg norm of f with exponent p over the subset, bisected to the
/// given relative tolerance on lambda (default 1e-10 when `None`).
///
/// The returned value sits at the upper end of the final bracket, so the
/// modular at the value never exceeds 1 by more than the bisection error.
pub fn luxemburg_norm(
    f: &ScalarField,
    p: &ScalarField,
    subset: Option<&OmegaSet>,
    tol: Option<f64>,
) -> Result<NormResult> {
    let tol = tol.unwrap_or(DEFAULT_NORM_TOL);
    if !(tol.is_finite() && tol > 0.0 && tol < 1.0) {
        return Err(Error::Norm(format!("tolerance {tol} out of range (0, 1)")));
    }
    f.check_same_domain(p)?;
    let indices = subset_indices(f, subset)?;
    check_exponent_on(p, &indices)?;

    if indices.iter().all(|&i| f.value(i) == 0.0) {
        return Ok(NormResult {
            value: 0.0,
            iterations: 0,
            bracket: (0.0, 0.0),
            modular_at_value: 0.0,
        });
    }

    let p_inf = indices
        .iter()
        .map(|&i| p.value(i))
        .fold(f64::INFINITY, f64::min);
    let rho = modular_unchecked(f, p, &indices, 1.0);
    // Initial guess rho^(1/inf p): an upper bound for lambda* when rho > 1
    // and a lower bound when rho <= 1. Falls back to the sup of |f| if the
    // unscaled modular overflowed.
    let mut guess = if rho.is_finite() {
        rho.powf(1.0 / p_inf)
    } else {
        indices.iter().map(|&i| f.value(i).abs()).fold(0.0, f64::max)
    };
    if !(guess.is_finite() && guess > 0.0) {
        guess = 1.0;
    }

    let mut iterations = 0u32;
    let eval = |lambda: f64, iterations: &mut u32| -> f64 {
        *iterations += 1;
        modular_unchecked(f, p, &indices, lambda)
    };

    // Establish lo with modular >= 1 and hi with modular <= 1.
    let (mut lo, mut hi);
    if eval(guess, &mut iterations) >= 1.0 {
        lo = guess;
        hi = guess * 2.0;
        while eval(hi, &mut iterations) > 1.0 {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::Norm("bracketing diverged upward".into()));
            }
        }
    } else {
        hi = guess;
        lo = guess / 2.0;
        while eval(lo, &mut iterations) < 1.0 {
            hi = lo;
            lo /= 2.0;
            if lo < f64::MIN_POSITIVE {
                return Err(Error::Norm("bracketing diverged toward zero".into()));
            }
        }
    }

    while hi - lo > tol * lo {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket at floating point resolution
        }
        if eval(mid, &mut iterations) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let modular_at_value = modular_unchecked(f, p, &indices, hi);
    Ok(NormResult {
        value: hi,
        iterations,
        bracket: (lo, hi),
        modular_at_value,
    })
}

/// Both sides of the generalized Hoelder inequality
/// integral |f g| dmu <= C ||f||_p ||g||_p'.
#[derive(Debug, Clone, Copy)]
pub struct HolderCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// lhs / rhs; 0 when both sides vanish.
    pub ratio: f64,
}

/// Evaluate the Hoelder pairing for f and g with conjugate exponents
/// derived from p. Requires inf p > 1 so the conjugate stays finite.
pub fn check_holder(f: &ScalarField, g: &ScalarField, p: &ScalarField) -> Result<HolderCheck> {
    f.check_same_domain(g)?;
    f.check_same_domain(p)?;
    if p.min_value() <= 1.0 {
        return Err(Error::InvalidExponent(format!(
            "inf p = {} must exceed 1 for the conjugate exponent",
            p.min_value()
        )));
    }
    let d = f.domain();
    let lhs = kahan_sum((0..f.len()).map(|i| f.value(i).abs() * g.value(i).abs() * d.mass(i)));
    let p_conj = p.map(|v| v / (v - 1.0))?;
    let nf = luxemburg_norm(f, p, None, None)?.value;
    let ng = luxemburg_norm(g, &p_conj, None, None)?.value;
    let rhs = nf * ng;
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(HolderCheck { lhs, rhs, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{DiscreteDomain, DomainSpec};
    use crate::fields::FieldSpec;
    use std::sync::Arc;

    fn interval(n: usize) -> Arc<DiscreteDomain> {
        Arc::new(DomainSpec::unit_interval(n).build().unwrap())
    }

    #[test]
    fn modular_of_indicator_is_its_mass() {
        let d = interval(8); // masses 1/8
        let mut values = vec![0.0; 8];
        values[3] = 1.0;
        let f = ScalarField::from_values(d.clone(), values, None).unwrap();
        let p = ScalarField::constant(d, 2.5).unwrap();
        let m = modular(&f, &p, None).unwrap();
        assert!((m - 0.125).abs() < 1e-15);
    }

    #[test]
    fn modular_rejects_exponent_below_one() {
        let d = interval(8);
        let f = ScalarField::constant(d.clone(), 1.0).unwrap();
        let p = ScalarField::constant(d, 0.9).unwrap();
        assert!(modular(&f, &p, None).is_err());
    }

    #[test]
    fn modular_subset_ignores_outside_exponents() {
        // p dips below 1 outside the subset; the subset-restricted modular
        // must still be accepted
        let d = interval(10);
        let p = FieldSpec::Step {
            axis: 0,
            threshold: 0.5,
            left: 0.5,
            right: 2.0,
        }
        .realize(&d)
        .unwrap();
        let f = ScalarField::constant(d.clone(), 2.0).unwrap();
        let subset = OmegaSet::from_indices(d, (5..10).collect()).unwrap();
        assert!(modular(&f, &p, None).is_err());
        let m = modular(&f, &p, Some(&subset)).unwrap();
        assert!((m - 4.0 * 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_exponent_norm_matches_closed_form() {
        let d = interval(16);
        let f = FieldSpec::Power {
            x0: vec![0.0],
            eta: 1.0,
        }
        .realize(&d)
        .unwrap();
        for p0 in [1.5, 2.0, 3.0] {
            let p = ScalarField::constant(d.clone(), p0).unwrap();
            let rho = modular(&f, &p, None).unwrap();
            let expected = rho.powf(1.0 / p0);
            let got = luxemburg_norm(&f, &p, None, None).unwrap().value;
            assert!(
                (got - expected).abs() <= 1e-9 * expected,
                "p = {p0}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn two_piece_exponent_norms_have_closed_forms() {
        // p = 2 on the left half, 3 on the right, f constant, unit total
        // mass. For f = 1 the modular at lambda solves
        // 0.5 lambda^-2 + 0.5 lambda^-3 = 1, i.e. lambda = 1; for f = 2,
        // 2 lambda^-2 + 4 lambda^-3 = 1, i.e. lambda = 2.
        let d = interval(16);
        let p = FieldSpec::Step {
            axis: 0,
            threshold: 0.5,
            left: 2.0,
            right: 3.0,
        }
        .realize(&d)
        .unwrap();
        let one = ScalarField::constant(d.clone(), 1.0).unwrap();
        let got = luxemburg_norm(&one, &p, None, None).unwrap();
        assert!((got.value - 1.0).abs() < 1e-9, "norm {}", got.value);
        assert!((got.modular_at_value - 1.0).abs() < 1e-8);
        let two = ScalarField::constant(d, 2.0).unwrap();
        let got = luxemburg_norm(&two, &p, None, None).unwrap();
        assert!((got.value - 2.0).abs() < 2e-9, "norm {}", got.value);
    }

    #[test]
    fn zero_field_has_zero_norm_and_no_iterations() {
        let d = interval(8);
        let f = ScalarField::constant(d.clone(), 0.0).unwrap();
        let p = ScalarField::constant(d, 2.0).unwrap();
        let r = luxemburg_norm(&f, &p, None, None).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.modular_at_value, 0.0);
    }

    #[test]
    fn norm_is_homogeneous() {
        let d = interval(32);
        let f = FieldSpec::LogPerturb {
            base: 1.0,
            amp: 2.0,
            x0: vec![0.3],
        }
        .realize(&d)
        .unwrap();
        let p = FieldSpec::LogPerturb {
            base: 2.0,
            amp: 1.0,
            x0: vec![0.7],
        }
        .realize(&d)
        .unwrap();
        let base = luxemburg_norm(&f, &p, None, None).unwrap().value;
        for c in [0.25, 3.0, 117.0] {
            let scaled = luxemburg_norm(&f.scale(c).unwrap(), &p, None, None)
                .unwrap()
                .value;
            assert!(
                (scaled - c * base).abs() <= 1e-9 * c * base,
                "c = {c}: {scaled} vs {}",
                c * base
            );
        }
    }

    #[test]
    fn unit_ball_property() {
        let d = interval(24);
        let f = FieldSpec::Power {
            x0: vec![0.5],
            eta: 0.5,
        }
        .realize(&d)
        .unwrap();
        let p = FieldSpec::LogPerturb {
            base: 1.5,
            amp: 1.0,
            x0: vec![0.0],
        }
        .realize(&d)
        .unwrap();
        let r = luxemburg_norm(&f, &p, None, None).unwrap();
        assert!((r.modular_at_value - 1.0).abs() <= 1e-8);
        assert!(r.bracket.0 <= r.value && r.value <= r.bracket.1);
    }

    #[test]
    fn holder_budget_of_two() {
        let d = interval(32);
        let f = FieldSpec::Power {
            x0: vec![0.0],
            eta: 0.7,
        }
        .realize(&d)
        .unwrap();
        let g = FieldSpec::Power {
            x0: vec![1.0],
            eta: 0.3,
        }
        .realize(&d)
        .unwrap();
        let p = FieldSpec::Step {
            axis: 0,
            threshold: 0.4,
            left: 2.0,
            right: 2.5,
        }
        .realize(&d)
        .unwrap();
        let h = check_holder(&f, &g, &p).unwrap();
        assert!(h.ratio <= 2.0, "ratio {}", h.ratio);
        assert!(h.ratio > 0.0);
    }

    #[test]
    fn holder_zero_when_supports_disjoint() {
        let d = interval(8);
        let mut a = vec![0.0; 8];
        a[0] = 5.0;
        let mut b = vec![0.0; 8];
        b[7] = 3.0;
        let f = ScalarField::from_values(d.clone(), a, None).unwrap();
        let g = ScalarField::from_values(d.clone(), b, None).unwrap();
        let p = ScalarField::constant(d, 2.0).unwrap();
        let h = check_holder(&f, &g, &p).unwrap();
        assert_eq!(h.lhs, 0.0);
        assert_eq!(h.ratio, 0.0);
        assert!(h.rhs > 0.0);
    }
}
