//! Centered fractional maximal operators and fractional integrals.
//!
//! For an atom x, the cube average entering the maximal operator is a
//! piecewise constant function of the side length, jumping exactly when a
//! new atom enters the closed cube. Exact mode therefore evaluates the
//! quotient once per tie-group prefix of the distance-sorted atom list and
//! takes the true supremum; dyadic mode restricts the side lengths to
//! diameter * 2^-k, k = 0..=depth, and bounds exact mode from below.
//!
//! Prefix sums are accumulated in sorted (distance, index) order with plain
//! sequential additions; results are bit-stable across thread counts.

use std::sync::Arc;

use rayon::prelude::*;

use crate::domain::{l2_dist, DiscreteDomain, DomainIndex};
use crate::error::{Error, Result};
use crate::fields::ScalarField;

/// Which cube family the maximal operator scans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Exact,
    Dyadic { depth: u32 },
}

pub const DEFAULT_DYADIC_DEPTH: u32 = 20;

/// Operator values together with, for maximal operators, the side length of
/// a cube attaining each atom's supremum.
#[derive(Debug, Clone)]
pub struct OperatorOutput {
    pub field: ScalarField,
    pub argmax_radius: Option<Vec<f64>>,
    pub mode: EvalMode,
}

fn check_alpha(alpha: f64, beta: f64, strict_lower: bool) -> Result<()> {
    if !alpha.is_finite() || alpha < 0.0 || (strict_lower && alpha == 0.0) {
        let lower = if strict_lower { "0 < alpha" } else { "0 <= alpha" };
        return Err(Error::InvalidExponent(format!(
            "alpha = {alpha} violates {lower}"
        )));
    }
    if alpha >= beta {
        return Err(Error::InvalidExponent(format!(
            "alpha = {alpha} must be below the regularity dimension beta = {beta}"
        )));
    }
    Ok(())
}

/// One tie group of the distance-sorted scan: every atom at l-infinity
/// distance `dist` from the center, with the running totals after the
/// group has been absorbed.
struct GroupState {
    dist: f64,
    cum_mass: f64,
    cum_int: f64,
}

fn collect_groups(idx: &DomainIndex, f: &ScalarField, center: usize) -> Vec<GroupState> {
    let d = idx.domain();
    let mut groups = Vec::new();
    let mut cum_mass = 0.0f64;
    let mut cum_int = 0.0f64;
    idx.for_each_group(center, |dist, members| {
        for &j in members {
            let j = j as usize;
            cum_mass += d.mass(j);
            cum_int += f.value(j).abs() * d.mass(j);
        }
        groups.push(GroupState {
            dist,
            cum_mass,
            cum_int,
        });
    });
    groups
}

/// mu(Q)^(alpha/beta) * (integral of |f| over Q) / mu(Q), written so that
/// f identically 1 yields mu(Q)^(alpha/beta) exactly.
fn quotient(cum_mass: f64, cum_int: f64, alpha_over_beta: f64) -> f64 {
    cum_mass.powf(alpha_over_beta) * (cum_int / cum_mass)
}

/// The cube side representing the prefix ending at group k: twice the
/// group distance, except for the center-only piece whose open interval of
/// sides (0, 2 d_1) is represented by d_1 (or 1 when no other site exists).
fn group_radius(groups: &[GroupState], k: usize) -> f64 {
    if groups[k].dist > 0.0 {
        2.0 * groups[k].dist
    } else if groups.len() > 1 {
        groups[1].dist
    } else {
        1.0
    }
}

/// Centered fractional maximal operator of order `alpha`.
pub fn maximal(
    idx: &DomainIndex,
    f: &ScalarField,
    alpha: f64,
    mode: EvalMode,
) -> Result<OperatorOutput> {
    let d = idx.domain();
    if f.domain().len() != d.len() {
        return Err(Error::InvalidField(
            "field and index live on different domains".into(),
        ));
    }
    let beta = d.ahlfors_dim();
    check_alpha(alpha, beta, false)?;
    let aob = alpha / beta;
    let diam = d.diameter();

    let per_atom: Vec<(f64, f64)> = (0..d.len())
        .into_par_iter()
        .map(|c| {
            let groups = collect_groups(idx, f, c);
            let mut best = f64::NEG_INFINITY;
            let mut best_r = 0.0f64;
            match mode {
                EvalMode::Exact => {
                    for k in 0..groups.len() {
                        let v = quotient(groups[k].cum_mass, groups[k].cum_int, aob);
                        if v > best {
                            best = v;
                            best_r = group_radius(&groups, k);
                        }
                    }
                }
                EvalMode::Dyadic { depth } => {
                    for k in 0..=depth {
                        let r = diam * 0.5f64.powi(k as i32);
                        if r <= 0.0 {
                            break;
                        }
                        // last group whose entry distance fits inside the cube
                        let g = groups.partition_point(|g| g.dist <= r / 2.0);
                        if g == 0 {
                            continue; // cannot happen: group 0 has distance 0
                        }
                        let g = g - 1;
                        if groups[g].cum_mass == 0.0 {
                            continue;
                        }
                        let v = quotient(groups[g].cum_mass, groups[g].cum_int, aob);
                        if v > best {
                            best = v;
                            best_r = r;
                        }
                    }
                }
            }
            (best, best_r)
        })
        .collect();

    let values: Vec<f64> = per_atom.iter().map(|&(v, _)| v).collect();
    let radii: Vec<f64> = per_atom.iter().map(|&(_, r)| r).collect();
    Ok(OperatorOutput {
        field: ScalarField::from_values(f.domain().clone(), values, None)?,
        argmax_radius: Some(radii),
        mode,
    })
}

/// Discrete fractional integral of order `alpha`:
/// sum over y != x of f(y) |x - y|^alpha / mu(Q(x, 2|x - y|)) mass(y),
/// with Euclidean |x - y| and the self term omitted. Assembled as a kernel
/// matrix so repeated applications on the same domain are cheap.
pub struct FractionalKernel {
    domain: Arc<DiscreteDomain>,
    alpha: f64,
    rows: Vec<Vec<f64>>,
}

impl FractionalKernel {
    pub fn new(idx: &DomainIndex, alpha: f64) -> Result<Self> {
        let d = idx.domain();
        let beta = d.ahlfors_dim();
        check_alpha(alpha, beta, true)?;
        let n = d.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|c| {
                // group distances with cumulative masses, f-independent
                let mut dists = Vec::new();
                let mut masses = Vec::new();
                let mut cum = 0.0f64;
                idx.for_each_group(c, |dist, members| {
                    for &j in members {
                        cum += d.mass(j as usize);
                    }
                    dists.push(dist);
                    masses.push(cum);
                });
                let xc = d.coords(c);
                (0..n)
                    .map(|j| {
                        if j == c {
                            return 0.0;
                        }
                        let r = l2_dist(xc, d.coords(j));
                        if r == 0.0 {
                            return 0.0; // coincident sites: kernel vanishes with |x-y|^alpha
                        }
                        // cube Q(x, 2r) admits atoms with linf distance <= r;
                        // linf <= l2 guarantees both x and y are inside
                        let g = dists.partition_point(|&dd| dd <= r) - 1;
                        r.powf(alpha) * d.mass(j) / masses[g]
                    })
                    .collect()
            })
            .collect();
        Ok(FractionalKernel {
            domain: d.clone(),
            alpha,
            rows,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn apply(&self, f: &ScalarField) -> Result<OperatorOutput> {
        if f.domain().len() != self.domain.len() {
            return Err(Error::InvalidField(
                "field and kernel live on different domains".into(),
            ));
        }
        let values: Vec<f64> = self
            .rows
            .par_iter()
            .map(|row| {
                let mut acc = 0.0f64;
                for (k, &fv) in row.iter().zip(f.values().iter()) {
                    acc += k * fv;
                }
                acc
            })
            .collect();
        Ok(OperatorOutput {
            field: ScalarField::from_values(self.domain.clone(), values, None)?,
            argmax_radius: None,
            mode: EvalMode::Exact,
        })
    }
}

/// One-shot fractional integral (builds the kernel and applies it once).
pub fn fractional_integral(idx: &DomainIndex, f: &ScalarField, alpha: f64) -> Result<OperatorOutput> {
    FractionalKernel::new(idx, alpha)?.apply(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Atom, Cube, DomainSpec};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn two_atoms(dist: f64) -> Arc<DiscreteDomain> {
        Arc::new(
            DiscreteDomain::new(
                1,
                1.0,
                vec![
                    Atom {
                        coords: vec![0.0],
                        mass: 1.0,
                    },
                    Atom {
                        coords: vec![dist],
                        mass: 1.0,
                    },
                ],
            )
            .unwrap(),
        )
    }

    #[test]
    fn two_atom_maximal_matches_hand_computation() {
        let d = two_atoms(0.5);
        let idx = DomainIndex::new(d.clone());
        let f = ScalarField::from_values(d, vec![1.0, 0.0], None).unwrap();
        let out = maximal(&idx, &f, 0.0, EvalMode::Exact).unwrap();
        // at the second atom the candidates are its own average 0 and the
        // two-atom average 1/2
        assert_eq!(out.field.value(1), 0.5);
        assert_eq!(out.field.value(0), 1.0);
    }

    #[test]
    fn two_atom_fractional_integral_matches_hand_computation() {
        let d = two_atoms(0.25);
        let idx = DomainIndex::new(d.clone());
        let f = ScalarField::from_values(d, vec![1.0, 0.0], None).unwrap();
        let out = fractional_integral(&idx, &f, 0.5).unwrap();
        // I f(x2) = 1 * 0.25^0.5 / mu(Q(x2, 0.5)) * 1 = 0.5 / 2
        assert!((out.field.value(1) - 0.25f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(out.field.value(0), 0.0); // f vanishes away from x1
    }

    #[test]
    fn hardy_littlewood_of_one_is_one_exactly() {
        let d = Arc::new(DomainSpec::unit_square(8).build().unwrap());
        let idx = DomainIndex::new(d.clone());
        let f = ScalarField::constant(d, 1.0).unwrap();
        for mode in [EvalMode::Exact, EvalMode::Dyadic { depth: 10 }] {
            let out = maximal(&idx, &f, 0.0, mode).unwrap();
            assert!(out.field.values().iter().all(|&v| v == 1.0));
        }
    }

    #[test]
    fn fractional_maximal_of_one_is_total_mass_power_exactly() {
        let d = Arc::new(DiscreteDomain::mixed_example(8).unwrap());
        let idx = DomainIndex::new(d.clone());
        let f = ScalarField::constant(d.clone(), 1.0).unwrap();
        let alpha = 0.75;
        let expected = d.total_mass().powf(alpha / d.ahlfors_dim());
        let out = maximal(&idx, &f, alpha, EvalMode::Exact).unwrap();
        for &v in out.field.values() {
            assert_eq!(v, expected);
        }
    }

    #[test]
    fn alpha_out_of_range_rejected() {
        let d = Arc::new(DomainSpec::unit_square(4).build().unwrap());
        let idx = DomainIndex::new(d.clone());
        let f = ScalarField::constant(d, 1.0).unwrap();
        assert!(maximal(&idx, &f, 2.0, EvalMode::Exact).is_err());
        assert!(maximal(&idx, &f, -0.5, EvalMode::Exact).is_err());
        assert!(fractional_integral(&idx, &f, 0.0).is_err());
        assert!(fractional_integral(&idx, &f, 2.0).is_err());
    }

    #[test]
    fn dyadic_never_exceeds_exact() {
        let d = Arc::new(DomainSpec::unit_square(6).build().unwrap());
        let idx = DomainIndex::new(d.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let values: Vec<f64> = (0..d.len()).map(|_| rng.gen::<f64>() * 3.0).collect();
        let f = ScalarField::from_values(d, values, None).unwrap();
        for alpha in [0.0, 0.5, 1.0] {
            let exact = maximal(&idx, &f, alpha, EvalMode::Exact).unwrap();
            let dyadic = maximal(&idx, &f, alpha, EvalMode::Dyadic { depth: 12 }).unwrap();
            for i in 0..f.len() {
                assert!(dyadic.field.value(i) <= exact.field.value(i) + 1e-15);
            }
        }
    }

    /// Brute-force oracle: enumerate every distinct cube around the center
    /// by explicit membership tests and evaluate the quotient by summing
    /// members in (distance, index) order. Must agree with exact mode
    /// bit for bit.
    fn maximal_oracle(d: &Arc<DiscreteDomain>, f: &ScalarField, alpha: f64) -> Vec<(f64, f64)> {
        use crate::domain::linf_dist;
        let beta = d.ahlfors_dim();
        let aob = alpha / beta;
        (0..d.len())
            .map(|c| {
                let xc = d.coords(c);
                let mut dists: Vec<f64> =
                    (0..d.len()).map(|j| linf_dist(xc, d.coords(j))).collect();
                dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
                dists.dedup();
                // candidate sides: the center-only piece plus one side per
                // distinct positive entry distance
                let mut sides = Vec::new();
                if dists.len() > 1 {
                    sides.push(dists[1]);
                    sides.extend(dists.iter().skip(1).map(|&dd| 2.0 * dd));
                } else {
                    sides.push(1.0);
                }
                let mut best = f64::NEG_INFINITY;
                let mut best_r = 0.0;
                for &side in &sides {
                    let q = Cube {
                        center: xc.to_vec(),
                        side,
                    };
                    let mut members: Vec<usize> = (0..d.len())
                        .filter(|&j| q.contains(d.coords(j)))
                        .collect();
                    members.sort_by(|&a, &b| {
                        linf_dist(xc, d.coords(a))
                            .partial_cmp(&linf_dist(xc, d.coords(b)))
                            .unwrap()
                            .then(a.cmp(&b))
                    });
                    let mut mass = 0.0f64;
                    let mut int = 0.0f64;
                    for &j in &members {
                        mass += d.mass(j);
                        int += f.value(j).abs() * d.mass(j);
                    }
                    if mass == 0.0 {
                        continue;
                    }
                    let v = mass.powf(aob) * (int / mass);
                    if v > best {
                        best = v;
                        best_r = side;
                    }
                }
                (best, best_r)
            })
            .collect()
    }

    #[test]
    fn exact_mode_matches_brute_force_bit_for_bit() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..30 {
            let n = rng.gen_range(2..=30);
            let dim = rng.gen_range(1..=2);
            let atoms: Vec<Atom> = (0..n)
                .map(|_| Atom {
                    coords: (0..dim).map(|_| rng.gen::<f64>()).collect(),
                    mass: rng.gen::<f64>() + 0.1,
                })
                .collect();
            let d = Arc::new(DiscreteDomain::new(dim, dim as f64, atoms).unwrap());
            let idx = DomainIndex::new(d.clone());
            let values: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 5.0).collect();
            let f = ScalarField::from_values(d.clone(), values, None).unwrap();
            let alpha = if trial % 3 == 0 { 0.0 } else { rng.gen::<f64>() * 0.9 };
            let got = maximal(&idx, &f, alpha, EvalMode::Exact).unwrap();
            let oracle = maximal_oracle(&d, &f, alpha);
            for i in 0..n {
                assert_eq!(
                    got.field.value(i),
                    oracle[i].0,
                    "trial {trial} atom {i} value mismatch"
                );
                assert_eq!(
                    got.argmax_radius.as_ref().unwrap()[i],
                    oracle[i].1,
                    "trial {trial} atom {i} radius mismatch"
                );
            }
        }
    }

    #[test]
    fn reported_argmax_radius_attains_the_value() {
        let d = Arc::new(DomainSpec::unit_square(5).build().unwrap());
        let idx = DomainIndex::new(d.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let values: Vec<f64> = (0..d.len()).map(|_| rng.gen::<f64>()).collect();
        let f = ScalarField::from_values(d.clone(), values, None).unwrap();
        let alpha = 0.6;
        let out = maximal(&idx, &f, alpha, EvalMode::Exact).unwrap();
        let radii = out.argmax_radius.as_ref().unwrap();
        let aob = alpha / d.ahlfors_dim();
        for i in 0..d.len() {
            let q = Cube {
                center: d.coords(i).to_vec(),
                side: radii[i],
            };
            let mut mass = 0.0;
            let mut int = 0.0;
            for j in 0..d.len() {
                if q.contains(d.coords(j)) {
                    mass += d.mass(j);
                    int += f.value(j).abs() * d.mass(j);
                }
            }
            let direct = mass.powf(aob) * (int / mass);
            assert!(
                (direct - out.field.value(i)).abs() <= 1e-12 * out.field.value(i).max(1.0),
                "atom {i}: direct {direct} vs reported {}",
                out.field.value(i)
            );
        }
    }

    #[test]
    fn integral_self_term_is_zero() {
        // a single atom sees nothing
        let d = Arc::new(
            DiscreteDomain::new(
                1,
                1.0,
                vec![Atom {
                    coords: vec![0.3],
                    mass: 2.0,
                }],
            )
            .unwrap(),
        );
        let idx = DomainIndex::new(d.clone());
        let f = ScalarField::constant(d, 5.0).unwrap();
        let out = fractional_integral(&idx, &f, 0.5).unwrap();
        assert_eq!(out.field.value(0), 0.0);
    }

    #[test]
    fn integral_is_linear_in_f() {
        let d = Arc::new(DomainSpec::unit_square(5).build().unwrap());
        let idx = DomainIndex::new(d.clone());
        let kernel = FractionalKernel::new(&idx, 0.8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a: Vec<f64> = (0..d.len()).map(|_| rng.gen::<f64>()).collect();
        let b: Vec<f64> = (0..d.len()).map(|_| rng.gen::<f64>()).collect();
        let fa = ScalarField::from_values(d.clone(), a.clone(), None).unwrap();
        let fb = ScalarField::from_values(d.clone(), b.clone(), None).unwrap();
        let fsum = ScalarField::from_values(
            d.clone(),
            a.iter().zip(&b).map(|(x, y)| 2.0 * x + y).collect(),
            None,
        )
        .unwrap();
        let ia = kernel.apply(&fa).unwrap();
        let ib = kernel.apply(&fb).unwrap();
        let isum = kernel.apply(&fsum).unwrap();
        for i in 0..d.len() {
            let expect = 2.0 * ia.field.value(i) + ib.field.value(i);
            assert!((isum.field.value(i) - expect).abs() <= 1e-12 * expect.abs().max(1.0));
        }
    }
}
