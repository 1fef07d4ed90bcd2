//! Seeded random trial inputs.
//!
//! Ratio maximization over purely uniform random fields misses violations
//! that live at specific atoms (an exponent jump, a weight singularity), so
//! the sampler mixes global shapes with spikes targeted at caller-supplied
//! hotspot atoms.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::domain::{l2_dist, DiscreteDomain};
use crate::fields::ScalarField;

use std::sync::Arc;

/// Draws nonnegative trial fields on a fixed domain.
pub(crate) struct TrialSampler {
    domain: Arc<DiscreteDomain>,
    /// Atoms where the inequality under test is most strained; spikes are
    /// planted there with elevated probability.
    hotspots: Vec<usize>,
}

impl TrialSampler {
    pub(crate) fn new(domain: Arc<DiscreteDomain>, hotspots: Vec<usize>) -> Self {
        TrialSampler { domain, hotspots }
    }

    /// One nonnegative trial field plus a short label for witness reports.
    pub(crate) fn sample(&self, rng: &mut ChaCha8Rng) -> (ScalarField, String) {
        let n = self.domain.len();
        let kind = if self.hotspots.is_empty() {
            rng.gen_range(0..4)
        } else {
            rng.gen_range(0..5)
        };
        match kind {
            0 => {
                let count = rng.gen_range(1..=3.min(n));
                let mut values = vec![0.0; n];
                let mut label = String::from("spikes[");
                for s in 0..count {
                    let atom = rng.gen_range(0..n);
                    let height = 10f64.powf(rng.gen_range(-2.0..2.0));
                    values[atom] += height;
                    if s > 0 {
                        label.push(',');
                    }
                    label.push_str(&atom.to_string());
                }
                label.push(']');
                (self.field(values), label)
            }
            1 => {
                let center = self.domain.atoms()[rng.gen_range(0..n)].coords.clone();
                let sigma = self.domain.diameter() * 10f64.powf(rng.gen_range(-1.5..0.0));
                let values = self
                    .domain
                    .atoms()
                    .iter()
                    .map(|a| {
                        let d = l2_dist(&a.coords, &center);
                        (-d * d / (2.0 * sigma * sigma)).exp()
                    })
                    .collect();
                (self.field(values), format!("bump(sigma={sigma:.3e})"))
            }
            2 => {
                let gamma = rng.gen_range(1.5..4.0);
                let values = (0..n)
                    .map(|_| {
                        let u: f64 = rng.gen_range(1e-9..1.0);
                        u.powf(-1.0 / gamma)
                    })
                    .collect();
                (self.field(values), format!("heavy(gamma={gamma:.2})"))
            }
            3 => {
                let (bump, _) = self.sample_of_kind(rng, 1);
                let atom = rng.gen_range(0..n);
                let height = 10f64.powf(rng.gen_range(0.0..2.0));
                let values = (0..n)
                    .map(|i| bump.value(i) + if i == atom { height } else { 0.0 })
                    .collect();
                (self.field(values), format!("bump+spike[{atom}]"))
            }
            _ => {
                let atom = self.hotspots[rng.gen_range(0..self.hotspots.len())];
                let height = 10f64.powf(rng.gen_range(-1.0..2.0));
                let mut values = vec![0.0; n];
                values[atom] = height;
                (self.field(values), format!("hotspot_spike[{atom}]"))
            }
        }
    }

    fn sample_of_kind(&self, rng: &mut ChaCha8Rng, kind: usize) -> (ScalarField, String) {
        debug_assert_eq!(kind, 1);
        let n = self.domain.len();
        let center = self.domain.atoms()[rng.gen_range(0..n)].coords.clone();
        let sigma = self.domain.diameter() * 10f64.powf(rng.gen_range(-1.5..0.0));
        let values = self
            .domain
            .atoms()
            .iter()
            .map(|a| {
                let d = l2_dist(&a.coords, &center);
                (-d * d / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        (self.field(values), String::new())
    }

    fn field(&self, values: Vec<f64>) -> ScalarField {
        ScalarField::from_values(Arc::clone(&self.domain), values, None)
            .expect("sampler values are finite by construction")
    }
}

/// Strictly positive random weight field for pointwise-bound trials.
pub(crate) fn random_weight(
    domain: &Arc<DiscreteDomain>,
    rng: &mut ChaCha8Rng,
) -> (ScalarField, String) {
    let n = domain.len();
    let kind = rng.gen_range(0..3);
    let (values, label): (Vec<f64>, String) = match kind {
        0 => {
            let c = 10f64.powf(rng.gen_range(-0.5..0.5));
            (vec![c; n], format!("const({c:.3})"))
        }
        1 => (
            (0..n).map(|_| 10f64.powf(rng.gen_range(-0.7..0.7))).collect(),
            "iid".into(),
        ),
        _ => {
            let center = domain.atoms()[rng.gen_range(0..n)].coords.clone();
            let sigma = domain.diameter() * 10f64.powf(rng.gen_range(-1.0..0.0));
            (
                domain
                    .atoms()
                    .iter()
                    .map(|a| {
                        let d = l2_dist(&a.coords, &center);
                        0.5 + 2.0 * (-d * d / (2.0 * sigma * sigma)).exp()
                    })
                    .collect(),
                format!("smooth(sigma={sigma:.3e})"),
            )
        }
    };
    (
        ScalarField::from_values(Arc::clone(domain), values, None)
            .expect("weight values are finite by construction"),
        label,
    )
}
