//! Finite atomic measure spaces.
//!
//! A [`DiscreteDomain`] is a finite collection of weighted atoms in R^n
//! together with a declared regularity dimension `ahlfors_dim`. All cube
//! geometry is l-infinity (axis-parallel closed cubes identified by center
//! and side length), while point-to-point distances default to Euclidean.
//!
//! The atomic measure of a cube is the sum of the masses of the atoms it
//! contains. Nothing here assumes the measure is doubling; the built-in
//! mixed example (a 1-dimensional diagonal segment glued to a 2-dimensional
//! square) is lower Ahlfors 2-regular but has unbounded doubling ratios near
//! the gluing corner.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single point mass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Atom {
    pub coords: Vec<f64>,
    pub mass: f64,
}

/// Closed axis-parallel cube given by center and side length.
///
/// Membership ties (points exactly on the boundary) are included.
#[derive(Debug, Clone, PartialEq)]
pub struct Cube {
    pub center: Vec<f64>,
    pub side: f64,
}

impl Cube {
    pub fn new(center: Vec<f64>, side: f64) -> Result<Self> {
        if !side.is_finite() || side <= 0.0 {
            return Err(Error::InvalidQuery(format!(
                "cube side must be positive and finite, got {side}"
            )));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidQuery("cube center must be finite".into()));
        }
        Ok(Cube { center, side })
    }

    /// Closed l-infinity membership test.
    pub fn contains(&self, point: &[f64]) -> bool {
        let half = self.side / 2.0;
        self.center
            .iter()
            .zip(point.iter())
            .all(|(c, p)| (p - c).abs() <= half)
    }

    /// The concentric cube with twice the side length.
    pub fn double(&self) -> Cube {
        Cube {
            center: self.center.clone(),
            side: 2.0 * self.side,
        }
    }
}

pub fn l2_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn linf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// A finite atomic measure space in R^n.
#[derive(Debug, Clone)]
pub struct DiscreteDomain {
    ambient_dim: usize,
    ahlfors_dim: f64,
    atoms: Vec<Atom>,
    // Derived, cached at construction.
    diameter: f64,
    min_spacing: f64,
    total_mass: f64,
}

/// On-disk schema for a domain. Derived quantities are recomputed on load.
#[derive(Serialize, Deserialize)]
struct DomainFile {
    ambient_dim: usize,
    ahlfors_dim: f64,
    atoms: Vec<Atom>,
}

impl DiscreteDomain {
    pub fn new(ambient_dim: usize, ahlfors_dim: f64, atoms: Vec<Atom>) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::InvalidDomain("ambient dimension must be >= 1".into()));
        }
        if !(ahlfors_dim.is_finite() && ahlfors_dim > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "ahlfors_dim must be positive and finite, got {ahlfors_dim}"
            )));
        }
        if atoms.is_empty() {
            return Err(Error::InvalidDomain("domain must contain at least one atom".into()));
        }
        for (i, a) in atoms.iter().enumerate() {
            if a.coords.len() != ambient_dim {
                return Err(Error::InvalidDomain(format!(
                    "atom {i} has {} coordinates, expected {ambient_dim}",
                    a.coords.len()
                )));
            }
            if a.coords.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidDomain(format!("atom {i} has non-finite coordinates")));
            }
            if !(a.mass.is_finite() && a.mass > 0.0) {
                return Err(Error::InvalidDomain(format!(
                    "atom {i} has mass {}, expected positive and finite",
                    a.mass
                )));
            }
        }
        let mut diameter = 0.0f64;
        let mut min_spacing = f64::INFINITY;
        for i in 0..atoms.len() {
            for j in (i + 1)..atoms.len() {
                let d = l2_dist(&atoms[i].coords, &atoms[j].coords);
                diameter = diameter.max(d);
                if d > 0.0 {
                    min_spacing = min_spacing.min(d);
                }
            }
        }
        let total_mass = atoms.iter().map(|a| a.mass).sum();
        Ok(DiscreteDomain {
            ambient_dim,
            ahlfors_dim,
            atoms,
            diameter,
            min_spacing,
            total_mass,
        })
    }

    /// Same atoms, different declared regularity dimension.
    pub fn with_ahlfors_dim(&self, ahlfors_dim: f64) -> Result<Self> {
        Self::new(self.ambient_dim, ahlfors_dim, self.atoms.clone())
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn ahlfors_dim(&self) -> f64 {
        self.ahlfors_dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn coords(&self, i: usize) -> &[f64] {
        &self.atoms[i].coords
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.atoms[i].mass
    }

    /// Largest pairwise Euclidean distance between atoms.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Smallest strictly positive pairwise Euclidean distance.
    /// Infinite when the domain has a single atom site.
    pub fn min_spacing(&self) -> f64 {
        self.min_spacing
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Measure of `cube` intersected with the atom set.
    pub fn cube_measure(&self, cube: &Cube) -> f64 {
        let mut sum = 0.0;
        for a in &self.atoms {
            if cube.contains(&a.coords) {
                sum += a.mass;
            }
        }
        sum
    }

    /// Empirical lower Ahlfors regularity constant:
    /// min over sampled centers x and side lengths l of mu(Q(x, l)) / l^beta.
    ///
    /// Side lengths below twice the minimum atom spacing probe the atomic
    /// discretization rather than the underlying measure and are rejected,
    /// as are side lengths at or above the diameter.
    pub fn ahlfors_constant(&self, radii: &[f64], centers: &[usize]) -> Result<f64> {
        if radii.is_empty() {
            return Err(Error::InvalidQuery("no side lengths supplied".into()));
        }
        if centers.is_empty() {
            return Err(Error::InvalidQuery("no centers supplied".into()));
        }
        let floor = 2.0 * self.min_spacing;
        for &l in radii {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidQuery(format!("side length {l} must be positive")));
            }
            if l >= self.diameter {
                return Err(Error::InvalidQuery(format!(
                    "side length {l} not below domain diameter {}",
                    self.diameter
                )));
            }
            if l < floor {
                return Err(Error::InvalidQuery(format!(
                    "side length {l} below twice the minimum atom spacing {}",
                    self.min_spacing
                )));
            }
        }
        for &c in centers {
            if c >= self.atoms.len() {
                return Err(Error::InvalidQuery(format!("center index {c} out of range")));
            }
        }
        let beta = self.ahlfors_dim;
        let c_hat = centers
            .par_iter()
            .map(|&c| {
                let mut local = f64::INFINITY;
                for &l in radii {
                    let q = Cube {
                        center: self.atoms[c].coords.clone(),
                        side: l,
                    };
                    local = local.min(self.cube_measure(&q) / l.powf(beta));
                }
                local
            })
            .reduce(|| f64::INFINITY, f64::min);
        Ok(c_hat)
    }

    /// Doubling ratios mu(2Q)/mu(Q) for each probe cube.
    ///
    /// A cube with zero measure whose double has positive measure reports
    /// an infinite ratio; two zero measures report 1 (no observed growth).
    pub fn doubling_probe(&self, cubes: &[Cube]) -> Vec<DoublingSample> {
        cubes
            .iter()
            .map(|q| {
                let small = self.cube_measure(q);
                let big = self.cube_measure(&q.double());
                let ratio = if small > 0.0 {
                    big / small
                } else if big > 0.0 {
                    f64::INFINITY
                } else {
                    1.0
                };
                DoublingSample { side: q.side, ratio }
            })
            .collect()
    }

    /// Midpoint discretization of the box `lo x hi` with `resolution[k]`
    /// cells along axis k. Each atom carries its cell's Lebesgue volume;
    /// the regularity dimension is the ambient dimension.
    pub fn lebesgue_grid(lo: &[f64], hi: &[f64], resolution: &[usize]) -> Result<Self> {
        let n = lo.len();
        if n == 0 || hi.len() != n || resolution.len() != n {
            return Err(Error::InvalidDomain(
                "box corners and resolution must agree on dimension".into(),
            ));
        }
        for k in 0..n {
            if !(lo[k].is_finite() && hi[k].is_finite() && lo[k] < hi[k]) {
                return Err(Error::InvalidDomain(format!(
                    "degenerate box on axis {k}: [{}, {}]",
                    lo[k], hi[k]
                )));
            }
            if resolution[k] < 2 {
                return Err(Error::InvalidDomain(format!(
                    "resolution on axis {k} must be >= 2, got {}",
                    resolution[k]
                )));
            }
        }
        let cell_volume: f64 = (0..n).map(|k| (hi[k] - lo[k]) / resolution[k] as f64).product();
        let count: usize = resolution.iter().product();
        let mut atoms = Vec::with_capacity(count);
        let mut idx = vec![0usize; n];
        loop {
            let coords: Vec<f64> = (0..n)
                .map(|k| lo[k] + (hi[k] - lo[k]) * (idx[k] as f64 + 0.5) / resolution[k] as f64)
                .collect();
            atoms.push(Atom {
                coords,
                mass: cell_volume,
            });
            // odometer increment over the index vector
            let mut k = 0;
            loop {
                idx[k] += 1;
                if idx[k] < resolution[k] {
                    break;
                }
                idx[k] = 0;
                k += 1;
                if k == n {
                    return DiscreteDomain::new(n, n as f64, atoms);
                }
            }
        }
    }

    /// The built-in mixed example: the open unit diagonal
    /// {(x, x) : x in (0, 1)} carrying 1-dimensional arclength, glued to the
    /// square (-1, 0)^2 carrying area. Declared regularity dimension 2.
    ///
    /// `resolution` diagonal atoms of mass sqrt(2)/resolution each, plus
    /// resolution^2 square atoms of mass resolution^{-2} each. The measure
    /// is lower Ahlfors 2-regular, but cubes near the origin have doubling
    /// ratios growing like the reciprocal of their side length.
    pub fn mixed_example(resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidDomain(format!(
                "resolution must be >= 2, got {resolution}"
            )));
        }
        let n = resolution as f64;
        let mut atoms = Vec::with_capacity(resolution + resolution * resolution);
        let diag_mass = std::f64::consts::SQRT_2 / n;
        for i in 0..resolution {
            let x = (i as f64 + 0.5) / n;
            atoms.push(Atom {
                coords: vec![x, x],
                mass: diag_mass,
            });
        }
        let cell_mass = 1.0 / (n * n);
        for i in 0..resolution {
            for j in 0..resolution {
                let x = -1.0 + (i as f64 + 0.5) / n;
                let y = -1.0 + (j as f64 + 0.5) / n;
                atoms.push(Atom {
                    coords: vec![x, y],
                    mass: cell_mass,
                });
            }
        }
        DiscreteDomain::new(2, 2.0, atoms)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = DomainFile {
            ambient_dim: self.ambient_dim,
            ahlfors_dim: self.ahlfors_dim,
            atoms: self.atoms.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DomainFile = serde_json::from_str(text)?;
        DiscreteDomain::new(file.ambient_dim, file.ahlfors_dim, file.atoms)
    }
}

/// One row of a doubling probe.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DoublingSample {
    pub side: f64,
    pub ratio: f64,
}

/// Cubes hugging the gluing corner of the mixed example: side l centered at
/// (-l/2, -l/2), so Q stays inside the square while 2Q reaches across the
/// origin and captures a diagonal segment of 1-dimensional measure ~ l.
pub fn mixed_example_corner_cubes(sides: &[f64]) -> Result<Vec<Cube>> {
    sides
        .iter()
        .map(|&l| Cube::new(vec![-l / 2.0, -l / 2.0], l))
        .collect()
}

/// Buildable description of a domain, usable in config files. Grid and
/// mixed-example domains can be rebuilt at other resolutions for refinement
/// studies; file-backed domains cannot.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "snake_case")]
pub enum DomainSpec {
    LebesgueGrid {
        lo: Vec<f64>,
        hi: Vec<f64>,
        resolution: Vec<usize>,
        #[serde(default)]
        ahlfors_dim: Option<f64>,
    },
    PaperExample {
        resolution: usize,
    },
    File {
        path: String,
    },
}

impl DomainSpec {
    /// Uniform grid over the unit square; the common default.
    pub fn unit_square(resolution: usize) -> Self {
        DomainSpec::LebesgueGrid {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
            resolution: vec![resolution, resolution],
            ahlfors_dim: None,
        }
    }

    pub fn unit_interval(resolution: usize) -> Self {
        DomainSpec::LebesgueGrid {
            lo: vec![0.0],
            hi: vec![1.0],
            resolution: vec![resolution],
            ahlfors_dim: None,
        }
    }

    pub fn build(&self) -> Result<DiscreteDomain> {
        match self {
            DomainSpec::LebesgueGrid {
                lo,
                hi,
                resolution,
                ahlfors_dim,
            } => {
                let d = DiscreteDomain::lebesgue_grid(lo, hi, resolution)?;
                match ahlfors_dim {
                    Some(beta) => d.with_ahlfors_dim(*beta),
                    None => Ok(d),
                }
            }
            DomainSpec::PaperExample { resolution } => DiscreteDomain::mixed_example(*resolution),
            DomainSpec::File { path } => {
                let text = std::fs::read_to_string(path)?;
                DiscreteDomain::from_json(&text)
            }
        }
    }

    /// The same builder at per-axis resolution `res`. Errors for file-backed
    /// domains, which cannot be resampled.
    pub fn at_resolution(&self, res: usize) -> Result<DomainSpec> {
        match self {
            DomainSpec::LebesgueGrid {
                lo,
                hi,
                resolution,
                ahlfors_dim,
            } => Ok(DomainSpec::LebesgueGrid {
                lo: lo.clone(),
                hi: hi.clone(),
                resolution: vec![res; resolution.len()],
                ahlfors_dim: *ahlfors_dim,
            }),
            DomainSpec::PaperExample { .. } => Ok(DomainSpec::PaperExample { resolution: res }),
            DomainSpec::File { path } => Err(Error::Config(format!(
                "domain loaded from {path} cannot be rebuilt at a new resolution"
            ))),
        }
    }
}

/// Per-atom neighbor orderings by l-infinity distance.
///
/// Centered at an atom x, the cube average of any field is a piecewise
/// constant function of the side length, jumping exactly where a new atom
/// enters the closed cube: at side 2d for each distinct l-infinity distance
/// d from x. Scanning atoms in distance order therefore enumerates every
/// distinct cube around x once, and running prefix sums evaluate each cube
/// in constant time.
pub struct DomainIndex {
    domain: Arc<DiscreteDomain>,
    order: Vec<Vec<u32>>,
}

impl DomainIndex {
    pub fn new(domain: Arc<DiscreteDomain>) -> Self {
        let n = domain.len();
        let order: Vec<Vec<u32>> = (0..n)
            .into_par_iter()
            .map(|c| {
                let center = domain.coords(c);
                let mut idx: Vec<u32> = (0..n as u32).collect();
                let mut dist: Vec<f64> = (0..n)
                    .map(|j| linf_dist(center, domain.coords(j)))
                    .collect();
                idx.sort_by(|&a, &b| {
                    dist[a as usize]
                        .partial_cmp(&dist[b as usize])
                        .unwrap()
                        .then(a.cmp(&b))
                });
                // dist is only needed for the sort
                dist.clear();
                idx
            })
            .collect();
        DomainIndex { domain, order }
    }

    pub fn domain(&self) -> &Arc<DiscreteDomain> {
        &self.domain
    }

    /// Visit the atoms around center `c` grouped by tied l-infinity
    /// distance, in increasing distance order. The callback receives the
    /// group's distance and the atom indices entering the cube at that
    /// distance. The first group is always distance 0 and contains `c`.
    pub fn for_each_group(&self, c: usize, mut visit: impl FnMut(f64, &[u32])) {
        let center = self.domain.coords(c);
        let order = &self.order[c];
        let n = order.len();
        let mut start = 0;
        while start < n {
            let d = linf_dist(center, self.domain.coords(order[start] as usize));
            let mut end = start + 1;
            while end < n && linf_dist(center, self.domain.coords(order[end] as usize)) == d {
                end += 1;
            }
            visit(d, &order[start..end]);
            start = end;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square_16() -> DiscreteDomain {
        DiscreteDomain::lebesgue_grid(&[0.0, 0.0], &[1.0, 1.0], &[16, 16]).unwrap()
    }

    #[test]
    fn cube_membership_is_closed() {
        let q = Cube::new(vec![0.0, 0.0], 2.0).unwrap();
        assert!(q.contains(&[1.0, 1.0]));
        assert!(q.contains(&[-1.0, 0.5]));
        assert!(!q.contains(&[1.0 + 1e-12, 0.0]));
    }

    #[test]
    fn cube_rejects_degenerate_side() {
        assert!(Cube::new(vec![0.0], 0.0).is_err());
        assert!(Cube::new(vec![0.0], -1.0).is_err());
        assert!(Cube::new(vec![0.0], f64::NAN).is_err());
    }

    #[test]
    fn grid_has_cell_volume_masses_and_unit_total() {
        let d = DiscreteDomain::lebesgue_grid(&[0.0, 0.0], &[1.0, 1.0], &[4, 4]).unwrap();
        assert_eq!(d.len(), 16);
        for a in d.atoms() {
            assert!((a.mass - 1.0 / 16.0).abs() < 1e-15);
        }
        assert!((d.total_mass() - 1.0).abs() < 1e-12);
        assert_eq!(d.ahlfors_dim(), 2.0);
        // full-cover cube: measure 1
        let q = Cube::new(vec![0.5, 0.5], 1.0).unwrap();
        assert!((d.cube_measure(&q) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_rejects_bad_boxes() {
        assert!(DiscreteDomain::lebesgue_grid(&[0.0], &[0.0], &[4]).is_err());
        assert!(DiscreteDomain::lebesgue_grid(&[1.0], &[0.0], &[4]).is_err());
        assert!(DiscreteDomain::lebesgue_grid(&[0.0], &[1.0], &[1]).is_err());
    }

    #[test]
    fn cube_measure_counts_boundary_atoms() {
        // atoms at midpoints k/8 + 1/16; cube [0, 0.5] x [0, 0.5] on an
        // 8x8 grid picks up exactly the 16 atoms with coords < 0.5
        let d = DiscreteDomain::lebesgue_grid(&[0.0, 0.0], &[1.0, 1.0], &[8, 8]).unwrap();
        let q = Cube::new(vec![0.25, 0.25], 0.5).unwrap();
        assert!((d.cube_measure(&q) - 16.0 / 64.0).abs() < 1e-12);
        // shifting the cube so its face passes exactly through atom centers
        // keeps those atoms inside (closed cubes)
        let q2 = Cube::new(vec![0.0625 + 0.25, 0.0625], 0.5).unwrap();
        let m = d.cube_measure(&q2);
        // x in [0.0625, 0.5625] captures midpoints 0.0625..0.5625: 5 columns;
        // y in [-0.1875, 0.3125] captures 0.0625, 0.1875, 0.3125: 3 rows
        assert!((m - 15.0 / 64.0).abs() < 1e-12, "measure {m}");
    }

    #[test]
    fn mixed_example_masses_match_closed_form() {
        let d = DiscreteDomain::mixed_example(4).unwrap();
        assert_eq!(d.len(), 4 + 16);
        let diag: Vec<_> = d.atoms().iter().filter(|a| a.coords[0] > 0.0).collect();
        assert_eq!(diag.len(), 4);
        for a in &diag {
            assert!((a.mass - std::f64::consts::SQRT_2 / 4.0).abs() < 1e-15);
            assert!((a.coords[0] - a.coords[1]).abs() < 1e-15);
        }
        let square: Vec<_> = d.atoms().iter().filter(|a| a.coords[0] < 0.0).collect();
        assert_eq!(square.len(), 16);
        for a in &square {
            assert!((a.mass - 1.0 / 16.0).abs() < 1e-15);
        }
        let expected = std::f64::consts::SQRT_2 + 1.0;
        assert!((d.total_mass() - expected).abs() < 1e-12);
    }

    #[test]
    fn ahlfors_constant_near_one_on_interior_grid() {
        let d = unit_square_16();
        // interior atom roughly at the center
        let center = d
            .atoms()
            .iter()
            .position(|a| (a.coords[0] - 0.53125).abs() < 1e-9 && (a.coords[1] - 0.53125).abs() < 1e-9)
            .unwrap();
        let c = d.ahlfors_constant(&[0.25, 0.5], &[center]).unwrap();
        assert!(c > 0.5 && c < 1.5, "c_hat {c}");
    }

    #[test]
    fn ahlfors_constant_quarters_at_corner() {
        let d = unit_square_16();
        let corner = d
            .atoms()
            .iter()
            .position(|a| a.coords[0] < 0.04 && a.coords[1] < 0.04)
            .unwrap();
        let c = d.ahlfors_constant(&[0.5], &[corner]).unwrap();
        // only a quarter of the cube lies inside the domain
        assert!(c > 0.15 && c < 0.4, "c_hat {c}");
    }

    #[test]
    fn ahlfors_constant_rejects_bad_radii() {
        let d = unit_square_16();
        // beyond the diameter
        assert!(d.ahlfors_constant(&[5.0], &[0]).is_err());
        // below the spacing floor
        assert!(d.ahlfors_constant(&[0.01], &[0]).is_err());
        // single-atom domain rejects everything
        let single = DiscreteDomain::new(
            1,
            1.0,
            vec![Atom {
                coords: vec![0.0],
                mass: 1.0,
            }],
        )
        .unwrap();
        assert!(single.ahlfors_constant(&[0.1], &[0]).is_err());
    }

    #[test]
    fn ahlfors_constant_shrinks_with_more_samples() {
        let d = unit_square_16();
        let corner = d
            .atoms()
            .iter()
            .position(|a| a.coords[0] < 0.04 && a.coords[1] < 0.04)
            .unwrap();
        let interior = d.len() / 2;
        let few = d.ahlfors_constant(&[0.5], &[interior]).unwrap();
        let more = d.ahlfors_constant(&[0.25, 0.5], &[interior, corner]).unwrap();
        assert!(more <= few + 1e-15);
    }

    #[test]
    fn doubling_ratio_bounded_on_uniform_grid() {
        let d = unit_square_16();
        let cubes = vec![
            Cube::new(vec![0.5, 0.5], 0.2).unwrap(),
            Cube::new(vec![0.5, 0.5], 0.4).unwrap(),
        ];
        for s in d.doubling_probe(&cubes) {
            assert!(s.ratio.is_finite());
            assert!(s.ratio <= 8.0, "ratio {}", s.ratio);
        }
    }

    #[test]
    fn doubling_diverges_at_mixed_example_corner() {
        let d = DiscreteDomain::mixed_example(64).unwrap();
        // ratio(l) = 2.25 + sqrt(2)/(2l): the 1.5x-per-halving regime
        // starts at l = 1/4
        let sides: Vec<f64> = (2..=5).map(|k| 0.5f64.powi(k)).collect();
        let cubes = mixed_example_corner_cubes(&sides).unwrap();
        let samples = d.doubling_probe(&cubes);
        // ratio grows like 1/l: each halving of the side multiplies it
        for w in samples.windows(2) {
            assert!(
                w[1].ratio >= 1.5 * w[0].ratio,
                "sides {} -> {}: ratios {} -> {}",
                w[0].side,
                w[1].side,
                w[0].ratio,
                w[1].ratio
            );
        }
    }

    #[test]
    fn mixed_example_corner_measures_match_closed_form() {
        // With side l = 2^-k and resolution N, Q = [-l, 0]^2 contains the
        // square-grid atoms with both coords >= -l: (l N)^2 atoms of mass
        // N^-2, so mu(Q) = l^2 exactly when l N is an integer. 2Q adds the
        // diagonal atoms with x <= l/2: l N / 2 atoms of mass sqrt(2)/N,
        // arclength sqrt(2) l / 2, plus square atoms with coords >= -3l/2.
        let n = 64usize;
        let d = DiscreteDomain::mixed_example(n).unwrap();
        let l = 0.25f64;
        let q = &mixed_example_corner_cubes(&[l]).unwrap()[0];
        let mu_q = d.cube_measure(q);
        assert!((mu_q - l * l).abs() < 1e-12, "mu(Q) {mu_q}");
        let mu_2q = d.cube_measure(&q.double());
        let expected = (1.5 * l) * (1.5 * l) + std::f64::consts::SQRT_2 * l / 2.0;
        assert!((mu_2q - expected).abs() < 1e-12, "mu(2Q) {mu_2q} vs {expected}");
    }

    #[test]
    fn domain_json_roundtrip() {
        let d = DiscreteDomain::mixed_example(4).unwrap();
        let text = d.to_json().unwrap();
        let back = DiscreteDomain::from_json(&text).unwrap();
        assert_eq!(back.len(), d.len());
        assert_eq!(back.ahlfors_dim(), d.ahlfors_dim());
        assert_eq!(back.diameter(), d.diameter());
    }

    #[test]
    fn domain_json_rejects_bad_atoms() {
        let text = r#"{"ambient_dim": 2, "ahlfors_dim": 2.0,
                       "atoms": [{"coords": [0.0, 0.0], "mass": -1.0}]}"#;
        assert!(DiscreteDomain::from_json(text).is_err());
        let text = r#"{"ambient_dim": 2, "ahlfors_dim": 2.0,
                       "atoms": [{"coords": [0.0], "mass": 1.0}]}"#;
        assert!(DiscreteDomain::from_json(text).is_err());
    }

    #[test]
    fn index_groups_enumerate_all_atoms_in_distance_order() {
        let d = Arc::new(unit_square_16());
        let idx = DomainIndex::new(d.clone());
        let mut seen = 0usize;
        let mut last = -1.0f64;
        idx.for_each_group(37, |dist, group| {
            assert!(dist > last);
            last = dist;
            seen += group.len();
        });
        assert_eq!(seen, d.len());
    }

    #[test]
    fn index_first_group_is_the_center() {
        let d = Arc::new(unit_square_16());
        let idx = DomainIndex::new(d);
        let mut first: Option<(f64, Vec<u32>)> = None;
        idx.for_each_group(5, |dist, group| {
            if first.is_none() {
                first = Some((dist, group.to_vec()));
            }
        });
        let (dist, group) = first.unwrap();
        assert_eq!(dist, 0.0);
        assert_eq!(group, vec![5]);
    }

    #[test]
    fn spec_resolution_refinement() {
        let spec = DomainSpec::unit_square(8);
        let d8 = spec.build().unwrap();
        let d16 = spec.at_resolution(16).unwrap().build().unwrap();
        assert_eq!(d8.len(), 64);
        assert_eq!(d16.len(), 256);
        let f = DomainSpec::File { path: "x.json".into() };
        assert!(f.at_resolution(16).is_err());
    }
}
