//! Finite samples of the unit sphere `S^{2d-1}` representing closed cones.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symplectic::{RMatrix, Subspace};

/// Directions per full turn in the default `d = 1` sample.
pub const DEFAULT_CIRCLE_DIRECTIONS: usize = 64;
/// Half-side of the integer cube whose surface gives the `d = 2` sample.
pub const DEFAULT_CUBE_HALF_SIDE: usize = 3;
const DUPLICATE_ANGLE: f64 = 1e-9;

const NORM_TOL: f64 = 1e-12;
const ZERO_IMAGE: f64 = 1e-12;

/// `true` iff `angle <= tol` up to a tiny relative slack.
pub fn within_angle(angle: f64, tol: f64) -> bool {
    angle <= tol * (1.0 + 1e-9) + 1e-12
}

/// Angle in `[0, pi]` between two unit vectors.
pub fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    // 2 atan2(|a - b|, |a + b|) stays accurate near 0 and pi, unlike acos
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x + y) * (x + y)).sum::<f64>().sqrt();
    2.0 * diff.atan2(sum)
}

/// Unit vectors on `S^{2d-1}` with an associated angular resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSet {
    ambient_dim: usize,
    angular_resolution: f64,
    dirs: Vec<Vec<f64>>,
}

impl DirectionSet {
    /// Validates unit norms and rejects duplicate directions.
    pub fn new(dirs: Vec<Vec<f64>>, ambient_dim: usize, angular_resolution: f64) -> Result<Self> {
        if ambient_dim == 0 || ambient_dim % 2 != 0 {
            return Err(Error::InvalidDimension(format!(
                "direction ambient dimension must be even and positive, got {ambient_dim}"
            )));
        }
        if !(angular_resolution > 0.0 && angular_resolution.is_finite()) {
            return Err(Error::InvalidInput("angular resolution must be positive".into()));
        }
        for v in &dirs {
            if v.len() != ambient_dim {
                return Err(Error::InvalidDimension(format!(
                    "direction has {} components, expected {ambient_dim}",
                    v.len()
                )));
            }
            let n = norm(v);
            if (n - 1.0).abs() > NORM_TOL {
                return Err(Error::InvalidInput(format!("direction norm {n} is not 1")));
            }
        }
        for i in 0..dirs.len() {
            for j in 0..i {
                if angle_between(&dirs[i], &dirs[j]) <= DUPLICATE_ANGLE {
                    return Err(Error::InvalidInput("duplicate direction".into()));
                }
            }
        }
        Ok(Self { ambient_dim, angular_resolution, dirs })
    }

    /// Normalizes arbitrary vectors, dropping (near) zero ones and
    /// merging those closer than half the resolution (first one wins).
    pub fn from_vectors(vectors: Vec<Vec<f64>>, ambient_dim: usize, angular_resolution: f64) -> Self {
        let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
        for v in vectors {
            assert_eq!(v.len(), ambient_dim, "vector of wrong dimension");
            let n = norm(&v);
            if n <= ZERO_IMAGE || !n.is_finite() {
                continue;
            }
            let u: Vec<f64> = v.iter().map(|x| x / n).collect();
            if dirs.iter().all(|w| angle_between(w, &u) > angular_resolution / 2.0) {
                dirs.push(u);
            }
        }
        Self { ambient_dim, angular_resolution, dirs }
    }

    pub fn empty(ambient_dim: usize, angular_resolution: f64) -> Self {
        Self { ambient_dim, angular_resolution, dirs: Vec::new() }
    }

    /// `n` equally spaced directions on the circle, starting at `(1, 0)`.
    pub fn circle(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidInput(format!("need at least 4 directions on the circle, got {n}")));
        }
        let step = 2.0 * std::f64::consts::PI / n as f64;
        let dirs = (0..n)
            .map(|j| {
                let (s, c) = (step * j as f64).sin_cos();
                vec![c, s]
            })
            .collect();
        Ok(Self { ambient_dim: 2, angular_resolution: step, dirs })
    }

    /// Normalized integer points of max-norm `m` in `Z^4`.
    ///
    /// The coordinate axes are included exactly; neighbouring points on a
    /// face centre are `atan(1/m)` apart, which is used as the resolution.
    pub fn cube_lattice(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("cube half-side must be positive".into()));
        }
        let m = m as i64;
        let mut dirs = Vec::new();
        for a in -m..=m {
            for b in -m..=m {
                for c in -m..=m {
                    for e in -m..=m {
                        let p = [a, b, c, e];
                        if p.iter().map(|v| v.abs()).max() != Some(m) {
                            continue;
                        }
                        let v: Vec<f64> = p.iter().map(|&v| v as f64).collect();
                        let n = norm(&v);
                        dirs.push(v.iter().map(|x| x / n).collect());
                    }
                }
            }
        }
        Ok(Self { ambient_dim: 4, angular_resolution: (1.0 / m as f64).atan(), dirs })
    }

    /// Default sample for phase space of dimension `2d` (`d` in `{1, 2}`).
    pub fn default_for(dim_d: usize) -> Result<Self> {
        Self::lattice(dim_d, None)
    }

    /// Circle with `density` directions (`d = 1`) or cube lattice of half-side
    /// `density` (`d = 2`).
    pub fn lattice(dim_d: usize, density: Option<usize>) -> Result<Self> {
        match dim_d {
            1 => Self::circle(density.unwrap_or(DEFAULT_CIRCLE_DIRECTIONS)),
            2 => Self::cube_lattice(density.unwrap_or(DEFAULT_CUBE_HALF_SIDE)),
            _ => Err(Error::InvalidDimension(format!(
                "direction lattices are provided for d = 1, 2 only, got {dim_d}"
            ))),
        }
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn dirs(&self) -> &[Vec<f64>] {
        &self.dirs
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.dirs.iter()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim_d(&self) -> usize {
        self.ambient_dim / 2
    }

    pub fn angular_resolution(&self) -> f64 {
        self.angular_resolution
    }

    /// Smallest angle from `v` to a member (`+inf` for the empty set).
    pub fn min_angle_to(&self, v: &[f64]) -> f64 {
        self.dirs
            .iter()
            .map(|w| angle_between(w, v))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains_within(&self, v: &[f64], tol: f64) -> bool {
        within_angle(self.min_angle_to(v), tol)
    }

    /// Members of `self` farther than `tol` from `other`, with their distance.
    pub fn excess_over(&self, other: &DirectionSet, tol: f64) -> Vec<(Vec<f64>, f64)> {
        self.dirs
            .iter()
            .filter_map(|v| {
                let a = other.min_angle_to(v);
                (!within_angle(a, tol)).then(|| (v.clone(), a))
            })
            .collect()
    }

    /// `self ⊆ other` up to the angular tolerance.
    pub fn subset_within(&self, other: &DirectionSet, tol: f64) -> bool {
        self.dirs.iter().all(|v| other.contains_within(v, tol))
    }

    /// Same set up to the angular tolerance, in both directions.
    pub fn equal_within(&self, other: &DirectionSet, tol: f64) -> bool {
        self.subset_within(other, tol) && other.subset_within(self, tol)
    }

    /// All members of `lattice` within `step` of some member of `self`.
    pub fn dilate(&self, lattice: &DirectionSet, step: f64) -> DirectionSet {
        let dirs = lattice
            .dirs
            .iter()
            .filter(|w| self.contains_within(w, step))
            .cloned()
            .collect();
        DirectionSet {
            ambient_dim: lattice.ambient_dim,
            angular_resolution: lattice.angular_resolution,
            dirs,
        }
    }

    /// Normalized images `normalize(M v)`; vectors mapped to zero are dropped.
    pub fn map_linear(&self, m: &RMatrix) -> DirectionSet {
        assert_eq!(m.ncols(), self.ambient_dim, "matrix does not act on these directions");
        let images = self
            .dirs
            .iter()
            .map(|v| (m * DVector::from_column_slice(v)).iter().copied().collect())
            .collect();
        DirectionSet::from_vectors(images, m.nrows(), self.angular_resolution)
    }

    /// Members whose distance to `sub` is at most `sin(tol)` (the subspace cone).
    pub fn within_subspace_cone(&self, sub: &Subspace, tol: f64) -> DirectionSet {
        let dirs = self
            .dirs
            .iter()
            .filter(|v| in_subspace_cone(v, sub, tol))
            .cloned()
            .collect();
        DirectionSet { ambient_dim: self.ambient_dim, angular_resolution: self.angular_resolution, dirs }
    }

    /// Union with near-duplicates merged.
    pub fn union(&self, other: &DirectionSet) -> DirectionSet {
        let mut all = self.dirs.clone();
        all.extend(other.dirs.iter().cloned());
        DirectionSet::from_vectors(all, self.ambient_dim, self.angular_resolution)
    }
}

/// Distance from the unit vector `v` to `sub` is at most `sin(tol)`.
pub fn in_subspace_cone(v: &[f64], sub: &Subspace, tol: f64) -> bool {
    if tol >= std::f64::consts::FRAC_PI_2 {
        return true;
    }
    let dist = sub.distance(&DVector::from_column_slice(v));
    dist <= tol.sin() * (1.0 + 1e-9) + 1e-12
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
