use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tfa::window::hermite_function;

/// Uniform grid `x_j = -L + j h`, `h = 2L / N`, per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim_d: usize,
    pub n: usize,
    pub half_extent: f64,
}

pub const DEFAULT_N_1D: usize = 4096;
pub const DEFAULT_N_2D: usize = 256;

impl GridSpec {
    pub fn new(dim_d: usize, n: usize, half_extent: f64) -> Result<Self> {
        if !(1..=2).contains(&dim_d) {
            return Err(Error::InvalidDimension(format!("signals are supported for d = 1, 2, got {dim_d}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidInput(format!("N must be a power of two >= 8, got {n}")));
        }
        if !(half_extent > 0.0 && half_extent.is_finite()) {
            return Err(Error::InvalidInput(format!("half extent must be positive, got {half_extent}")));
        }
        Ok(Self { dim_d, n, half_extent })
    }

    /// The grid with `N h^2 = 2 pi`, on which the DFT is the Fourier transform.
    pub fn self_dual(dim_d: usize, n: usize) -> Result<Self> {
        Self::new(dim_d, n, (std::f64::consts::PI * n as f64 / 2.0).sqrt())
    }

    pub fn default_for(dim_d: usize) -> Result<Self> {
        match dim_d {
            1 => Self::self_dual(1, DEFAULT_N_1D),
            2 => Self::self_dual(2, DEFAULT_N_2D),
            _ => Err(Error::InvalidDimension(format!("no default grid for d = {dim_d}"))),
        }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_extent / self.n as f64
    }

    /// `pi / h`, the largest resolvable frequency.
    pub fn frequency_bound(&self) -> f64 {
        std::f64::consts::PI / self.spacing()
    }

    pub fn is_self_dual(&self) -> bool {
        let h = self.spacing();
        ((self.n as f64) * h * h / (2.0 * std::f64::consts::PI) - 1.0).abs() < 1e-9
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.half_extent + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim_d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume `h^d`.
    pub fn cell(&self) -> f64 {
        self.spacing().powi(self.dim_d as i32)
    }

    /// Coordinates of the flat index `idx` (row-major, first axis slowest).
    pub fn point(&self, idx: usize) -> Vec<f64> {
        match self.dim_d {
            1 => vec![self.node(idx)],
            _ => vec![self.node(idx / self.n), self.node(idx % self.n)],
        }
    }

    pub fn require_self_dual(&self, what: &str) -> Result<()> {
        if self.is_self_dual() {
            Ok(())
        } else {
            Err(Error::Resolution(format!(
                "{what} needs a self-dual grid (N h^2 = 2 pi); got N = {}, L = {}",
                self.n, self.half_extent
            )))
        }
    }
}

/// Named test signals realized on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Builtin {
    /// Single node of value `h^{-d}` at the origin.
    Delta,
    Constant,
    /// `e^{i <x, xi0>}`.
    PlaneWave { xi0: Vec<f64> },
    /// `e^{i a |x|^2 / 2}`.
    Chirp { a: f64 },
    /// `pi^{-d/4} e^{-|x|^2 / 2}`.
    Gaussian,
    /// Hermite function `h_k` (tensor power in `d = 2`).
    Hermite { k: usize },
    DeltaPlusConstant,
}

impl Builtin {
    pub fn label(&self) -> String {
        match self {
            Builtin::Delta => "delta".into(),
            Builtin::Constant => "constant".into(),
            Builtin::PlaneWave { xi0 } => format!("plane_wave{xi0:?}"),
            Builtin::Chirp { a } => format!("chirp(a={a})"),
            Builtin::Gaussian => "gaussian".into(),
            Builtin::Hermite { k } => format!("hermite_{k}"),
            Builtin::DeltaPlusConstant => "delta_plus_constant".into(),
        }
    }
}

/// Complex samples on a [`GridSpec`] (row-major for `d = 2`).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl SampledSignal {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidDimension(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("signal has non-finite samples".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn<F: Fn(&[f64]) -> Complex64>(grid: GridSpec, f: F) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Self::new(grid, values)
    }

    pub fn builtin(grid: GridSpec, b: &Builtin) -> Result<Self> {
        let d = grid.dim_d;
        let one = Complex64::new(1.0, 0.0);
        match b {
            Builtin::Delta => {
                let mut u = Self::zeros(grid);
                u.values[center_index(&grid)] = Complex64::new(1.0 / grid.cell(), 0.0);
                Ok(u)
            }
            Builtin::Constant => Self::from_fn(grid, |_| one),
            Builtin::PlaneWave { xi0 } => {
                if xi0.len() != d {
                    return Err(Error::InvalidDimension(format!("xi0 must have {d} components")));
                }
                if xi0.iter().any(|v| v.abs() > grid.frequency_bound()) {
                    return Err(Error::Resolution(format!(
                        "plane wave frequency exceeds pi/h = {}",
                        grid.frequency_bound()
                    )));
                }
                let xi0 = xi0.clone();
                Self::from_fn(grid, move |x| {
                    let ph: f64 = x.iter().zip(&xi0).map(|(a, b)| a * b).sum();
                    Complex64::from_polar(1.0, ph)
                })
            }
            Builtin::Chirp { a } => {
                let a = *a;
                if !a.is_finite() {
                    return Err(Error::InvalidInput("chirp rate must be finite".into()));
                }
                Self::from_fn(grid, move |x| {
                    let r2: f64 = x.iter().map(|v| v * v).sum();
                    Complex64::from_polar(1.0, 0.5 * a * r2)
                })
            }
            Builtin::Gaussian => Self::builtin(grid, &Builtin::Hermite { k: 0 }),
            Builtin::Hermite { k } => {
                let k = *k;
                Self::from_fn(grid, move |x| {
                    Complex64::new(x.iter().map(|&v| hermite_function(k, v)).product(), 0.0)
                })
            }
            Builtin::DeltaPlusConstant => {
                let mut u = Self::builtin(grid, &Builtin::Constant)?;
                u.values[center_index(&grid)] += Complex64::new(1.0 / grid.cell(), 0.0);
                Ok(u)
            }
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn dim_d(&self) -> usize {
        self.grid.dim_d
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn half_extent(&self) -> f64 {
        self.grid.half_extent
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn with_values(&self, values: Vec<Complex64>) -> Result<Self> {
        Self::new(self.grid, values)
    }

    /// Discrete `L^2` norm `(h^d sum |u_j|^2)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell() * self.values.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn l2_distance(&self, other: &SampledSignal) -> f64 {
        assert_eq!(self.grid, other.grid, "signals on different grids");
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        (self.grid.cell() * s).sqrt()
    }

    pub fn max_abs_diff(&self, other: &SampledSignal) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `Pi(z0) u = e^{i <x, xi0>} u(x - x0)` with `x0 = shift h` on the grid
    /// (periodic shift).
    pub fn time_frequency_shift(&self, shift: &[i64], xi0: &[f64]) -> Result<Self> {
        let d = self.dim_d();
        if shift.len() != d || xi0.len() != d {
            return Err(Error::InvalidDimension(format!("shift and modulation need {d} components")));
        }
        let n = self.n() as i64;
        let src = |j: usize, axis: usize| -> usize { (j as i64 - shift[axis]).rem_euclid(n) as usize };
        let mut out = Vec::with_capacity(self.values.len());
        for idx in 0..self.values.len() {
            let from = match d {
                1 => src(idx, 0),
                _ => {
                    let (a, b) = (idx / self.n(), idx % self.n());
                    src(a, 0) * self.n() + src(b, 1)
                }
            };
            let x = self.grid.point(idx);
            let ph: f64 = x.iter().zip(xi0).map(|(a, b)| a * b).sum();
            out.push(self.values[from] * Complex64::from_polar(1.0, ph));
        }
        Self::new(self.grid, out)
    }
}

fn center_index(grid: &GridSpec) -> usize {
    let c = grid.n / 2;
    match grid.dim_d {
        1 => c,
        _ => c * grid.n + c,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_dual_grid() {
        let g = GridSpec::self_dual(1, 4096).unwrap();
        assert!(g.is_self_dual());
        assert!((g.frequency_bound() - g.half_extent).abs() < 1e-9);
        assert_eq!(g.node(2048), 0.0);
        assert!(!GridSpec::new(1, 4096, 64.0).unwrap().is_self_dual());
        assert!(GridSpec::new(1, 100, 1.0).is_err());
        assert!(GridSpec::new(3, 64, 1.0).is_err());
    }

    #[test]
    fn delta_has_unit_mass() {
        for d in 1..=2 {
            let g = GridSpec::self_dual(d, 64).unwrap();
            let u = SampledSignal::builtin(g, &Builtin::Delta).unwrap();
            let mass: Complex64 = u.values().iter().sum::<Complex64>() * g.cell();
            assert!((mass - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn gaussian_is_normalized() {
        for d in 1..=2 {
            let g = GridSpec::self_dual(d, 256).unwrap();
            let u = SampledSignal::builtin(g, &Builtin::Gaussian).unwrap();
            assert!((u.l2_norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_moves_delta() {
        let g = GridSpec::self_dual(1, 64).unwrap();
        let u = SampledSignal::builtin(g, &Builtin::Delta).unwrap();
        let v = u.time_frequency_shift(&[3], &[0.0]).unwrap();
        assert_eq!(v.values()[35], u.values()[32]);
    }

    #[test]
    fn builtin_json_tags() {
        let b: Builtin = serde_json::from_str(r#"{"name": "chirp", "a": -1.0}"#).unwrap();
        assert_eq!(b, Builtin::Chirp { a: -1.0 });
        let b: Builtin = serde_json::from_str(r#"{"name": "delta_plus_constant"}"#).unwrap();
        assert_eq!(b, Builtin::DeltaPlusConstant);
        assert!(serde_json::from_str::<Builtin>(r#"{"name": "nope"}"#).is_err());
    }
}
