use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadham::{hamilton_matrix, QuadraticHamiltonian};
use crate::symplectic::CMatrix;
use crate::tfa::signal::{GridSpec, SampledSignal};

const DET_FLOOR: f64 = 1e-12;
const MAX_BRANCH_STEPS: usize = 1 << 16;

/// `u(x) = c e^{i <x - x0, M (x - x0)> / 2} e^{i <x, xi0>}` with
/// `M = M^T`, `Im M >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub m: CMatrix,
    pub c: Complex64,
    pub x0: Vec<f64>,
    pub xi0: Vec<f64>,
}

impl GaussianState {
    pub fn new(m: CMatrix, c: Complex64, x0: Vec<f64>, xi0: Vec<f64>) -> Result<Self> {
        let d = m.nrows();
        if d == 0 || m.ncols() != d || x0.len() != d || xi0.len() != d {
            return Err(Error::InvalidDimension("Gaussian state components have inconsistent sizes".into()));
        }
        validate_m(&m, 1e-10)?;
        Ok(Self { m, c, x0, xi0 })
    }

    /// Centred state with the given `M` and amplitude.
    pub fn centered(m: CMatrix, c: Complex64) -> Result<Self> {
        let d = m.nrows();
        Self::new(m, c, vec![0.0; d], vec![0.0; d])
    }

    /// `pi^{-d/4} e^{-|x|^2/2}` (`M = i I`).
    pub fn standard(dim_d: usize) -> Self {
        let m = CMatrix::identity(dim_d, dim_d) * Complex64::new(0.0, 1.0);
        let c = Complex64::new(std::f64::consts::PI.powf(-(dim_d as f64) / 4.0), 0.0);
        Self { m, c, x0: vec![0.0; dim_d], xi0: vec![0.0; dim_d] }
    }

    pub fn dim_d(&self) -> usize {
        self.m.nrows()
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let y = DVector::from_iterator(x.len(), x.iter().zip(&self.x0).map(|(a, b)| Complex64::new(a - b, 0.0)));
        let quad = (y.transpose() * &self.m * &y)[(0, 0)];
        let lin: f64 = x.iter().zip(&self.xi0).map(|(a, b)| a * b).sum();
        self.c * (Complex64::new(0.0, 0.5) * quad + Complex64::new(0.0, lin)).exp()
    }

    pub fn sample(&self, grid: &GridSpec) -> Result<SampledSignal> {
        if grid.dim_d != self.dim_d() {
            return Err(Error::InvalidDimension("grid and state dimensions differ".into()));
        }
        SampledSignal::from_fn(*grid, |x| self.eval(x))
    }
}

fn validate_m(m: &CMatrix, psd_tol: f64) -> Result<()> {
    let asym = (m - m.transpose()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
    if asym > 1e-12 {
        return Err(Error::InvalidInput(format!("M is not symmetric (deviation {asym:e})")));
    }
    let im = m.map(|z| z.im);
    let im = (&im + im.transpose()) * 0.5;
    let min = im.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if min < -psd_tol {
        return Err(Error::InvalidInput(format!("Im M has negative eigenvalue {min:e}")));
    }
    Ok(())
}

/// Exact action of `e^{-t q^w}` on a centred Gaussian:
/// with `e^{-2itF} = [[A, B], [C, D]]`,
/// `M' = (C + D M)(A + B M)^{-1}`, `c' = c det(A + B M)^{-1/2}`.
///
/// The square root follows `t' -> det(A(t') + B(t') M)` continuously from
/// `t' = 0`.
pub fn gaussian_propagate(g: &GaussianState, q: &QuadraticHamiltonian, t: f64) -> Result<GaussianState> {
    if q.dim_d() != g.dim_d() {
        return Err(Error::InvalidDimension("Hamiltonian and state dimensions differ".into()));
    }
    if g.x0.iter().chain(&g.xi0).any(|v| *v != 0.0) {
        return Err(Error::InvalidInput("gaussian_propagate expects a centred state (x0 = xi0 = 0)".into()));
    }
    if !t.is_finite() {
        return Err(Error::InvalidInput("t must be finite".into()));
    }
    if t < 0.0 && !q.real_part_vanishes() {
        return Err(Error::InvalidInput(format!("t = {t} < 0 requires Re Q = 0")));
    }
    if t == 0.0 {
        return Ok(g.clone());
    }
    let h = hamilton_matrix(q);
    let blocks_at = |s: f64| -> Result<(CMatrix, CMatrix)> {
        let tm = h.propagator_matrix(s)?;
        let (a, b, c, dd) = tm.blocks();
        Ok((&a + &b * &g.m, &c + &dd * &g.m))
    };

    let mut steps = 16usize;
    let dets = loop {
        let dets: Vec<Complex64> = (0..=steps)
            .map(|k| blocks_at(t * k as f64 / steps as f64).map(|(den, _)| den.determinant()))
            .collect::<Result<_>>()?;
        if let Some(z) = dets.iter().find(|z| z.norm() < DET_FLOOR) {
            return Err(Error::Degenerate(format!(
                "det(A + B M) = {z} vanishes along the flow (caustic)"
            )));
        }
        let smooth = dets.windows(2).all(|w| (w[1] / w[0]).arg().abs() < std::f64::consts::FRAC_PI_2);
        if smooth {
            break dets;
        }
        if steps >= MAX_BRANCH_STEPS {
            return Err(Error::Degenerate("could not resolve the square-root branch".into()));
        }
        steps *= 2;
    };
    let mut root = Complex64::new(1.0, 0.0);
    for w in dets.windows(2) {
        // sqrt(det_{k+1}) = sqrt(det_k) sqrt(det_{k+1}/det_k), principal ratio root
        root *= (w[1] / w[0]).sqrt();
    }
    let (den, num) = blocks_at(t)?;
    let inv = den
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("A + B M is singular".into()))?;
    let m_new = num * inv;
    let m_new = (&m_new + m_new.transpose()) * Complex64::new(0.5, 0.0);
    validate_m(&m_new, 1e-9)?;
    Ok(GaussianState { m: m_new, c: g.c / root, x0: g.x0.clone(), xi0: g.xi0.clone() })
}
