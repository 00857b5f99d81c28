//! Propagators `e^{-t q^w}`: the exact Gaussian calculus and grid
//! realizations for the families that admit a fast exact form.

pub mod gaussian;
pub mod grid;
pub mod metaplectic;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadham::QuadraticHamiltonian;
use crate::symplectic::CMatrix;
use crate::tfa::signal::SampledSignal;

pub use gaussian::{gaussian_propagate, GaussianState};
pub use grid::{
    chirp_multiply, fourier_transform, fractional_fourier, harmonic_oscillator_propagate,
    heat_propagate, quadratic_fourier_multiplier, quadratic_multiply, schrodinger_free_propagate,
    ChirpMode,
};
pub use metaplectic::{metaplectic_apply, MetaplecticGenerator};

const FAMILY_TOL: f64 = 1e-12;

/// How `propagate` realizes `e^{-t q^w}` for a given `Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PropagatorPath {
    Identity,
    /// `Q = diag(0, c I)`.
    FourierMultiplier { c_re: f64, c_im: f64 },
    /// `Q = diag(P, 0)`.
    PointwiseMultiplier,
    /// `Q = i omega I`, angle `2 omega t`.
    FractionalFourier { omega: f64 },
}

impl PropagatorPath {
    pub fn label(&self) -> &'static str {
        match self {
            PropagatorPath::Identity => "identity",
            PropagatorPath::FourierMultiplier { .. } => "fourier_multiplier",
            PropagatorPath::PointwiseMultiplier => "pointwise_multiplier",
            PropagatorPath::FractionalFourier { .. } => "fractional_fourier",
        }
    }
}

fn scalar_block(m: &CMatrix) -> Option<Complex64> {
    let c = m[(0, 0)];
    let d = m.nrows();
    let ok = (0..d).all(|i| (0..d).all(|j| {
        let target = if i == j { c } else { Complex64::new(0.0, 0.0) };
        (m[(i, j)] - target).norm() <= FAMILY_TOL
    }));
    ok.then_some(c)
}

fn is_zero(m: &CMatrix) -> bool {
    m.iter().all(|z| z.norm() <= FAMILY_TOL)
}

/// Matches `Q` against `diag(P, c I)` families with an exact grid propagator.
pub fn classify_family(q: &QuadraticHamiltonian) -> Result<PropagatorPath> {
    let (p, b, _, k) = q.matrix().blocks();
    if !is_zero(&b) {
        return Err(Error::UnsupportedPropagator(
            "Q has a non-zero x-xi block; no grid propagator is available".into(),
        ));
    }
    let p_zero = is_zero(&p);
    let c = scalar_block(&k).ok_or_else(|| {
        Error::UnsupportedPropagator("the xi-xi block of Q is not a multiple of the identity".into())
    })?;
    let c_zero = c.norm() <= FAMILY_TOL;
    match (p_zero, c_zero) {
        (true, true) => Ok(PropagatorPath::Identity),
        (true, false) => Ok(PropagatorPath::FourierMultiplier { c_re: c.re, c_im: c.im }),
        (false, true) => Ok(PropagatorPath::PointwiseMultiplier),
        (false, false) => match scalar_block(&p) {
            Some(pc) if (pc - c).norm() <= FAMILY_TOL && c.re.abs() <= FAMILY_TOL => {
                Ok(PropagatorPath::FractionalFourier { omega: c.im })
            }
            _ => Err(Error::UnsupportedPropagator(
                "only diag(P, 0), diag(0, cI) and i omega I are propagated on the grid".into(),
            )),
        },
    }
}

/// `e^{-t q^w} u` on the grid for the supported families.
pub fn propagate(u: &SampledSignal, q: &QuadraticHamiltonian, t: f64) -> Result<(SampledSignal, PropagatorPath)> {
    if q.dim_d() != u.dim_d() {
        return Err(Error::InvalidDimension(format!(
            "Q is for d = {} but the signal has d = {}",
            q.dim_d(),
            u.dim_d()
        )));
    }
    if !t.is_finite() {
        return Err(Error::InvalidInput("t must be finite".into()));
    }
    let path = classify_family(q)?;
    if t < 0.0 && !q.real_part_vanishes() {
        return Err(Error::InvalidInput(format!("t = {t} < 0 requires Re Q = 0")));
    }
    if t == 0.0 {
        return Ok((u.clone(), path));
    }
    let out = match &path {
        PropagatorPath::Identity => u.clone(),
        PropagatorPath::FourierMultiplier { c_re, c_im } => {
            quadratic_fourier_multiplier(u, Complex64::new(*c_re, *c_im), t)?
        }
        PropagatorPath::PointwiseMultiplier => {
            let (p, ..) = q.matrix().blocks();
            quadratic_multiply(u, &(p * Complex64::new(t, 0.0)))
        }
        PropagatorPath::FractionalFourier { omega } => fractional_fourier(u, 2.0 * omega * t)?,
    };
    Ok((out, path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::RMatrix;
    use crate::tfa::signal::{Builtin, GridSpec};

    #[test]
    fn families() {
        assert_eq!(
            classify_family(&QuadraticHamiltonian::heat(2).unwrap()).unwrap(),
            PropagatorPath::FourierMultiplier { c_re: 1.0, c_im: 0.0 }
        );
        assert_eq!(
            classify_family(&QuadraticHamiltonian::harmonic(1).unwrap()).unwrap(),
            PropagatorPath::FractionalFourier { omega: 1.0 }
        );
        let a = RMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(
            classify_family(&QuadraticHamiltonian::damping(&a).unwrap()).unwrap(),
            PropagatorPath::PointwiseMultiplier
        );
        let z = RMatrix::zeros(2, 2);
        let q = QuadraticHamiltonian::from_parts(&z, &RMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert!(matches!(classify_family(&q), Err(Error::UnsupportedPropagator(_))));
        assert_eq!(classify_family(&QuadraticHamiltonian::from_parts(&z, &z).unwrap()).unwrap(), PropagatorPath::Identity);
    }

    #[test]
    fn dispatch_matches_direct_calls() {
        let g = GridSpec::self_dual(1, 512).unwrap();
        let u = SampledSignal::builtin(g, &Builtin::Gaussian).unwrap().time_frequency_shift(&[7], &[1.0]).unwrap();
        let (v, _) = propagate(&u, &QuadraticHamiltonian::heat(1).unwrap(), 0.3).unwrap();
        assert!(v.l2_distance(&heat_propagate(&u, 0.3).unwrap()) < 1e-14);
        let (w, _) = propagate(&u, &QuadraticHamiltonian::harmonic(1).unwrap(), 0.4).unwrap();
        assert!(w.l2_distance(&harmonic_oscillator_propagate(&u, 0.4).unwrap()) < 1e-14);
        assert!(propagate(&u, &QuadraticHamiltonian::heat(1).unwrap(), -0.1).is_err());
    }
}
