use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{for_each_axis_line, ChirpZ};
use crate::symplectic::{is_symplectic, standard_symplectic_form, PhaseMatrix, RMatrix};
use crate::tfa::signal::SampledSignal;

use super::grid::{chirp_multiply, fourier_transform, schrodinger_free_propagate, ChirpMode};

const SYMPLECTIC_TOL: f64 = 1e-10;

/// Generators of the metaplectic group realized on the grid.
#[derive(Debug, Clone, PartialEq)]
pub enum MetaplecticGenerator {
    /// Unitary Fourier transform, `chi = J`.
    Fourier,
    /// Multiplication by `e^{i <x, A x>/2}`, `chi = [[I, 0], [A, I]]`.
    Chirp(RMatrix),
    /// `u -> |det L|^{-1/2} u(L^{-1} x)`, `chi = [[L, 0], [0, L^{-T}]]`.
    Dilation(RMatrix),
    /// `e^{-it|D|^2}`, `chi = [[I, 2tI], [0, I]]`.
    FreeFlow(f64),
}

impl MetaplecticGenerator {
    /// The symplectic matrix `chi` with `WF(mu(chi) u) = chi WF(u)`.
    pub fn chi(&self, dim_d: usize) -> Result<PhaseMatrix> {
        let d = dim_d;
        let ident = RMatrix::identity(d, d);
        let zero = RMatrix::zeros(d, d);
        let real = |a: &RMatrix, b: &RMatrix, c: &RMatrix, e: &RMatrix| -> Result<PhaseMatrix> {
            let cplx = |m: &RMatrix| m.map(|v| Complex64::new(v, 0.0));
            PhaseMatrix::from_blocks(&cplx(a), &cplx(b), &cplx(c), &cplx(e))
        };
        let chi = match self {
            MetaplecticGenerator::Fourier => standard_symplectic_form(d)?,
            MetaplecticGenerator::Chirp(a) => {
                check_square(a, d, "chirp matrix")?;
                if (a - a.transpose()).amax() > 1e-12 {
                    return Err(Error::InvalidInput("chirp matrix must be symmetric".into()));
                }
                real(&ident, &zero, a, &ident)?
            }
            MetaplecticGenerator::Dilation(l) => {
                check_square(l, d, "dilation matrix")?;
                let inv_t = l
                    .clone()
                    .try_inverse()
                    .ok_or_else(|| Error::InvalidInput("dilation matrix is singular".into()))?
                    .transpose();
                real(l, &zero, &zero, &inv_t)?
            }
            MetaplecticGenerator::FreeFlow(t) => real(&ident, &(&ident * (2.0 * t)), &zero, &ident)?,
        };
        if !is_symplectic(&chi, SYMPLECTIC_TOL) {
            return Err(Error::InvalidInput("generator matrix is not symplectic".into()));
        }
        Ok(chi)
    }

    pub fn apply(&self, u: &SampledSignal) -> Result<SampledSignal> {
        self.chi(u.dim_d())?;
        match self {
            MetaplecticGenerator::Fourier => fourier_transform(u, false),
            MetaplecticGenerator::Chirp(a) => chirp_multiply(u, a, ChirpMode::Phase),
            MetaplecticGenerator::Dilation(l) => dilate(u, l),
            MetaplecticGenerator::FreeFlow(t) => schrodinger_free_propagate(u, *t),
        }
    }
}

fn check_square(m: &RMatrix, d: usize, what: &str) -> Result<()> {
    if m.shape() != (d, d) {
        return Err(Error::InvalidDimension(format!("{what} must be {d}x{d}, got {:?}", m.shape())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{what} has non-finite entries")));
    }
    Ok(())
}

/// Applies the generators in order; returns the result and the composite
/// `chi_k ... chi_1`.
pub fn metaplectic_apply(u: &SampledSignal, gens: &[MetaplecticGenerator]) -> Result<(SampledSignal, PhaseMatrix)> {
    let mut out = u.clone();
    let mut chi = PhaseMatrix::identity(u.dim_d());
    for g in gens {
        out = g.apply(&out)?;
        chi = g.chi(u.dim_d())?.mul(&chi);
    }
    Ok((out, chi))
}

/// Band-limited resampling `v(x) = |det L|^{-1/2} u(L^{-1} x)` for diagonal
/// `L` (per-axis trigonometric interpolation evaluated by chirp-z). Nodes whose
/// preimage leaves the grid box are set to zero.
fn dilate(u: &SampledSignal, l: &RMatrix) -> Result<SampledSignal> {
    let d = u.dim_d();
    let det = l.determinant();
    if !(0.125..=8.0).contains(&det.abs()) {
        return Err(Error::OutOfRange(format!(
            "|det L| = {} outside [1/8, 8] (resampling accuracy)",
            det.abs()
        )));
    }
    let off_diag = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).filter(|(i, j)| i != j).any(|(i, j)| l[(i, j)] != 0.0);
    if off_diag {
        return Err(Error::UnsupportedPropagator("only diagonal dilations are implemented".into()));
    }
    let n = u.n();
    let grid = *u.grid();
    let mut v = u.values().to_vec();
    let dft = ChirpZ::new(n, 2.0 * std::f64::consts::PI / n as f64);
    let mut axis = 0usize;
    let scales: Vec<f64> = (0..d).map(|i| l[(i, i)]).collect();
    // one ChirpZ per axis; for_each_axis_line walks axis 0 lines then axis 1
    let evals: Vec<ChirpZ> = scales
        .iter()
        .map(|&s| ChirpZ::new(n, -2.0 * std::f64::consts::PI / (n as f64 * s)))
        .collect();
    let lines_per_axis = n.pow(d as u32 - 1);
    let mut count = 0usize;
    for_each_axis_line(&mut v, n, d, |line| {
        // rows of a row-major array vary the last index, so the first pass is axis d-1
        let ax = d - 1 - axis;
        let coeffs = dft.apply(line);
        let vals = evals[ax].apply(&coeffs);
        let norm = 1.0 / (n as f64 * scales[ax].abs().sqrt());
        for (i, (z, w)) in line.iter_mut().zip(vals).enumerate() {
            // trigonometric interpolation is periodic; outside the source box u is zero
            let inside = (grid.node(i) / scales[ax]).abs() <= grid.half_extent;
            *z = if inside { w * norm } else { Complex64::new(0.0, 0.0) };
        }
        count += 1;
        if count == lines_per_axis {
            count = 0;
            axis += 1;
        }
    });
    u.with_values(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tfa::signal::{Builtin, GridSpec};

    fn gauss(n: usize) -> SampledSignal {
        SampledSignal::builtin(GridSpec::self_dual(1, n).unwrap(), &Builtin::Gaussian).unwrap()
    }

    #[test]
    fn fourier_four_times_is_identity() {
        let u = gauss(512).time_frequency_shift(&[11], &[0.8]).unwrap();
        let gens = vec![MetaplecticGenerator::Fourier; 4];
        let (v, chi) = metaplectic_apply(&u, &gens).unwrap();
        assert!(v.l2_distance(&u) < 1e-8);
        assert!(chi.max_diff(&PhaseMatrix::identity(1)) < 1e-15);
    }

    #[test]
    fn gaussian_is_fourier_invariant() {
        let u = gauss(512);
        let v = MetaplecticGenerator::Fourier.apply(&u).unwrap();
        assert!(v.l2_distance(&u) < 1e-10);
    }

    #[test]
    fn dilation_of_gaussian() {
        let u = gauss(1024);
        for s in [0.5, 1.7, -2.0] {
            let v = MetaplecticGenerator::Dilation(RMatrix::from_element(1, 1, s)).apply(&u).unwrap();
            let expect = SampledSignal::from_fn(*u.grid(), |x| {
                let y = x[0] / s;
                Complex64::new(std::f64::consts::PI.powf(-0.25) * (-y * y / 2.0).exp() / s.abs().sqrt(), 0.0)
            })
            .unwrap();
            assert!(v.l2_distance(&expect) < 1e-9, "scale {s}: {}", v.l2_distance(&expect));
        }
        assert!(MetaplecticGenerator::Dilation(RMatrix::from_element(1, 1, 20.0)).apply(&u).is_err());
    }

    #[test]
    fn dilation_2d_per_axis() {
        let g = GridSpec::self_dual(2, 128).unwrap();
        let u = SampledSignal::builtin(g, &Builtin::Gaussian).unwrap();
        let l = RMatrix::from_row_slice(2, 2, &[1.5, 0.0, 0.0, 0.75]);
        let v = MetaplecticGenerator::Dilation(l).apply(&u).unwrap();
        let expect = SampledSignal::from_fn(g, |x| {
            let (a, b) = (x[0] / 1.5, x[1] / 0.75);
            Complex64::new((-(a * a + b * b) / 2.0).exp() / std::f64::consts::PI.sqrt() / (1.5f64 * 0.75).sqrt(), 0.0)
        })
        .unwrap();
        assert!(v.l2_distance(&expect) < 1e-9);
    }

    #[test]
    fn chirp_generator_matrix() {
        let a = RMatrix::from_element(1, 1, 2.0);
        let chi = MetaplecticGenerator::Chirp(a).chi(1).unwrap();
        assert_eq!(chi.re(), RMatrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0, 1.0]));
    }
}
