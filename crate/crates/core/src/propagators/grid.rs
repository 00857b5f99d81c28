use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::spectral::{for_each_axis_line, fourier_multiplier, unitary_ft, unitary_ft_1d, ChirpZ};
use crate::symplectic::{CMatrix, RMatrix};
use crate::tfa::signal::SampledSignal;

/// Angles this close to an odd multiple of `pi` use the exact parity map.
const PARITY_SNAP: f64 = 1e-6;
const ZERO_ANGLE: f64 = 1e-12;

/// `e^{-t c |D|^2}`: Fourier multiplier `e^{-t c |xi|^2}` on the grid's
/// discrete frequencies. Requires `Re c >= 0`, and `t >= 0` unless `Re c = 0`.
pub fn quadratic_fourier_multiplier(u: &SampledSignal, c: Complex64, t: f64) -> Result<SampledSignal> {
    if !t.is_finite() {
        return Err(Error::InvalidInput("t must be finite".into()));
    }
    if c.re < 0.0 {
        return Err(Error::InvalidInput("Re c must be non-negative".into()));
    }
    if t < 0.0 && c.re != 0.0 {
        return Err(Error::InvalidInput(format!("backward dissipative flow (t = {t}) is not supported")));
    }
    if t == 0.0 {
        return Ok(u.clone());
    }
    let mut v = u.values().to_vec();
    fourier_multiplier(&mut v, u.n(), u.dim_d(), u.spacing(), |xi| {
        let k2: f64 = xi.iter().map(|k| k * k).sum();
        (-(c * t * k2)).exp()
    });
    u.with_values(v)
}

/// `e^{t Delta}`, i.e. `e^{-t q^w}` for `q = |xi|^2`.
pub fn heat_propagate(u: &SampledSignal, t: f64) -> Result<SampledSignal> {
    if t < 0.0 {
        return Err(Error::InvalidInput(format!("backward heat flow (t = {t}) is not supported")));
    }
    quadratic_fourier_multiplier(u, Complex64::new(1.0, 0.0), t)
}

/// `e^{-it|D|^2}`, i.e. `e^{-t q^w}` for `q = i|xi|^2` (any real `t`).
pub fn schrodinger_free_propagate(u: &SampledSignal, t: f64) -> Result<SampledSignal> {
    quadratic_fourier_multiplier(u, Complex64::new(0.0, 1.0), t)
}

/// Pointwise multipliers of the form `e^{<x, A x>...}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChirpMode {
    /// `e^{i <x, A x> / 2}`.
    Phase,
    /// `e^{-t <x, A x>}`, `A >= 0`, `t >= 0`.
    Damping { t: f64 },
}

pub fn chirp_multiply(u: &SampledSignal, a: &RMatrix, mode: ChirpMode) -> Result<SampledSignal> {
    let d = u.dim_d();
    if a.shape() != (d, d) {
        return Err(Error::InvalidDimension(format!("A must be {d}x{d}")));
    }
    if (a - a.transpose()).amax() > 1e-12 {
        return Err(Error::InvalidInput("A must be symmetric".into()));
    }
    let p = match mode {
        ChirpMode::Phase => a.map(|v| Complex64::new(0.0, -0.5 * v)),
        ChirpMode::Damping { t } => {
            if t < 0.0 || !t.is_finite() {
                return Err(Error::InvalidInput(format!("damping time must be non-negative, got {t}")));
            }
            let min = a.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
            if min < -1e-12 {
                return Err(Error::InvalidInput(format!(
                    "damping needs A >= 0 (smallest eigenvalue {min:e})"
                )));
            }
            a.map(|v| Complex64::new(t * v, 0.0))
        }
    };
    Ok(quadratic_multiply(u, &p))
}

/// Pointwise `e^{-<x, P x>}` for complex symmetric `P`.
pub fn quadratic_multiply(u: &SampledSignal, p: &CMatrix) -> SampledSignal {
    let grid = *u.grid();
    let values = u
        .values()
        .iter()
        .enumerate()
        .map(|(idx, v)| {
            let x = grid.point(idx);
            let mut quad = Complex64::new(0.0, 0.0);
            for i in 0..x.len() {
                for j in 0..x.len() {
                    quad += p[(i, j)] * x[i] * x[j];
                }
            }
            v * (-quad).exp()
        })
        .collect();
    u.with_values(values).expect("pointwise product stays on the grid")
}

/// `e^{-t q^w}` for `q = i(|x|^2 + |xi|^2)`: fractional Fourier transform of
/// angle `2t` along every axis.
pub fn harmonic_oscillator_propagate(u: &SampledSignal, t: f64) -> Result<SampledSignal> {
    fractional_fourier(u, 2.0 * t)
}

/// `U_theta` with `U_theta h_k = e^{-i theta (k + 1/2)} h_k` per axis, on a
/// self-dual grid.
pub fn fractional_fourier(u: &SampledSignal, theta: f64) -> Result<SampledSignal> {
    if !theta.is_finite() {
        return Err(Error::InvalidInput("angle must be finite".into()));
    }
    u.grid().require_self_dual("the fractional Fourier transform")?;
    let n = u.n();
    let h = u.spacing();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft(n, FftDirection::Forward);
    let inv = planner.plan_fft(n, FftDirection::Inverse);
    let wraps = (theta / (2.0 * PI)).round();
    let th = theta - 2.0 * PI * wraps;
    let sign = if (wraps as i64).rem_euclid(2) == 1 { -1.0 } else { 1.0 };

    // a direct angle with |angle| in [pi/4, 3pi/4], possibly followed by a quarter turn
    let steps: Vec<Step> = if th.abs() < ZERO_ANGLE {
        vec![]
    } else if th.abs() > PI - PARITY_SNAP {
        let f = if th > 0.0 { Complex64::new(0.0, -1.0) } else { Complex64::new(0.0, 1.0) };
        vec![Step::Parity(f)]
    } else if (FRAC_PI_4..=3.0 * FRAC_PI_4).contains(&th.abs()) {
        vec![Step::Direct(DirectKernel::new(n, h, th))]
    } else {
        let small = th.abs() < FRAC_PI_4;
        let forward = (th > 0.0) != small;
        let rest = if forward { th - FRAC_PI_2 } else { th + FRAC_PI_2 };
        vec![Step::Direct(DirectKernel::new(n, h, rest)), Step::Quarter(forward)]
    };
    let mut v = u.values().to_vec();
    for_each_axis_line(&mut v, n, u.dim_d(), |line| {
        for step in &steps {
            match step {
                Step::Direct(k) => k.apply(line),
                Step::Parity(f) => {
                    parity(line);
                    scale(line, *f);
                }
                Step::Quarter(true) => {
                    unitary_ft_1d(line, fwd.as_ref());
                    scale(line, Complex64::from_polar(1.0, -FRAC_PI_4));
                }
                Step::Quarter(false) => {
                    unitary_ft_1d(line, inv.as_ref());
                    scale(line, Complex64::from_polar(1.0, FRAC_PI_4));
                }
            }
        }
    });
    apply_sign(&mut v, sign, u.dim_d());
    u.with_values(v)
}

enum Step {
    Direct(DirectKernel),
    /// `U_{+-pi/2} = e^{-+i pi/4} F^{+-1}`.
    Quarter(bool),
    /// `U_{+-pi} = -+i P`.
    Parity(Complex64),
}

/// `U_{theta + 2 pi} = -U_theta` per axis.
fn apply_sign(v: &mut [Complex64], sign: f64, dim_d: usize) {
    let s = sign.powi(dim_d as i32);
    if s != 1.0 {
        for z in v.iter_mut() {
            *z *= s;
        }
    }
}

fn scale(line: &mut [Complex64], f: Complex64) {
    for z in line.iter_mut() {
        *z *= f;
    }
}

/// `u(x) -> u(-x)` on nodes `(j - N/2) h` (periodic at `-L`).
fn parity(line: &mut [Complex64]) {
    let n = line.len();
    let orig = line.to_vec();
    for (j, z) in line.iter_mut().enumerate() {
        *z = orig[(n - j) % n];
    }
}

/// Mehler kernel for `0 < |theta| < pi`:
/// `e^{-i sgn(theta) pi/4} (2 pi |sin theta|)^{-1/2}
///  exp(i cot(theta) (x^2 + y^2)/2 - i x y / sin(theta))`,
/// summed by a chirp-z transform on a twice finer grid. The input is
/// band-limited interpolated onto that grid and the output is low-passed back
/// to the original band, so rotated content beyond the Nyquist frequency is
/// dropped instead of folded.
struct DirectKernel {
    n: usize,
    czt: ChirpZ,
    in_chirp: Vec<Complex64>,
    out_chirp: Vec<Complex64>,
    fwd_n: std::sync::Arc<dyn rustfft::Fft<f64>>,
    fwd_2n: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv_2n: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl DirectKernel {
    fn new(n: usize, h: f64, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let cot = c / s;
        let m = 2 * n;
        let hf = 0.5 * h;
        let pre = Complex64::from_polar(hf / (2.0 * PI * s.abs()).sqrt(), -s.signum() * FRAC_PI_4);
        let half = n as f64;
        let chirp: Vec<Complex64> = (0..m)
            .map(|j| {
                let x = (j as f64 - half) * hf;
                Complex64::from_polar(1.0, 0.5 * cot * x * x)
            })
            .collect();
        let out_chirp = chirp.iter().map(|z| z * pre).collect();
        let mut planner = FftPlanner::new();
        Self {
            n,
            czt: ChirpZ::new(m, hf * hf / s),
            in_chirp: chirp,
            out_chirp,
            fwd_n: planner.plan_fft_forward(n),
            fwd_2n: planner.plan_fft_forward(m),
            inv_2n: planner.plan_fft_inverse(m),
        }
    }

    fn apply(&self, line: &mut [Complex64]) {
        let n = self.n;
        let m = 2 * n;
        let zero = Complex64::new(0.0, 0.0);

        // band-limited interpolation onto nodes (j - n) h / 2
        let mut spec = line.to_vec();
        self.fwd_n.process(&mut spec);
        let mut fine = vec![zero; m];
        for k in 0..n / 2 {
            fine[k] = spec[k];
        }
        for k in n / 2 + 1..n {
            fine[k + n] = spec[k];
        }
        if n % 2 == 0 {
            fine[n / 2] = spec[n / 2] * 0.5;
            fine[n / 2 + n] = spec[n / 2] * 0.5;
        } else {
            fine[n / 2] = spec[n / 2];
        }
        self.inv_2n.process(&mut fine);
        let scale = 1.0 / n as f64;
        for (z, c) in fine.iter_mut().zip(&self.in_chirp) {
            *z *= c * scale;
        }

        let mut out = self.czt.apply(&fine);
        for (z, c) in out.iter_mut().zip(&self.out_chirp) {
            *z *= c;
        }

        // low-pass to the original band and keep the even nodes
        self.fwd_2n.process(&mut out);
        for k in n / 2 + 1..m - n / 2 {
            out[k] = zero;
        }
        if n % 2 == 0 {
            let nyq = (out[n / 2] + out[m - n / 2]) * 0.5;
            out[n / 2] = nyq;
            out[m - n / 2] = nyq;
        }
        self.inv_2n.process(&mut out);
        let scale = 1.0 / m as f64;
        for (j, z) in line.iter_mut().enumerate() {
            *z = out[2 * j] * scale;
        }
    }
}

/// Unitary Fourier transform `(2 pi)^{-d/2} \int u(y) e^{-i<x,y>} dy` on a
/// self-dual grid.
pub fn fourier_transform(u: &SampledSignal, inverse: bool) -> Result<SampledSignal> {
    u.grid().require_self_dual("the Fourier transform")?;
    let mut v = u.values().to_vec();
    let dir = if inverse { FftDirection::Inverse } else { FftDirection::Forward };
    unitary_ft(&mut v, u.n(), u.dim_d(), dir);
    u.with_values(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tfa::signal::{Builtin, GridSpec};

    fn grid(n: usize) -> GridSpec {
        GridSpec::self_dual(1, n).unwrap()
    }

    #[test]
    fn heat_zero_time_and_backward() {
        let u = SampledSignal::builtin(grid(256), &Builtin::Delta).unwrap();
        assert_eq!(heat_propagate(&u, 0.0).unwrap(), u);
        assert!(heat_propagate(&u, -1.0).is_err());
    }

    #[test]
    fn heat_kernel_from_delta() {
        let g = grid(4096);
        let u = SampledSignal::builtin(g, &Builtin::Delta).unwrap();
        let t = 1.0;
        let v = heat_propagate(&u, t).unwrap();
        let k = SampledSignal::from_fn(g, |x| {
            Complex64::new((-x[0] * x[0] / (4.0 * t)).exp() / (4.0 * PI * t).sqrt(), 0.0)
        })
        .unwrap();
        assert!(v.l2_distance(&k) / k.l2_norm() < 1e-6);
    }

    #[test]
    fn schrodinger_is_unitary() {
        let u = SampledSignal::builtin(grid(1024), &Builtin::Chirp { a: 0.3 }).unwrap();
        let v = schrodinger_free_propagate(&u, 0.7).unwrap();
        assert!((v.l2_norm() - u.l2_norm()).abs() < 1e-10 * u.l2_norm());
    }

    #[test]
    fn damping_of_constant() {
        let u = SampledSignal::builtin(grid(256), &Builtin::Constant).unwrap();
        let a = RMatrix::from_element(1, 1, 1.0);
        let v = chirp_multiply(&u, &a, ChirpMode::Damping { t: 1.0 }).unwrap();
        for (idx, z) in v.values().iter().enumerate() {
            let x = u.grid().node(idx);
            assert!((z - Complex64::new((-x * x).exp(), 0.0)).norm() < 1e-15);
        }
        assert!(chirp_multiply(&u, &RMatrix::from_element(1, 1, -1.0), ChirpMode::Damping { t: 1.0 }).is_err());
        assert_eq!(chirp_multiply(&u, &RMatrix::zeros(1, 1), ChirpMode::Phase).unwrap(), u);
    }

    #[test]
    fn hermite_eigenfunctions() {
        let g = grid(1024);
        for k in 0..=4 {
            let u = SampledSignal::builtin(g, &Builtin::Hermite { k }).unwrap();
            for theta in [0.2, 0.9, PI / 2.0, 2.0, 2.9, PI, -1.3, 7.0] {
                let v = fractional_fourier(&u, theta).unwrap();
                let phase = Complex64::from_polar(1.0, -theta * (k as f64 + 0.5));
                let expect = u.with_values(u.values().iter().map(|z| z * phase).collect()).unwrap();
                assert!(v.l2_distance(&expect) < 1e-6, "k {k} theta {theta}: {}", v.l2_distance(&expect));
            }
        }
    }

    #[test]
    fn quarter_turn_is_fourier() {
        let g = grid(512);
        let u = SampledSignal::builtin(g, &Builtin::Hermite { k: 3 })
            .unwrap()
            .time_frequency_shift(&[7], &[1.5])
            .unwrap();
        let a = fractional_fourier(&u, PI / 2.0).unwrap();
        let f = fourier_transform(&u, false).unwrap();
        let b = f.with_values(f.values().iter().map(|z| z * Complex64::from_polar(1.0, -FRAC_PI_4)).collect()).unwrap();
        assert!(a.l2_distance(&b) < 1e-7);
    }

    #[test]
    fn fractional_group_law() {
        let g = grid(1024);
        let u = SampledSignal::builtin(g, &Builtin::Gaussian)
            .unwrap()
            .time_frequency_shift(&[20], &[2.0])
            .unwrap();
        let a = fractional_fourier(&fractional_fourier(&u, 0.4).unwrap(), 1.1).unwrap();
        let b = fractional_fourier(&u, 1.5).unwrap();
        assert!(a.l2_distance(&b) < 1e-8);
    }

    #[test]
    fn requires_self_dual_grid() {
        let g = GridSpec::new(1, 256, 10.0).unwrap();
        let u = SampledSignal::builtin(g, &Builtin::Gaussian).unwrap();
        assert!(matches!(fractional_fourier(&u, 1.0), Err(Error::Resolution(_))));
    }
}
