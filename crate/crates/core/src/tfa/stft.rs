use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::spectral::fft_nd;
use crate::tfa::signal::{GridSpec, SampledSignal};
use crate::tfa::window::WindowSpec;

/// Largest rank for which the separated evaluation is used in `d = 2`.
const MAX_SEPARATED_RANK: usize = 24;
/// Relative size of the residual at which cross approximation stops.
const CROSS_TOL: f64 = 1e-15;

/// `V_phi u(x, xi) = \int u(y) conj(phi(y - x)) e^{-i <y, xi>} dy`
/// by the trapezoid rule on the signal grid, at phase-space points
/// `(x_1, .., x_d, xi_1, .., xi_d)`.
pub fn stft(u: &SampledSignal, w: WindowSpec, points: &[Vec<f64>]) -> Result<Vec<Complex64>> {
    for p in points {
        check_point(u.grid(), p)?;
    }
    let ev = StftEvaluator::new(u, w);
    Ok(points.par_iter().map(|p| ev.eval(p)).collect())
}

/// Rejects points outside `[-L, L]^d x [-pi/h, pi/h]^d`.
pub fn check_point(grid: &GridSpec, p: &[f64]) -> Result<()> {
    let d = grid.dim_d;
    if p.len() != 2 * d {
        return Err(Error::InvalidDimension(format!(
            "phase-space point has {} components, expected {}",
            p.len(),
            2 * d
        )));
    }
    let (xb, kb) = (grid.half_extent, grid.frequency_bound());
    let slack = 1e-12;
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("phase-space point is not finite".into()));
    }
    if p[..d].iter().any(|x| x.abs() > xb * (1.0 + slack)) || p[d..].iter().any(|k| k.abs() > kb * (1.0 + slack)) {
        return Err(Error::Resolution(format!(
            "point {p:?} outside the resolvable region |x| <= {xb}, |xi| <= {kb}"
        )));
    }
    Ok(())
}

/// Pre-processed signal for repeated STFT evaluation.
///
/// In `d = 2` the sample array is split into a short sum of outer products
/// `u = sum_k a_k b_k^T` (cross approximation with complete pivoting) when
/// that is cheap, turning each evaluation into products of 1D sums.
pub struct StftEvaluator<'a> {
    grid: GridSpec,
    window: WindowSpec,
    values: &'a [Complex64],
    factors: Option<Vec<(Vec<Complex64>, Vec<Complex64>)>>,
}

impl<'a> StftEvaluator<'a> {
    pub fn new(u: &'a SampledSignal, window: WindowSpec) -> Self {
        let factors = if u.dim_d() == 2 { cross_approximation(u.values(), u.n()) } else { None };
        Self { grid: *u.grid(), window, values: u.values(), factors }
    }

    /// Rank of the separated representation, if one is used.
    pub fn separated_rank(&self) -> Option<usize> {
        self.factors.as_ref().map(|f| f.len())
    }

    pub fn eval(&self, p: &[f64]) -> Complex64 {
        match self.grid.dim_d {
            1 => line_stft(self.values, &self.grid, self.window, p[0], p[1]),
            _ => match &self.factors {
                Some(f) => f
                    .iter()
                    .map(|(a, b)| {
                        line_stft(a, &self.grid, self.window, p[0], p[2])
                            * line_stft(b, &self.grid, self.window, p[1], p[3])
                    })
                    .sum(),
                None => self.eval_direct_2d(p),
            },
        }
    }

    fn eval_direct_2d(&self, p: &[f64]) -> Complex64 {
        let n = self.grid.n;
        let (r1, w1) = line_weights(&self.grid, self.window, p[0], p[2]);
        let (r2, w2) = line_weights(&self.grid, self.window, p[1], p[3]);
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, a) in r1.clone().zip(&w1) {
            let row = &self.values[i * n..(i + 1) * n];
            let inner: Complex64 = r2.clone().zip(&w2).map(|(j, b)| row[j] * b).sum();
            acc += a * inner;
        }
        acc
    }
}

/// Node range `[lo, hi]` where the window centred at `x` is non-negligible.
fn support(grid: &GridSpec, window: WindowSpec, x: f64) -> std::ops::Range<usize> {
    let h = grid.spacing();
    let rad = window.support_radius();
    let lo = ((x - rad + grid.half_extent) / h).ceil().max(0.0) as usize;
    let hi = ((x + rad + grid.half_extent) / h).floor();
    let hi = if hi < 0.0 { 0 } else { (hi as usize + 1).min(grid.n) };
    lo.min(hi)..hi
}

/// `h phi(y_j - x) e^{-i y_j xi}` over the support of the window.
fn line_weights(grid: &GridSpec, window: WindowSpec, x: f64, xi: f64) -> (std::ops::Range<usize>, Vec<Complex64>) {
    let r = support(grid, window, x);
    let h = grid.spacing();
    let w = r
        .clone()
        .map(|j| {
            let y = grid.node(j);
            Complex64::from_polar(h * window.eval_1d(y - x), -y * xi)
        })
        .collect();
    (r, w)
}

/// One-dimensional STFT of a line of samples.
fn line_stft(v: &[Complex64], grid: &GridSpec, window: WindowSpec, x: f64, xi: f64) -> Complex64 {
    let h = grid.spacing();
    support(grid, window, x)
        .map(|j| {
            let y = grid.node(j);
            v[j] * Complex64::from_polar(window.eval_1d(y - x), -y * xi)
        })
        .sum::<Complex64>()
        * h
}

/// `u ≈ sum_k a_k b_k^T` with complete pivoting; `None` if the rank exceeds
/// [`MAX_SEPARATED_RANK`].
fn cross_approximation(values: &[Complex64], n: usize) -> Option<Vec<(Vec<Complex64>, Vec<Complex64>)>> {
    let scale = values.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let mut out = Vec::new();
    if scale == 0.0 {
        return Some(out);
    }
    let tol = CROSS_TOL * scale;
    let mut r = values.to_vec();
    loop {
        let (piv, mag) = r
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bm), (i, z)| if z.norm() > bm { (i, z.norm()) } else { (bi, bm) });
        if mag <= tol {
            return Some(out);
        }
        if out.len() == MAX_SEPARATED_RANK {
            return None;
        }
        let (p, q) = (piv / n, piv % n);
        let pivot = r[piv];
        let a: Vec<Complex64> = (0..n).map(|i| r[i * n + q]).collect();
        let b: Vec<Complex64> = (0..n).map(|j| r[p * n + j] / pivot).collect();
        for i in 0..n {
            if a[i] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                r[i * n + j] -= a[i] * b[j];
            }
        }
        out.push((a, b));
    }
}

/// STFT on a regular lattice: `x` on every `x_stride`-th node, `xi` on every
/// `xi_stride`-th discrete frequency `2 pi k / (N h)` in ascending order.
#[derive(Debug, Clone)]
pub struct Spectrogram {
    pub dim_d: usize,
    pub xs: Vec<Vec<f64>>,
    pub xis: Vec<Vec<f64>>,
    /// `values[i * xis.len() + k]` is `V(xs[i], xis[k])`.
    pub values: Vec<Complex64>,
    /// Phase-space volume of one lattice cell.
    pub cell_volume: f64,
}

impl Spectrogram {
    /// `sum |V|^2 cell / (2 pi)^d`, which approximates `||u||^2 ||phi||^2`.
    pub fn energy(&self) -> f64 {
        let s: f64 = self.values.iter().map(|z| z.norm_sqr()).sum();
        s * self.cell_volume / (2.0 * std::f64::consts::PI).powi(self.dim_d as i32)
    }
}

pub fn stft_lattice(u: &SampledSignal, w: WindowSpec, x_stride: usize, xi_stride: usize) -> Result<Spectrogram> {
    let grid = *u.grid();
    let (n, d) = (grid.n, grid.dim_d);
    if x_stride == 0 || xi_stride == 0 || n % x_stride != 0 || n % xi_stride != 0 {
        return Err(Error::InvalidInput(format!(
            "strides must divide N = {n} (got {x_stride}, {xi_stride})"
        )));
    }
    let h = grid.spacing();
    let dxi = 2.0 * std::f64::consts::PI / (n as f64 * h);
    let xnodes: Vec<usize> = (0..n).step_by(x_stride).collect();
    // ascending frequencies: signed index -n/2 .. n/2-1
    let kidx: Vec<i64> = (0..n as i64).step_by(xi_stride).map(|k| k - n as i64 / 2).collect();
    let to_fft = |k: i64| k.rem_euclid(n as i64) as usize;

    let (xs, xis): (Vec<Vec<f64>>, Vec<Vec<f64>>) = match d {
        1 => (
            xnodes.iter().map(|&j| vec![grid.node(j)]).collect(),
            kidx.iter().map(|&k| vec![k as f64 * dxi]).collect(),
        ),
        _ => (
            xnodes.iter().flat_map(|&a| xnodes.iter().map(move |&b| (a, b))).map(|(a, b)| vec![grid.node(a), grid.node(b)]).collect(),
            kidx.iter().flat_map(|&a| kidx.iter().map(move |&b| (a, b))).map(|(a, b)| vec![a as f64 * dxi, b as f64 * dxi]).collect(),
        ),
    };

    let l = grid.half_extent;
    let rows: Vec<Vec<Complex64>> = xs
        .par_iter()
        .map(|x| {
            let mut buf: Vec<Complex64> = (0..grid.len())
                .map(|idx| {
                    let y = grid.point(idx);
                    let wy: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
                    u.values()[idx] * w.eval(&wy)
                })
                .collect();
            fft_nd(&mut buf, n, d, FftDirection::Forward);
            let cell = grid.cell();
            match d {
                1 => kidx
                    .iter()
                    .map(|&k| buf[to_fft(k)] * Complex64::from_polar(cell, l * k as f64 * dxi))
                    .collect(),
                _ => kidx
                    .iter()
                    .flat_map(|&a| kidx.iter().map(move |&b| (a, b)))
                    .map(|(a, b)| {
                        buf[to_fft(a) * n + to_fft(b)]
                            * Complex64::from_polar(cell, l * (a + b) as f64 * dxi)
                    })
                    .collect(),
            }
        })
        .collect();
    let cell_volume = ((x_stride as f64) * h * (xi_stride as f64) * dxi).powi(d as i32);
    Ok(Spectrogram { dim_d: d, xs, xis, values: rows.concat(), cell_volume })
}
