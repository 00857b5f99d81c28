//! FFT helpers on the sampling grid: multi-axis transforms, the unitary
//! Fourier transform of a self-dual grid and a centred chirp-z transform.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

/// In-place FFT along every axis of a row-major `n^d` array (unnormalized).
pub fn fft_nd(data: &mut [Complex64], n: usize, dim_d: usize, direction: FftDirection) {
    assert_eq!(data.len(), n.pow(dim_d as u32), "array size does not match n^d");
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft(n, direction);
    match dim_d {
        1 => fft.process(data),
        2 => {
            // rows are contiguous
            fft.process(data);
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for c in 0..n {
                for r in 0..n {
                    col[r] = data[r * n + c];
                }
                fft.process(&mut col);
                for r in 0..n {
                    data[r * n + c] = col[r];
                }
            }
        }
        _ => panic!("fft_nd supports d = 1, 2"),
    }
}

/// Signed FFT index: `k` for `k < n/2`, `k - n` otherwise.
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Multiplies by `m(xi)` in frequency space, `xi` on the grid's discrete
/// frequencies `2 pi k / (n h)`.
pub fn fourier_multiplier<F>(data: &mut [Complex64], n: usize, dim_d: usize, spacing: f64, m: F)
where
    F: Fn(&[f64]) -> Complex64,
{
    fft_nd(data, n, dim_d, FftDirection::Forward);
    let dxi = 2.0 * std::f64::consts::PI / (n as f64 * spacing);
    let scale = 1.0 / (n.pow(dim_d as u32) as f64);
    let mut xi = vec![0.0; dim_d];
    for (idx, v) in data.iter_mut().enumerate() {
        let mut rest = idx;
        for axis in (0..dim_d).rev() {
            xi[axis] = signed_index(rest % n, n) as f64 * dxi;
            rest /= n;
        }
        *v *= m(&xi) * scale;
    }
    fft_nd(data, n, dim_d, FftDirection::Inverse);
}

/// Unitary Fourier transform along one axis of a self-dual grid
/// (`n h^2 = 2 pi`, nodes `(j - n/2) h`): the exact DFT image of
/// `(2 pi)^{-1/2} \int u(y) e^{∓ i x y} dy`.
pub fn unitary_ft_1d(line: &mut [Complex64], fft: &dyn rustfft::Fft<f64>) {
    let n = line.len();
    let scale = 1.0 / (n as f64).sqrt();
    for (j, v) in line.iter_mut().enumerate() {
        if j % 2 == 1 {
            *v = -*v;
        }
    }
    fft.process(line);
    for (k, v) in line.iter_mut().enumerate() {
        let s = if k % 2 == 1 { -scale } else { scale };
        *v *= s;
    }
}

/// Applies `f` to every axis-line of a row-major `n^d` array.
pub fn for_each_axis_line<F>(data: &mut [Complex64], n: usize, dim_d: usize, mut f: F)
where
    F: FnMut(&mut [Complex64]),
{
    match dim_d {
        1 => f(data),
        2 => {
            for row in data.chunks_mut(n) {
                f(row);
            }
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for c in 0..n {
                for r in 0..n {
                    col[r] = data[r * n + c];
                }
                f(&mut col);
                for r in 0..n {
                    data[r * n + c] = col[r];
                }
            }
        }
        _ => panic!("only d = 1, 2 are supported"),
    }
}

/// Unitary Fourier transform (forward: `e^{-ixy}`) of a self-dual grid.
pub fn unitary_ft(data: &mut [Complex64], n: usize, dim_d: usize, direction: FftDirection) {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft(n, direction);
    for_each_axis_line(data, n, dim_d, |line| unitary_ft_1d(line, fft.as_ref()));
}

/// Centred chirp-z transform
/// `y_m = sum_n x_n e^{-i beta m n}`, `m, n` in `[-N/2, N/2)`,
/// by Bluestein's identity `mn = (m^2 + n^2 - (m - n)^2) / 2`.
pub struct ChirpZ {
    n: usize,
    beta: f64,
    kernel_hat: Vec<Complex64>,
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl ChirpZ {
    pub fn new(n: usize, beta: f64) -> Self {
        let m = 2 * n;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        let mut kernel = vec![Complex64::new(0.0, 0.0); m];
        for p in -(n as i64 - 1)..=(n as i64 - 1) {
            let idx = p.rem_euclid(m as i64) as usize;
            kernel[idx] = Complex64::from_polar(1.0, 0.5 * beta * (p * p) as f64);
        }
        fwd.process(&mut kernel);
        Self { n, beta, kernel_hat: kernel, fwd, inv }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        assert_eq!(x.len(), n);
        let m = 2 * n;
        let half = (n / 2) as i64;
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (i, v) in x.iter().enumerate() {
            let k = i as i64 - half;
            buf[i] = v * Complex64::from_polar(1.0, -0.5 * self.beta * (k * k) as f64);
        }
        self.fwd.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.inv.process(&mut buf);
        let scale = 1.0 / m as f64;
        (0..n)
            .map(|i| {
                let k = i as i64 - half;
                buf[i] * Complex64::from_polar(scale, -0.5 * self.beta * (k * k) as f64)
            })
            .collect()
    }
}
