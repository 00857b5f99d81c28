use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::directions::{within_angle, DirectionSet};
use crate::error::{Error, Result};
use crate::tfa::signal::{GridSpec, SampledSignal};
use crate::tfa::stft::StftEvaluator;
use crate::tfa::window::WindowSpec;

/// `|V|` below this counts as underflow.
pub const FLOOR: f64 = 1e-13;
/// RMS residual (natural log units) above which a power-law fit is rejected.
pub const RESIDUAL_GATE: f64 = 0.5;
/// Threshold margin: `s*(omega) < s - MARGIN`.
pub const DEFAULT_MARGIN: f64 = 0.25;
/// Radius of the stencil over which `|V|` is maximized around a ray sample.
pub const STENCIL_RADIUS: f64 = 0.6;
/// Fraction of unreliable rays above which an estimate is inconclusive.
pub const INCONCLUSIVE_FRACTION: f64 = 0.25;

const MIN_SAMPLES: usize = 4;
const TAIL_MONOTONE_SLACK: f64 = 0.1;
const TAIL_STEEPENING: f64 = 1.0;

/// Geometric radii `r_min rho^k <= r_max` along each direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub ratio: f64,
    pub radii: Vec<f64>,
    pub directions: DirectionSet,
}

impl PhaseGrid {
    pub fn new(signal_grid: &GridSpec, r_min: f64, r_max: f64, ratio: f64, directions: DirectionSet) -> Result<Self> {
        if directions.ambient_dim() != 2 * signal_grid.dim_d {
            return Err(Error::InvalidDimension("direction sample does not match the signal dimension".into()));
        }
        if !(ratio > 1.0 && ratio.is_finite()) {
            return Err(Error::InvalidInput(format!("radial ratio must exceed 1, got {ratio}")));
        }
        if !(r_min >= 2.0) {
            return Err(Error::InvalidInput(format!("r_min must be at least 2, got {r_min}")));
        }
        let bound = resolvable_radius(signal_grid);
        if r_max > bound * (1.0 + 1e-12) {
            return Err(Error::Resolution(format!(
                "r_max = {r_max} exceeds 0.5 min(L, pi/h) = {bound}"
            )));
        }
        if r_max < r_min {
            return Err(Error::Resolution(format!(
                "grid too small: r_max = {r_max} below r_min = {r_min}"
            )));
        }
        let mut radii = Vec::new();
        let mut r = r_min;
        while r <= r_max * (1.0 + 1e-12) {
            radii.push(r);
            r *= ratio;
        }
        Ok(Self { r_min, r_max, ratio, radii, directions })
    }

    /// Defaults: `r_min` 4 (`d = 1`) or 2 (`d = 2`), ratio `2^{1/4}`, `r_max`
    /// the largest resolvable radius.
    pub fn default_for(signal_grid: &GridSpec) -> Result<Self> {
        Self::with_directions(signal_grid, DirectionSet::default_for(signal_grid.dim_d)?)
    }

    pub fn with_directions(signal_grid: &GridSpec, directions: DirectionSet) -> Result<Self> {
        let r_min = if signal_grid.dim_d == 1 { 4.0 } else { 2.0 };
        Self::new(signal_grid, r_min, resolvable_radius(signal_grid), 2f64.powf(0.25), directions)
    }

    /// Angular step of the direction sample.
    pub fn step(&self) -> f64 {
        self.directions.angular_resolution()
    }
}

/// `0.5 min(L, pi/h)`.
pub fn resolvable_radius(grid: &GridSpec) -> f64 {
    0.5 * grid.half_extent.min(grid.frequency_bound())
}

/// Estimated decay order along one ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    Finite(f64),
    /// Faster than any power (underflow or steepening tail).
    Infinite,
    Unreliable,
}

impl Order {
    pub fn is_reliable(self) -> bool {
        !matches!(self, Order::Unreliable)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Order::Finite(s) => Some(s),
            _ => None,
        }
    }
}

impl Serialize for Order {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Order::Finite(v) => s.serialize_f64(*v),
            Order::Infinite => s.serialize_str("inf"),
            Order::Unreliable => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayEstimate {
    pub direction: Vec<f64>,
    pub order: Order,
    pub residual: f64,
    /// Stencil maxima of `|V|` at the grid radii.
    pub samples: Vec<f64>,
}

impl Serialize for RayEstimate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(4))?;
        m.serialize_entry("direction", &self.direction)?;
        m.serialize_entry("order", &self.order)?;
        m.serialize_entry("reliable", &self.order.is_reliable())?;
        m.serialize_entry("residual", &self.residual)?;
        m.end()
    }
}

/// Per-direction decay orders of `V_phi u` and their thresholded sets.
#[derive(Debug, Clone, Serialize)]
pub struct WavefrontReport {
    pub dim_d: usize,
    pub window: WindowSpec,
    pub margin: f64,
    pub radii: Vec<f64>,
    pub rays: Vec<RayEstimate>,
    #[serde(skip)]
    pub lattice: DirectionSet,
}

impl WavefrontReport {
    pub fn step(&self) -> f64 {
        self.lattice.angular_resolution()
    }

    pub fn order_of(&self, direction: &[f64]) -> Option<Order> {
        self.rays
            .iter()
            .find(|r| r.direction.iter().zip(direction).all(|(a, b)| (a - b).abs() < 1e-12))
            .map(|r| r.order)
    }

    pub fn unreliable_fraction(&self) -> f64 {
        if self.rays.is_empty() {
            return 0.0;
        }
        self.rays.iter().filter(|r| !r.order.is_reliable()).count() as f64 / self.rays.len() as f64
    }

    pub fn is_inconclusive(&self) -> bool {
        self.unreliable_fraction() > INCONCLUSIVE_FRACTION
    }

    /// Reliable directions with finite `s*(omega) < s - margin`.
    pub fn threshold(&self, s: f64) -> DirectionSet {
        let dirs = self
            .rays
            .iter()
            .filter(|r| matches!(r.order, Order::Finite(o) if o < s - self.margin))
            .map(|r| r.direction.clone())
            .collect();
        DirectionSet::new(dirs, 2 * self.dim_d, self.lattice.angular_resolution())
            .expect("lattice directions are valid")
    }

    /// [`threshold`](Self::threshold) dilated by one angular step.
    pub fn estimate(&self, s: f64) -> DirectionSet {
        self.threshold(s).dilate(&self.lattice, self.step())
    }
}

/// Stencil offsets around a ray sample: centre plus points at distance
/// `rho` (8 around a circle for `d = 1`, both signs of each axis for `d = 2`).
pub fn stencil(dim_d: usize, rho: f64) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; 2 * dim_d]];
    if dim_d == 1 {
        for k in 0..8 {
            let (s, c) = (k as f64 * std::f64::consts::FRAC_PI_4).sin_cos();
            out.push(vec![rho * c, rho * s]);
        }
    } else {
        for axis in 0..2 * dim_d {
            for sign in [1.0, -1.0] {
                let mut v = vec![0.0; 2 * dim_d];
                v[axis] = sign * rho;
                out.push(v);
            }
        }
    }
    out
}

pub fn decay_order(u: &SampledSignal, w: WindowSpec, grid: &PhaseGrid) -> Result<WavefrontReport> {
    decay_order_with_margin(u, w, grid, DEFAULT_MARGIN)
}

pub fn decay_order_with_margin(u: &SampledSignal, w: WindowSpec, grid: &PhaseGrid, margin: f64) -> Result<WavefrontReport> {
    let d = u.dim_d();
    if grid.directions.ambient_dim() != 2 * d {
        return Err(Error::InvalidDimension("phase grid does not match the signal dimension".into()));
    }
    let bound = resolvable_radius(u.grid());
    if grid.r_max > bound * (1.0 + 1e-12) {
        return Err(Error::Resolution(format!(
            "phase grid radius {} exceeds 0.5 min(L, pi/h) = {bound} of the signal grid",
            grid.r_max
        )));
    }
    let ev = StftEvaluator::new(u, w);
    let offsets = stencil(d, STENCIL_RADIUS);
    let rays: Vec<RayEstimate> = grid
        .directions
        .dirs()
        .par_iter()
        .map(|dir| {
            let samples: Vec<f64> = grid
                .radii
                .iter()
                .map(|&r| {
                    offsets
                        .iter()
                        .map(|o| {
                            let p: Vec<f64> = dir.iter().zip(o).map(|(a, b)| r * a + b).collect();
                            ev.eval(&p).norm()
                        })
                        .fold(0.0, f64::max)
                })
                .collect();
            let (order, residual) = classify_ray(&grid.radii, &samples);
            RayEstimate { direction: dir.clone(), order, residual, samples }
        })
        .collect();
    Ok(WavefrontReport {
        dim_d: d,
        window: w,
        margin,
        radii: grid.radii.clone(),
        rays,
        lattice: grid.directions.clone(),
    })
}

/// Decay order from stencil maxima `values` at radii `radii`.
///
/// 1. Every sample in the outer half under [`FLOOR`]: superpolynomial.
/// 2. Fewer than 4 samples above the floor: unreliable.
/// 3. Least-squares fit of `log |V|` on `log r`; RMS residual within
///    [`RESIDUAL_GATE`] gives `s* = -slope`.
/// 4. Otherwise a monotone tail (from the peak) that either ends under the
///    floor or steepens by more than one order is superpolynomial.
/// 5. Anything else is unreliable.
pub fn classify_ray(radii: &[f64], values: &[f64]) -> (Order, f64) {
    assert_eq!(radii.len(), values.len());
    let n = values.len();
    if n == 0 {
        return (Order::Unreliable, 0.0);
    }
    if values[n / 2..].iter().all(|&v| v < FLOOR) {
        return (Order::Infinite, 0.0);
    }
    let (lr, lv): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .zip(values)
        .filter(|(_, &v)| v >= FLOOR)
        .map(|(&r, &v)| (r.ln(), v.ln()))
        .unzip();
    if lr.len() < MIN_SAMPLES {
        return (Order::Unreliable, 0.0);
    }
    let (slope, residual) = fit_line(&lr, &lv);
    if residual <= RESIDUAL_GATE {
        return (Order::Finite(-slope), residual);
    }
    let peak = lv
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
        .0;
    let (tr, tv) = (&lr[peak..], &lv[peak..]);
    let monotone = tv.windows(2).all(|w| w[1] - w[0] <= TAIL_MONOTONE_SLACK);
    if monotone {
        let underflow = values[n - 1] < FLOOR;
        let steepens = tv.len() >= 4 && {
            let k = tv.len();
            let first = fit_line(&tr[..3], &tv[..3]).0;
            let last = fit_line(&tr[k - 3..], &tv[k - 3..]).0;
            last < first - TAIL_STEEPENING
        };
        if underflow || steepens {
            return (Order::Infinite, residual);
        }
    }
    (Order::Unreliable, residual)
}

/// Unweighted least-squares slope and RMS residual of `y` against `x`.
fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum();
    (slope, (ss / n).sqrt())
}

pub fn wavefront_estimate(u: &SampledSignal, w: WindowSpec, grid: &PhaseGrid, s: f64) -> Result<DirectionSet> {
    Ok(decay_order(u, w, grid)?.estimate(s))
}

/// Outcome of estimating with the Gaussian and the `h_1` window.
#[derive(Debug, Clone, Serialize)]
pub struct WindowIndependence {
    /// Largest `|s*_gauss - s*_hermite|` over directions finite in both.
    pub max_order_discrepancy: Option<f64>,
    pub compared_directions: usize,
    pub gaussian_set: DirectionSet,
    pub hermite_set: DirectionSet,
    /// Thresholded sets agree up to one angular step.
    pub sets_agree: bool,
}

pub fn window_independence_check(u: &SampledSignal, grid: &PhaseGrid, s: f64) -> Result<WindowIndependence> {
    let a = decay_order(u, WindowSpec::Gaussian, grid)?;
    let b = decay_order(u, WindowSpec::Hermite(1), grid)?;
    let mut max_diff: Option<f64> = None;
    let mut compared = 0;
    for (ra, rb) in a.rays.iter().zip(&b.rays) {
        if let (Order::Finite(x), Order::Finite(y)) = (ra.order, rb.order) {
            compared += 1;
            let diff = (x - y).abs();
            max_diff = Some(max_diff.map_or(diff, |m: f64| m.max(diff)));
        }
    }
    let (ga, hb) = (a.threshold(s), b.threshold(s));
    let step = grid.step();
    let sets_agree = ga.equal_within(&hb, step);
    Ok(WindowIndependence {
        max_order_discrepancy: max_diff,
        compared_directions: compared,
        gaussian_set: ga,
        hermite_set: hb,
        sets_agree,
    })
}

/// Largest angle between a member of `a` and the set `b` (0 if `a` is empty).
pub fn max_excess_angle(a: &DirectionSet, b: &DirectionSet) -> f64 {
    a.iter().map(|v| b.min_angle_to(v)).fold(0.0, f64::max)
}

/// `a ⊆ b` within one step and vice versa.
pub fn same_up_to_step(a: &DirectionSet, b: &DirectionSet, step: f64) -> bool {
    within_angle(max_excess_angle(a, b), step) && within_angle(max_excess_angle(b, a), step)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn radii() -> Vec<f64> {
        (0..14).map(|k| 4.0 * 2f64.powf(k as f64 / 4.0)).collect()
    }

    #[test]
    fn power_law_rays() {
        let r = radii();
        for s in [-1.0, 0.0, 0.5, 2.0] {
            let v: Vec<f64> = r.iter().map(|x| 3.0 * x.powf(-s)).collect();
            let (o, res) = classify_ray(&r, &v);
            assert!((o.finite().unwrap() - s).abs() < 1e-10);
            assert!(res < 1e-10);
        }
    }

    #[test]
    fn gaussian_rays_are_superpolynomial() {
        let r = radii();
        let v: Vec<f64> = r.iter().map(|x| (-x * x / 4.0).exp()).collect();
        assert_eq!(classify_ray(&r, &v).0, Order::Infinite);
        let v: Vec<f64> = r.iter().map(|x| (-x * x / 200.0).exp()).collect();
        assert_eq!(classify_ray(&r, &v).0, Order::Infinite);
    }

    #[test]
    fn oscillating_rays_are_unreliable() {
        let r = radii();
        let v: Vec<f64> = r.iter().enumerate().map(|(k, _)| if k % 2 == 0 { 1.0 } else { 1e-4 }).collect();
        assert_eq!(classify_ray(&r, &v).0, Order::Unreliable);
        assert_eq!(classify_ray(&r[..3], &[1.0, 1.0, 1.0]).0, Order::Unreliable);
    }

    #[test]
    fn stencil_shapes() {
        assert_eq!(stencil(1, 0.6).len(), 9);
        assert_eq!(stencil(2, 0.6).len(), 9);
        for o in stencil(1, 0.6).iter().skip(1) {
            assert!(((o[0] * o[0] + o[1] * o[1]).sqrt() - 0.6).abs() < 1e-15);
        }
    }

    #[test]
    fn phase_grid_limits() {
        let g = GridSpec::self_dual(1, 4096).unwrap();
        let p = PhaseGrid::default_for(&g).unwrap();
        assert_eq!(p.radii.len(), 14);
        assert!(p.r_max <= 0.5 * g.half_extent.min(g.frequency_bound()) + 1e-12);
        let dirs = DirectionSet::circle(64).unwrap();
        assert!(matches!(PhaseGrid::new(&g, 4.0, 60.0, 1.2, dirs.clone()), Err(Error::Resolution(_))));
        assert!(PhaseGrid::new(&g, 1.0, 20.0, 1.2, dirs.clone()).is_err());
        assert!(PhaseGrid::new(&g, 4.0, 20.0, 1.0, dirs).is_err());
        let tiny = GridSpec::self_dual(1, 32).unwrap();
        assert!(matches!(PhaseGrid::default_for(&tiny), Err(Error::Resolution(_))));
    }
}
