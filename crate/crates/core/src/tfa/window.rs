use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tfa::signal::GridSpec;

/// Analysis window: a Hermite function `h_k` per axis (`k = 0` is the
/// Gaussian), normalized in `L^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WindowSpec {
    Gaussian,
    Hermite(usize),
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec::Gaussian
    }
}

impl WindowSpec {
    pub fn order(self) -> usize {
        match self {
            WindowSpec::Gaussian => 0,
            WindowSpec::Hermite(k) => k,
        }
    }

    pub fn eval_1d(self, y: f64) -> f64 {
        hermite_function(self.order(), y)
    }

    pub fn eval(self, y: &[f64]) -> f64 {
        y.iter().map(|&v| self.eval_1d(v)).product()
    }

    /// Per-axis radius outside which the window is below `1e-20`.
    pub fn support_radius(self) -> f64 {
        8.87 + ((2 * self.order() + 1) as f64).sqrt()
    }

    /// `L^2` norm of the sampled window on `grid`.
    pub fn sampled_norm(self, grid: &GridSpec) -> f64 {
        let h = grid.spacing();
        let s: f64 = grid.nodes().iter().map(|&y| self.eval_1d(y).powi(2)).sum();
        (s * h).sqrt().powi(grid.dim_d as i32)
    }
}

impl fmt::Display for WindowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowSpec::Gaussian => write!(f, "gaussian"),
            WindowSpec::Hermite(k) => write!(f, "hermite_{k}"),
        }
    }
}

impl FromStr for WindowSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "gaussian" {
            return Ok(WindowSpec::Gaussian);
        }
        s.strip_prefix("hermite_")
            .and_then(|k| k.parse::<usize>().ok())
            .filter(|&k| k <= 8)
            .map(WindowSpec::Hermite)
            .ok_or_else(|| {
                Error::InvalidInput(format!("unknown window '{s}' (expected gaussian or hermite_k, k <= 8)"))
            })
    }
}

impl Serialize for WindowSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for WindowSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Normalized Hermite function `h_k(y)` by the three-term recurrence.
pub fn hermite_function(k: usize, y: f64) -> f64 {
    let h0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * y * y).exp();
    if k == 0 {
        return h0;
    }
    let mut prev = h0;
    let mut cur = std::f64::consts::SQRT_2 * y * h0;
    for j in 1..k {
        let jf = j as f64;
        let next = (2.0 / (jf + 1.0)).sqrt() * y * cur - (jf / (jf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_are_normalized_on_grid() {
        for d in 1..=2 {
            let g = GridSpec::self_dual(d, 256).unwrap();
            for w in [WindowSpec::Gaussian, WindowSpec::Hermite(1), WindowSpec::Hermite(4)] {
                assert!((w.sampled_norm(&g) - 1.0).abs() < 1e-8, "{w} d={d}");
            }
        }
    }

    #[test]
    fn hermite_closed_forms() {
        let c = std::f64::consts::PI.powf(-0.25);
        for &y in &[-2.0, -0.3, 0.0, 1.7] {
            let g = (-0.5 * y * y as f64).exp();
            assert!((hermite_function(1, y) - c * 2f64.sqrt() * y * g).abs() < 1e-14);
            let h2 = c / 2f64.sqrt() * (2.0 * y * y - 1.0) * g;
            assert!((hermite_function(2, y) - h2).abs() < 1e-14);
        }
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("gaussian".parse::<WindowSpec>().unwrap(), WindowSpec::Gaussian);
        assert_eq!("hermite_1".parse::<WindowSpec>().unwrap(), WindowSpec::Hermite(1));
        assert!("hermite_x".parse::<WindowSpec>().is_err());
        assert_eq!(WindowSpec::Hermite(3).to_string(), "hermite_3");
    }
}
