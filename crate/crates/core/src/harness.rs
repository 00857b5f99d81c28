//! End-to-end inclusion experiments: estimate the wave front set of a
//! signal, propagate it, estimate again and compare with the predicted set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::directions::{within_angle, DirectionSet};
use crate::error::{Error, Result};
use crate::propagators::{propagate, PropagatorPath};
use crate::quadham::{
    default_rule, hamilton_matrix, order_budget, predicted_set, HamiltonianFile, QuadraticHamiltonian, Rule,
    DEFAULT_EPSILON,
};
use crate::symplectic::{RMatrix, DEFAULT_RANK_TOL};
use crate::tfa::estimate::{decay_order, PhaseGrid, WavefrontReport};
use crate::tfa::signal::{Builtin, GridSpec, SampledSignal};
use crate::tfa::window::WindowSpec;

/// Named experiment families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Heat,
    FreeSchrodinger,
    Harmonic,
    Damping,
    Custom,
}

impl Preset {
    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::InvalidInput(format!("unknown preset '{s}'")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Heat => "heat",
            Preset::FreeSchrodinger => "free_schrodinger",
            Preset::Harmonic => "harmonic",
            Preset::Damping => "damping",
            Preset::Custom => "custom",
        }
    }
}

/// On-disk experiment description; every field but `preset` is optional
/// and overrides the preset default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub preset: Option<Preset>,
    pub d: Option<usize>,
    /// Damping matrix for the `damping` preset.
    #[serde(rename = "A", skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    /// `Q` for the `custom` preset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<HamiltonianFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal: Option<Builtin>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orders: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<Rule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directions: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance_angle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Replace every predicted set by the empty set.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub stub_empty_prediction: bool,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub preset: Preset,
    pub q: QuadraticHamiltonian,
    pub signal: Builtin,
    pub grid: GridSpec,
    pub window: WindowSpec,
    pub phase_grid: PhaseGrid,
    pub times: Vec<f64>,
    pub orders: Vec<f64>,
    pub rule: Rule,
    pub epsilon: f64,
    /// Angular tolerance of the inclusion test and of subspace cones.
    pub tolerance: f64,
    pub stub_empty_prediction: bool,
}

fn default_damping(d: usize) -> RMatrix {
    let mut a = RMatrix::zeros(d, d);
    a[(0, 0)] = 1.0;
    a
}

/// Fully populated experiment with the defaults of `preset`.
///
/// | preset | Q | signal | rule | times |
/// |---|---|---|---|---|
/// | heat | `|xi|^2` | `delta + 1` | equal | 0.25, 0.5, 1 |
/// | free_schrodinger | `i|xi|^2` | chirp `a = 1` | exact | 0.5 |
/// | harmonic | `i(|x|^2 + |xi|^2)` | delta | exact | pi/8, pi/4 |
/// | damping | `<x, A x>`, `A = diag(1, 0, ..)` | 1 | equal | 1 |
pub fn preset(p: Preset, dim_d: usize) -> Result<Experiment> {
    let (q, signal, times) = match p {
        Preset::Heat => (QuadraticHamiltonian::heat(dim_d)?, Builtin::DeltaPlusConstant, vec![0.25, 0.5, 1.0]),
        Preset::FreeSchrodinger => (QuadraticHamiltonian::free_schrodinger(dim_d)?, Builtin::Chirp { a: 1.0 }, vec![0.5]),
        Preset::Harmonic => (
            QuadraticHamiltonian::harmonic(dim_d)?,
            Builtin::Delta,
            vec![std::f64::consts::PI / 8.0, std::f64::consts::PI / 4.0],
        ),
        Preset::Damping => (QuadraticHamiltonian::damping(&default_damping(dim_d))?, Builtin::Constant, vec![1.0]),
        Preset::Custom => {
            return Err(Error::InvalidInput("the custom preset needs a Hamiltonian".into()));
        }
    };
    build(p, q, signal, times, dim_d)
}

fn build(p: Preset, q: QuadraticHamiltonian, signal: Builtin, times: Vec<f64>, dim_d: usize) -> Result<Experiment> {
    let grid = GridSpec::default_for(dim_d)?;
    let phase_grid = PhaseGrid::default_for(&grid)?;
    let rule = default_rule(&hamilton_matrix(&q));
    let tolerance = phase_grid.step();
    Ok(Experiment {
        preset: p,
        q,
        signal,
        grid,
        window: WindowSpec::Gaussian,
        phase_grid,
        times,
        orders: vec![1.0],
        rule,
        epsilon: DEFAULT_EPSILON,
        tolerance,
        stub_empty_prediction: false,
    })
}

impl Experiment {
    pub fn from_file(f: &ExperimentFile) -> Result<Self> {
        let p = f.preset.ok_or_else(|| Error::InvalidInput("experiment needs a 'preset'".into()))?;
        let dim_d = match (&f.hamiltonian, &f.a, f.d) {
            (Some(h), _, _) => h.d,
            (None, Some(a), _) => a.len(),
            (None, None, Some(d)) => d,
            (None, None, None) => 1,
        };
        if let Some(d) = f.d {
            if d != dim_d {
                return Err(Error::InvalidDimension(format!("d = {d} disagrees with the matrices (d = {dim_d})")));
            }
        }
        if !(1..=2).contains(&dim_d) {
            return Err(Error::InvalidDimension(format!("d must be 1 or 2, got {dim_d}")));
        }
        let mut e = match p {
            Preset::Custom => {
                let h = f
                    .hamiltonian
                    .as_ref()
                    .ok_or_else(|| Error::InvalidInput("the custom preset needs a 'hamiltonian'".into()))?;
                build(p, QuadraticHamiltonian::from_file(h)?, Builtin::Delta, vec![0.5], dim_d)?
            }
            Preset::Damping => {
                let mut e = preset(p, dim_d)?;
                if let Some(rows) = &f.a {
                    if rows.iter().any(|r| r.len() != dim_d) {
                        return Err(Error::InvalidDimension(format!("A must be {dim_d}x{dim_d}")));
                    }
                    let a = RMatrix::from_fn(dim_d, dim_d, |i, j| rows[i][j]);
                    e.q = QuadraticHamiltonian::damping(&a)?;
                }
                e
            }
            _ => {
                if f.hamiltonian.is_some() || f.a.is_some() {
                    return Err(Error::InvalidInput(format!("preset '{}' takes no matrices", p.name())));
                }
                preset(p, dim_d)?
            }
        };
        if f.grid_n.is_some() || f.extent.is_some() {
            let n = f.grid_n.unwrap_or(e.grid.n);
            e.grid = match f.extent {
                Some(l) => GridSpec::new(dim_d, n, l)?,
                None => GridSpec::self_dual(dim_d, n)?,
            };
        }
        let dirs = DirectionSet::lattice(dim_d, f.directions)?;
        e.phase_grid = PhaseGrid::with_directions(&e.grid, dirs)?;
        e.tolerance = f.tolerance_angle.unwrap_or(e.phase_grid.step());
        if let Some(s) = &f.signal {
            e.signal = s.clone();
        }
        if let Some(t) = &f.times {
            e.times = t.clone();
        }
        if let Some(o) = &f.orders {
            e.orders = o.clone();
        }
        if let Some(r) = f.rule {
            e.rule = r;
        }
        if let Some(w) = f.window {
            e.window = w;
        }
        if let Some(eps) = f.epsilon {
            e.epsilon = eps;
        }
        e.stub_empty_prediction = f.stub_empty_prediction;
        e.validate()?;
        Ok(e)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ExperimentFile = serde_json::from_str(text)?;
        Self::from_file(&f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q.dim_d() != self.grid.dim_d {
            return Err(Error::InvalidDimension("Hamiltonian and grid dimensions differ".into()));
        }
        if self.times.is_empty() || self.orders.is_empty() {
            return Err(Error::InvalidInput("times and orders must be non-empty".into()));
        }
        if self.times.iter().chain(&self.orders).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("times and orders must be finite".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidInput(format!("tolerance angle {} outside (0, pi/2)", self.tolerance)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidInput("epsilon must be positive".into()));
        }
        self.rule.check_applicable(&hamilton_matrix(&self.q))?;
        if self.times.iter().any(|t| *t < 0.0) && self.rule != Rule::Exact {
            return Err(Error::InvalidInput("negative times need the exact rule".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Angle from an observed (or predicted) direction to the other set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionMargin {
    pub direction: Vec<f64>,
    /// Angle to the nearest member of the other set (`pi` if it is empty).
    pub angle: f64,
    /// `tolerance - angle`; negative means outside.
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InclusionEntry {
    pub t: f64,
    pub s: f64,
    pub r: f64,
    pub observed: DirectionSet,
    pub predicted: DirectionSet,
    /// One entry per observed direction.
    pub margins: Vec<DirectionMargin>,
    pub violations: Vec<DirectionMargin>,
    /// Exact rule only: rotated input directions with no observed neighbour.
    pub missing: Vec<DirectionMargin>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropagatedEstimate {
    pub t: f64,
    pub propagator: PropagatorPath,
    pub unreliable_fraction: f64,
    pub report: WavefrontReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSummary {
    pub preset: Preset,
    pub d: usize,
    pub hamiltonian: HamiltonianFile,
    pub signal: Builtin,
    pub window: WindowSpec,
    pub grid: GridSpec,
    pub rule: Rule,
    pub epsilon: f64,
    pub tolerance_angle: f64,
    pub times: Vec<f64>,
    pub orders: Vec<f64>,
    pub stub_empty_prediction: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct InclusionReport {
    pub experiment: ExperimentSummary,
    pub input: WavefrontReport,
    pub input_unreliable_fraction: f64,
    pub propagated: Vec<PropagatedEstimate>,
    pub entries: Vec<InclusionEntry>,
    pub verdict: Verdict,
}

impl InclusionReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn entry(&self, t: f64, s: f64) -> Option<&InclusionEntry> {
        self.entries.iter().find(|e| e.t == t && e.s == s)
    }

    /// `t, s, direction..., angle, margin` rows for every observed direction.
    pub fn margins_csv(&self) -> String {
        let n = 2 * self.experiment.d;
        let mut out = String::from("t,s");
        for k in 0..n {
            out.push_str(&format!(",w{k}"));
        }
        out.push_str(",angle,margin\n");
        for e in &self.entries {
            for m in &e.margins {
                out.push_str(&format!("{:.16e},{:.16e}", e.t, e.s));
                for c in &m.direction {
                    out.push_str(&format!(",{c:.16e}"));
                }
                out.push_str(&format!(",{:.16e},{:.16e}\n", m.angle, m.margin));
            }
        }
        out
    }
}

fn margins(from: &DirectionSet, to: &DirectionSet, tol: f64) -> Vec<DirectionMargin> {
    from.iter()
        .map(|v| {
            let angle = to.min_angle_to(v).min(std::f64::consts::PI);
            DirectionMargin { direction: v.clone(), angle, margin: tol - angle }
        })
        .collect()
}

fn outside(m: &[DirectionMargin], tol: f64) -> Vec<DirectionMargin> {
    m.iter().filter(|x| !within_angle(x.angle, tol)).cloned().collect()
}

pub fn run_experiment(e: &Experiment) -> Result<InclusionReport> {
    e.validate()?;
    let u0 = SampledSignal::builtin(e.grid, &e.signal)?;
    let h = hamilton_matrix(&e.q);
    let input = decay_order(&u0, e.window, &e.phase_grid)?;

    let propagated: Vec<PropagatedEstimate> = e
        .times
        .par_iter()
        .map(|&t| {
            let (ut, path) = propagate(&u0, &e.q, t)?;
            let report = decay_order(&ut, e.window, &e.phase_grid)?;
            Ok(PropagatedEstimate { t, propagator: path, unreliable_fraction: report.unreliable_fraction(), report })
        })
        .collect::<Result<_>>()?;

    let pairs: Vec<(usize, f64)> =
        (0..e.times.len()).flat_map(|i| e.orders.iter().map(move |&s| (i, s))).collect();
    let entries: Vec<InclusionEntry> = pairs
        .par_iter()
        .map(|&(i, s)| {
            let t = e.times[i];
            let out = &propagated[i].report;
            let budget = order_budget(&h, e.rule, s, e.epsilon)?;
            let observed = out.threshold(budget.r_out);
            let predicted = if e.stub_empty_prediction {
                DirectionSet::empty(2 * e.grid.dim_d, e.phase_grid.step())
            } else {
                predicted_set(&h, t, &input.estimate(s), &budget, e.tolerance, DEFAULT_RANK_TOL)?
            };
            let margins_obs = margins(&observed, &predicted, e.tolerance);
            let violations = outside(&margins_obs, e.tolerance);
            let missing = if e.rule == Rule::Exact && !e.stub_empty_prediction {
                let core = predicted_set(&h, t, &input.threshold(s), &budget, e.tolerance, DEFAULT_RANK_TOL)?;
                outside(&margins(&core, &observed, e.tolerance), e.tolerance)
            } else {
                Vec::new()
            };
            let pass = violations.is_empty() && missing.is_empty();
            Ok(InclusionEntry {
                t,
                s,
                r: budget.r_out,
                observed,
                predicted,
                margins: margins_obs,
                violations,
                missing,
                pass,
            })
        })
        .collect::<Result<_>>()?;

    let inconclusive = input.is_inconclusive() || propagated.iter().any(|p| p.report.is_inconclusive());
    let verdict = if inconclusive {
        Verdict::Inconclusive
    } else if entries.iter().all(|x| x.pass) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(InclusionReport {
        experiment: ExperimentSummary {
            preset: e.preset,
            d: e.grid.dim_d,
            hamiltonian: e.q.to_file(),
            signal: e.signal.clone(),
            window: e.window,
            grid: e.grid,
            rule: e.rule,
            epsilon: e.epsilon,
            tolerance_angle: e.tolerance,
            times: e.times.clone(),
            orders: e.orders.clone(),
            stub_empty_prediction: e.stub_empty_prediction,
        },
        input_unreliable_fraction: input.unreliable_fraction(),
        input,
        propagated,
        entries,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_preset_defaults() {
        let e = preset(Preset::Heat, 1).unwrap();
        assert_eq!(e.rule, Rule::Equal);
        assert_eq!(e.q.matrix().re(), RMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]));
        let h = preset(Preset::Harmonic, 1).unwrap();
        assert_eq!(h.rule, Rule::Exact);
        assert_eq!(h.q.matrix().im(), RMatrix::identity(2, 2));
    }

    #[test]
    fn experiment_file_overrides() {
        let e = Experiment::from_json(r#"{"preset": "heat", "times": [0.5], "orders": [0.0, 1.0], "grid_n": 1024}"#)
            .unwrap();
        assert_eq!(e.times, vec![0.5]);
        assert_eq!(e.grid.n, 1024);
        assert!(Experiment::from_json(r#"{"preset": "heat", "bogus": 1}"#).is_err());
        assert!(Experiment::from_json(r#"{"preset": "custom"}"#).is_err());
        assert!(Experiment::from_json(r#"{"preset": "heat", "rule": "exact"}"#).is_err());
    }

    #[test]
    fn heat_on_delta_plus_constant_passes() {
        let mut e = preset(Preset::Heat, 1).unwrap();
        e.times = vec![0.5];
        let rep = run_experiment(&e).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        let entry = rep.entry(0.5, 1.0).unwrap();
        assert!(!entry.observed.is_empty());
        for v in entry.observed.iter() {
            assert!(v[1].abs() < 0.2, "{v:?}");
        }
    }

    #[test]
    fn empty_prediction_stub_fails() {
        let mut e = preset(Preset::Heat, 1).unwrap();
        e.times = vec![0.5];
        e.stub_empty_prediction = true;
        assert_eq!(run_experiment(&e).unwrap().verdict, Verdict::Fail);
    }
}
