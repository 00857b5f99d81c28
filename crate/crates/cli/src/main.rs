use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sgabor::harness::{run_experiment, Experiment, ExperimentFile, Verdict};
use sgabor::io::{read_signal, spectrogram_csv, to_canonical_json, write_signal, HistoryStep, SignalHeader};
use sgabor::propagators::propagate;
use sgabor::quadham::{
    applicable_rules, default_rule, hamilton_matrix, order_budget, predicted_set, random_normal, singular_space,
    OrderBudget, DEFAULT_EPSILON,
};
use sgabor::symplectic::{kernel_real, DEFAULT_RANK_TOL};
use sgabor::tfa::estimate::{decay_order, RayEstimate};
use sgabor::tfa::stft_lattice;
use sgabor::{DirectionSet, Error, ErrorKind, GridSpec, PhaseGrid, QuadraticHamiltonian, Rule, SampledSignal, WindowSpec};

const EXIT_VIOLATION: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_RESOLUTION: u8 = 3;
const EXIT_UNSUPPORTED: u8 = 4;
const EXIT_INCONCLUSIVE: u8 = 5;

/// Gabor wave front sets and their propagation under quadratic semigroups.
#[derive(Debug, Parser)]
#[command(name = "sgabor", version)]
struct Cli {
    #[command(flatten)]
    opts: Overrides,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Args)]
struct Overrides {
    /// Grid points per axis (power of two, >= 8).
    #[arg(long, global = true)]
    grid_n: Option<usize>,
    /// Half extent L of the grid box [-L, L)^d.
    #[arg(long, global = true)]
    extent: Option<f64>,
    /// STFT window: gaussian or hermite_k.
    #[arg(long, global = true)]
    window: Option<WindowSpec>,
    /// Direction lattice density (circle points for d = 1, cube half side for d = 2).
    #[arg(long, global = true)]
    directions: Option<usize>,
    /// Angular tolerance in radians (default: one lattice step).
    #[arg(long, global = true)]
    tolerance_angle: Option<f64>,
    /// Output file (stdout if omitted; required by propagate).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Seed for randomly generated inputs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate decay orders and thresholded wave front sets of a signal.
    Analyze {
        signal: PathBuf,
        /// Orders s at which to threshold.
        #[arg(long, value_delimiter = ',', default_value = "1", allow_negative_numbers = true)]
        orders: Vec<f64>,
        /// Also write the STFT on a lattice as CSV.
        #[arg(long)]
        spectrogram: Option<PathBuf>,
        /// Node stride of the spectrogram lattice in x and xi.
        #[arg(long, default_value_t = 64)]
        stride: usize,
    },
    /// Apply e^{-t q^w} to a signal.
    Propagate {
        signal: PathBuf,
        hamiltonian: PathBuf,
        #[arg(long, short, allow_negative_numbers = true)]
        time: f64,
    },
    /// Predicted direction set of the propagated signal.
    Predict {
        hamiltonian: PathBuf,
        #[arg(long)]
        signal: PathBuf,
        #[arg(long, short, allow_negative_numbers = true)]
        time: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        order: f64,
        /// exact, minus4d, minus8d or equal (default: best applicable).
        #[arg(long)]
        rule: Option<String>,
    },
    /// Singular space, Ker(Re F), normality and applicable rules of Q.
    SingularSpace {
        hamiltonian: Option<PathBuf>,
        /// Use a seeded random normal-case Q instead of a file.
        #[arg(long, conflicts_with = "hamiltonian")]
        random_normal: bool,
        /// Dimension d for --random-normal.
        #[arg(long, default_value_t = 1)]
        dim: usize,
    },
    /// Run an inclusion experiment; exit 0 pass, 1 violation, 5 inconclusive.
    Verify {
        experiment: PathBuf,
        /// Also write per-direction margins as CSV.
        #[arg(long)]
        margins: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_INPUT,
            Failure::Lib(e) => match e.kind() {
                ErrorKind::Input | ErrorKind::Io => EXIT_INPUT,
                ErrorKind::Resolution | ErrorKind::Numerical => EXIT_RESOLUTION,
                ErrorKind::Unsupported => EXIT_UNSUPPORTED,
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Usage(m) => write!(f, "{m}"),
        }
    }
}

type CmdResult = std::result::Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: &Cli) -> CmdResult {
    let o = &cli.opts;
    match &cli.cmd {
        Command::Analyze { signal, orders, spectrogram, stride } => {
            analyze(o, signal, orders, spectrogram.as_deref(), *stride)
        }
        Command::Propagate { signal, hamiltonian, time } => cmd_propagate(o, signal, hamiltonian, *time),
        Command::Predict { hamiltonian, signal, time, order, rule } => {
            predict(o, hamiltonian, signal, *time, *order, rule.as_deref())
        }
        Command::SingularSpace { hamiltonian, random_normal, dim } => {
            cmd_singular_space(o, hamiltonian.as_deref(), *random_normal, *dim)
        }
        Command::Verify { experiment, margins } => verify(o, experiment, margins.as_deref()),
    }
}

fn emit<T: Serialize>(o: &Overrides, value: &T) -> std::result::Result<(), Failure> {
    let text = to_canonical_json(value)?;
    match &o.output {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn read_hamiltonian(path: &Path) -> std::result::Result<QuadraticHamiltonian, Failure> {
    Ok(QuadraticHamiltonian::from_json(&std::fs::read_to_string(path)?)?)
}

/// Loads a signal; grid overrides re-sample builtin signals and must agree
/// with the stored grid otherwise.
fn load_signal(o: &Overrides, path: &Path) -> std::result::Result<(SampledSignal, SignalHeader), Failure> {
    let (u, header) = read_signal(path)?;
    if o.grid_n.is_none() && o.extent.is_none() {
        return Ok((u, header));
    }
    let n = o.grid_n.unwrap_or(header.n);
    let grid = match o.extent {
        Some(l) => GridSpec::new(header.d, n, l)?,
        None if o.grid_n.is_some() && header.l.is_none() => GridSpec::self_dual(header.d, n)?,
        None => GridSpec::new(header.d, n, u.half_extent())?,
    };
    match &header.builtin {
        Some(b) => Ok((SampledSignal::builtin(grid, b)?, header)),
        None if grid == *u.grid() => Ok((u, header)),
        None => Err(Failure::Usage("grid overrides only apply to builtin signals".into())),
    }
}

fn phase_grid(o: &Overrides, grid: &GridSpec) -> std::result::Result<PhaseGrid, Failure> {
    let dirs = DirectionSet::lattice(grid.dim_d, o.directions)?;
    Ok(PhaseGrid::with_directions(grid, dirs)?)
}

fn tolerance(o: &Overrides, pg: &PhaseGrid) -> std::result::Result<f64, Failure> {
    let tol = o.tolerance_angle.unwrap_or(pg.step());
    if !(tol > 0.0 && tol < std::f64::consts::FRAC_PI_2) {
        return Err(Failure::Usage(format!("--tolerance-angle {tol} outside (0, pi/2)")));
    }
    Ok(tol)
}

#[derive(Serialize)]
struct ThresholdedSets {
    s: f64,
    threshold: Vec<Vec<f64>>,
    estimate: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct AnalyzeOutput<'a> {
    d: usize,
    grid: GridSpec,
    window: WindowSpec,
    angular_step: f64,
    margin: f64,
    radii: &'a [f64],
    rays: &'a [RayEstimate],
    unreliable_fraction: f64,
    inconclusive: bool,
    sets: Vec<ThresholdedSets>,
}

fn analyze(o: &Overrides, path: &Path, orders: &[f64], spec_path: Option<&Path>, stride: usize) -> CmdResult {
    let (u, _) = load_signal(o, path)?;
    let pg = phase_grid(o, u.grid())?;
    let window = o.window.unwrap_or(WindowSpec::Gaussian);
    let report = decay_order(&u, window, &pg)?;
    let sets = orders
        .iter()
        .map(|&s| ThresholdedSets {
            s,
            threshold: report.threshold(s).dirs().to_vec(),
            estimate: report.estimate(s).dirs().to_vec(),
        })
        .collect();
    emit(
        o,
        &AnalyzeOutput {
            d: u.dim_d(),
            grid: *u.grid(),
            window,
            angular_step: report.step(),
            margin: report.margin,
            radii: &report.radii,
            rays: &report.rays,
            unreliable_fraction: report.unreliable_fraction(),
            inconclusive: report.is_inconclusive(),
            sets,
        },
    )?;
    if let Some(p) = spec_path {
        let s = stft_lattice(&u, window, stride, stride)?;
        std::fs::write(p, spectrogram_csv(&s))?;
    }
    Ok(0)
}

fn cmd_propagate(o: &Overrides, signal: &Path, hamiltonian: &Path, t: f64) -> CmdResult {
    let out = o
        .output
        .as_ref()
        .ok_or_else(|| Failure::Usage("propagate needs --output for the signal header".into()))?;
    let (u, header) = load_signal(o, signal)?;
    let q = read_hamiltonian(hamiltonian)?;
    let (v, path) = propagate(&u, &q, t)?;
    let mut history = header.history;
    history.push(HistoryStep { t, propagator: path, hamiltonian: q.to_file() });
    write_signal(out, &v, history)?;
    Ok(0)
}

#[derive(Serialize)]
struct PredictOutput {
    t: f64,
    budget: OrderBudget,
    tolerance_angle: f64,
    input_estimate: Vec<Vec<f64>>,
    predicted: Vec<Vec<f64>>,
}

fn predict(o: &Overrides, hamiltonian: &Path, signal: &Path, t: f64, s: f64, rule: Option<&str>) -> CmdResult {
    let q = read_hamiltonian(hamiltonian)?;
    let (u, _) = load_signal(o, signal)?;
    if q.dim_d() != u.dim_d() {
        return Err(Error::InvalidDimension("Hamiltonian and signal dimensions differ".into()).into());
    }
    let h = hamilton_matrix(&q);
    let rule = match rule {
        Some(r) => Rule::parse(r)?,
        None => default_rule(&h),
    };
    let pg = phase_grid(o, u.grid())?;
    let tol = tolerance(o, &pg)?;
    let report = decay_order(&u, o.window.unwrap_or(WindowSpec::Gaussian), &pg)?;
    let input = report.estimate(s);
    let budget = order_budget(&h, rule, s, DEFAULT_EPSILON)?;
    let predicted = predicted_set(&h, t, &input, &budget, tol, DEFAULT_RANK_TOL)?;
    emit(
        o,
        &PredictOutput {
            t,
            budget,
            tolerance_angle: tol,
            input_estimate: input.dirs().to_vec(),
            predicted: predicted.dirs().to_vec(),
        },
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct SingularSpaceOutput {
    d: usize,
    hamiltonian: sgabor::quadham::HamiltonianFile,
    singular_space: Vec<Vec<f64>>,
    ker_re_f: Vec<Vec<f64>>,
    normal: bool,
    commutator_norm: f64,
    real_part_zero: bool,
    applicable_rules: Vec<Rule>,
    default_rule: Rule,
}

fn basis_rows(b: &sgabor::symplectic::RMatrix) -> Vec<Vec<f64>> {
    b.column_iter().map(|c| c.iter().copied().collect()).collect()
}

fn cmd_singular_space(o: &Overrides, path: Option<&Path>, random: bool, dim: usize) -> CmdResult {
    let q = match (path, random) {
        (Some(p), false) => read_hamiltonian(p)?,
        (None, true) => random_normal(dim, o.seed)?,
        _ => return Err(Failure::Usage("give a Hamiltonian file or --random-normal".into())),
    };
    let h = hamilton_matrix(&q);
    let s = singular_space(&h, DEFAULT_RANK_TOL);
    let k = kernel_real(&h.re_f, h.dim_d(), DEFAULT_RANK_TOL);
    emit(
        o,
        &SingularSpaceOutput {
            d: q.dim_d(),
            hamiltonian: q.to_file(),
            singular_space: basis_rows(s.basis()),
            ker_re_f: basis_rows(k.basis()),
            normal: h.normal,
            commutator_norm: h.commutator_norm(),
            real_part_zero: h.real_part_zero,
            applicable_rules: applicable_rules(&h),
            default_rule: default_rule(&h),
        },
    )?;
    Ok(0)
}

fn verify(o: &Overrides, path: &Path, margins: Option<&Path>) -> CmdResult {
    let text = std::fs::read_to_string(path)?;
    let mut f: ExperimentFile = serde_json::from_str(&text).map_err(Error::from)?;
    f.grid_n = o.grid_n.or(f.grid_n);
    f.extent = o.extent.or(f.extent);
    f.window = o.window.or(f.window);
    f.directions = o.directions.or(f.directions);
    f.tolerance_angle = o.tolerance_angle.or(f.tolerance_angle);
    let e = Experiment::from_file(&f)?;
    let report = run_experiment(&e)?;
    emit(o, &report)?;
    if let Some(p) = margins {
        std::fs::write(p, report.margins_csv())?;
    }
    Ok(match report.verdict {
        Verdict::Pass => 0,
        Verdict::Fail => EXIT_VIOLATION,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    })
}
