//! Quadratic Hamiltonians `q(X) = <X, Q X>`, their Hamilton maps `F = J Q`,
//! singular spaces and the direction sets predicted for `e^{-t q^w}`.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::directions::DirectionSet;
use crate::error::{Error, Result};
use crate::symplectic::{
    kernel_real, matrix_exponential, standard_symplectic_form, CMatrix, PhaseMatrix, RMatrix,
    Subspace,
};

pub const SYMMETRY_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;
pub const NORMALITY_TOL: f64 = 1e-10;
/// Gap inside the strict inequalities `r < s - 4d`, `r < s - 8d`.
pub const DEFAULT_EPSILON: f64 = 0.5;
/// Entries of `Re Q` below this are treated as zero for the exact rule.
const ZERO_REAL_PART: f64 = 1e-14;

/// A complex symmetric `Q` with positive semidefinite real part.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticHamiltonian {
    q: PhaseMatrix,
}

impl QuadraticHamiltonian {
    pub fn new(q: PhaseMatrix) -> Result<Self> {
        let asym = (q.entries() - q.entries().transpose())
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()));
        if asym > SYMMETRY_TOL {
            return Err(Error::InvalidInput(format!("Q is not symmetric (deviation {asym:e})")));
        }
        let re = q.re();
        let re_sym = (&re + re.transpose()) * 0.5;
        let min_eig = re_sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidInput(format!(
                "Re Q is not positive semidefinite (smallest eigenvalue {min_eig:e})"
            )));
        }
        Ok(Self { q })
    }

    pub fn from_parts(re: &RMatrix, im: &RMatrix) -> Result<Self> {
        Self::new(PhaseMatrix::from_parts(re, im)?)
    }

    /// `q = |xi|^2`.
    pub fn heat(dim_d: usize) -> Result<Self> {
        Self::from_blocks_real(dim_d, &RMatrix::zeros(dim_d, dim_d), &RMatrix::identity(dim_d, dim_d), 1.0)
    }

    /// `q = i |xi|^2`.
    pub fn free_schrodinger(dim_d: usize) -> Result<Self> {
        let z = RMatrix::zeros(2 * dim_d, 2 * dim_d);
        let mut im = z.clone();
        for k in 0..dim_d {
            im[(dim_d + k, dim_d + k)] = 1.0;
        }
        Self::from_parts(&z, &im)
    }

    /// `q = i (|x|^2 + |xi|^2)`.
    pub fn harmonic(dim_d: usize) -> Result<Self> {
        let n = 2 * dim_d;
        Self::from_parts(&RMatrix::zeros(n, n), &RMatrix::identity(n, n))
    }

    /// `q = <x, A x>` with `A` real symmetric positive semidefinite.
    pub fn damping(a: &RMatrix) -> Result<Self> {
        let d = a.nrows();
        if a.ncols() != d || d == 0 {
            return Err(Error::InvalidDimension("damping matrix must be square".into()));
        }
        Self::from_blocks_real(d, a, &RMatrix::zeros(d, d), 1.0)
    }

    fn from_blocks_real(dim_d: usize, xx: &RMatrix, kk: &RMatrix, scale: f64) -> Result<Self> {
        let n = 2 * dim_d;
        let mut re = RMatrix::zeros(n, n);
        re.view_mut((0, 0), (dim_d, dim_d)).copy_from(&(xx * scale));
        re.view_mut((dim_d, dim_d), (dim_d, dim_d)).copy_from(&(kk * scale));
        Self::from_parts(&re, &RMatrix::zeros(n, n))
    }

    pub fn matrix(&self) -> &PhaseMatrix {
        &self.q
    }

    pub fn dim_d(&self) -> usize {
        self.q.dim_d()
    }

    pub fn real_part_vanishes(&self) -> bool {
        self.q.re().amax() <= ZERO_REAL_PART
    }

    pub fn to_file(&self) -> HamiltonianFile {
        let n = self.q.side();
        let re = self.q.re();
        let im = self.q.im();
        HamiltonianFile {
            d: self.dim_d(),
            q_re: (0..n).map(|i| (0..n).map(|j| re[(i, j)]).collect()).collect(),
            q_im: (0..n).map(|i| (0..n).map(|j| im[(i, j)]).collect()).collect(),
        }
    }

    pub fn from_file(f: &HamiltonianFile) -> Result<Self> {
        let n = 2 * f.d;
        if f.d == 0 {
            return Err(Error::InvalidDimension("d must be at least 1".into()));
        }
        let read = |rows: &Vec<Vec<f64>>, name: &str| -> Result<RMatrix> {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidDimension(format!("{name} must be {n}x{n} for d = {}", f.d)));
            }
            Ok(RMatrix::from_fn(n, n, |i, j| rows[i][j]))
        };
        Self::from_parts(&read(&f.q_re, "Q_re")?, &read(&f.q_im, "Q_im")?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: HamiltonianFile = serde_json::from_str(text)?;
        Self::from_file(&f)
    }
}

/// On-disk form `{"d": .., "Q_re": [[..]], "Q_im": [[..]]}` (row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianFile {
    pub d: usize,
    #[serde(rename = "Q_re")]
    pub q_re: Vec<Vec<f64>>,
    #[serde(rename = "Q_im")]
    pub q_im: Vec<Vec<f64>>,
}

/// `F = J Q` split into real and imaginary parts.
#[derive(Debug, Clone)]
pub struct HamiltonData {
    pub f: PhaseMatrix,
    pub re_f: RMatrix,
    pub im_f: RMatrix,
    pub normal: bool,
    pub real_part_zero: bool,
}

impl HamiltonData {
    pub fn dim_d(&self) -> usize {
        self.f.dim_d()
    }

    /// `||[Re F, Im F]||_max`.
    pub fn commutator_norm(&self) -> f64 {
        (&self.re_f * &self.im_f - &self.im_f * &self.re_f).amax()
    }

    /// `e^{-2itF}`.
    pub fn propagator_matrix(&self, t: f64) -> Result<PhaseMatrix> {
        matrix_exponential(&self.f.scale(Complex64::new(0.0, -2.0 * t)))
    }

    /// `e^{2t Im F}` (real).
    pub fn im_flow(&self, t: f64) -> Result<RMatrix> {
        let m = PhaseMatrix::from_real(&(&self.im_f * (2.0 * t)))?;
        Ok(matrix_exponential(&m)?.re())
    }
}

pub fn hamilton_matrix(q: &QuadraticHamiltonian) -> HamiltonData {
    let j = standard_symplectic_form(q.dim_d()).expect("d >= 1");
    let f = j.mul(q.matrix());
    let re_f = f.re();
    let im_f = f.im();
    let mut h = HamiltonData { f, re_f, im_f, normal: false, real_part_zero: q.real_part_vanishes() };
    h.normal = h.commutator_norm() <= NORMALITY_TOL;
    h
}

/// `∩_{j<2d} Ker(Re F (Im F)^j)` as the kernel of the stacked blocks.
///
/// Block `j` is divided by `|Re F| |Im F|^j` (operator norms) so that the
/// relative rank threshold is not dominated by large powers of `Im F`,
/// while blocks that vanish up to rounding stay small.
pub fn singular_space(h: &HamiltonData, tol: f64) -> Subspace {
    let n = 2 * h.dim_d();
    let mut stacked = RMatrix::zeros(n * n, n);
    let mut power = RMatrix::identity(n, n);
    let im_norm = h.im_f.norm().max(f64::MIN_POSITIVE);
    let re_norm = h.re_f.norm();
    for j in 0..n {
        let block = &h.re_f * &power;
        let scale = re_norm * im_norm.powi(j as i32);
        if scale > 0.0 {
            stacked.view_mut((j * n, 0), (n, n)).copy_from(&(block / scale));
        }
        power = &power * &h.im_f;
    }
    kernel_real(&stacked, h.dim_d(), tol)
}

/// Which propagation statement is used to bound output orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    /// `Re Q = 0`: the cone is mapped by the real symplectic `e^{-2itF}`.
    Exact,
    /// Cone restricted to `Ker(Im e^{-2itF})`, order `r < s - 4d`.
    Minus4d,
    /// Cone restricted to `S` and moved by `e^{2t Im F}`, order `r < s - 8d`.
    Minus8d,
    /// Normal case, same sets as `Minus8d` with `r = s`.
    Equal,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Exact => "exact",
            Rule::Minus4d => "minus4d",
            Rule::Minus8d => "minus8d",
            Rule::Equal => "equal",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Rule::Exact),
            "minus4d" => Ok(Rule::Minus4d),
            "minus8d" => Ok(Rule::Minus8d),
            "equal" => Ok(Rule::Equal),
            other => Err(Error::InvalidInput(format!(
                "unknown rule '{other}' (expected exact, minus4d, minus8d or equal)"
            ))),
        }
    }

    pub fn check_applicable(self, h: &HamiltonData) -> Result<()> {
        match self {
            Rule::Exact if !h.real_part_zero => Err(Error::RuleNotApplicable(
                "the exact rule requires Re Q = 0".into(),
            )),
            Rule::Equal if !h.normal => Err(Error::RuleNotApplicable(format!(
                "the equal rule requires [Re F, Im F] = 0 (commutator norm {:e})",
                h.commutator_norm()
            ))),
            _ => Ok(()),
        }
    }
}

/// Rules valid for `h`, strongest first.
pub fn applicable_rules(h: &HamiltonData) -> Vec<Rule> {
    [Rule::Exact, Rule::Equal, Rule::Minus8d, Rule::Minus4d]
        .into_iter()
        .filter(|r| r.check_applicable(h).is_ok())
        .collect()
}

/// Strongest applicable rule: exact, then equal, then minus8d.
pub fn default_rule(h: &HamiltonData) -> Rule {
    applicable_rules(h)[0]
}

/// Input order `s`, admissible output order `r` and kernel order `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderBudget {
    pub s_in: f64,
    pub r_out: f64,
    pub m_kernel: f64,
    pub rule: Rule,
}

impl OrderBudget {
    pub fn new(s_in: f64, rule: Rule, dim_d: usize, epsilon: f64) -> Result<Self> {
        if !s_in.is_finite() {
            return Err(Error::InvalidInput("order s must be finite".into()));
        }
        if !(epsilon > 0.0) && matches!(rule, Rule::Minus4d | Rule::Minus8d) {
            return Err(Error::InvalidInput("epsilon must be positive".into()));
        }
        let d = dim_d as f64;
        let r_out = match rule {
            Rule::Exact | Rule::Equal => s_in,
            Rule::Minus4d => s_in - 4.0 * d - epsilon,
            Rule::Minus8d => s_in - 8.0 * d - epsilon,
        };
        Ok(Self { s_in, r_out, m_kernel: 0.0, rule })
    }
}

pub fn order_budget(h: &HamiltonData, rule: Rule, s_in: f64, epsilon: f64) -> Result<OrderBudget> {
    rule.check_applicable(h)?;
    OrderBudget::new(s_in, rule, h.dim_d(), epsilon)
}

/// Direction set of the cone predicted to contain `WF_r(e^{-t q^w} u)`
/// given `input` as the estimate of `WF_s(u)`.
///
/// `tol` is the angular tolerance of subspace-cone membership.
pub fn predicted_set(
    h: &HamiltonData,
    t: f64,
    input: &DirectionSet,
    budget: &OrderBudget,
    tol: f64,
    rank_tol: f64,
) -> Result<DirectionSet> {
    if t < 0.0 && budget.rule != Rule::Exact {
        return Err(Error::InvalidInput(format!("t = {t} < 0 is only allowed for the exact rule")));
    }
    if !t.is_finite() {
        return Err(Error::InvalidInput("t must be finite".into()));
    }
    budget.rule.check_applicable(h)?;
    if input.ambient_dim() != 2 * h.dim_d() {
        return Err(Error::InvalidDimension("input directions live in another phase space".into()));
    }
    match budget.rule {
        Rule::Exact => {
            let tm = h.propagator_matrix(t)?;
            Ok(input.map_linear(&tm.re()))
        }
        Rule::Minus4d => {
            let tm = h.propagator_matrix(t)?;
            let kern = kernel_real(&tm.im(), h.dim_d(), rank_tol);
            let inside = input.within_subspace_cone(&kern, tol);
            let map = tm.re() * kern.projector();
            Ok(inside.map_linear(&map))
        }
        Rule::Minus8d | Rule::Equal => {
            let s = singular_space(h, rank_tol);
            let inside = input.within_subspace_cone(&s, tol);
            let map = h.im_flow(t)? * s.projector();
            Ok(inside.map_linear(&map).within_subspace_cone(&s, tol))
        }
    }
}

/// Random symmetric `Q` with `Re Q >= 0` and entries of moderate size.
pub fn random_admissible(dim_d: usize, seed: u64) -> Result<QuadraticHamiltonian> {
    let n = 2 * dim_d;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = RMatrix::from_fn(n, n, |_, _| rng.random_range(-0.5..0.5));
    let re = &b * b.transpose() / n as f64;
    let w = RMatrix::from_fn(n, n, |_, _| rng.random_range(-0.5..0.5));
    let im = (&w + w.transpose()) * 0.5;
    QuadraticHamiltonian::from_parts(&re, &im)
}

/// Random `Q` in the normal case `[Re F, Im F] = 0`.
///
/// Each coordinate pair `(x_k, xi_k)` carries one of three commuting block
/// types; the result is conjugated by a random real symplectic matrix,
/// which preserves normality.
pub fn random_normal(dim_d: usize, seed: u64) -> Result<QuadraticHamiltonian> {
    let n = 2 * dim_d;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut re = RMatrix::zeros(n, n);
    let mut im = RMatrix::zeros(n, n);
    for k in 0..dim_d {
        let idx = [k, dim_d + k];
        let (bre, bim) = match rng.random_range(0..3) {
            0 => {
                // Re = P >= 0 (possibly singular), Im = lambda P
                let a: f64 = rng.random_range(-1.0..1.0);
                let b: f64 = rng.random_range(-1.0..1.0);
                let v = if rng.random_bool(0.5) { [a, b, 0.0, 0.0] } else { [a, b, -0.3 * b, a] };
                let c = nalgebra::Matrix2::new(v[0], v[1], v[2], v[3]);
                let p = c * c.transpose();
                let lambda: f64 = rng.random_range(-1.0..1.0);
                (p, p * lambda)
            }
            1 => {
                let alpha: f64 = rng.random_range(0.0..1.0);
                let beta: f64 = rng.random_range(-1.0..1.0);
                (nalgebra::Matrix2::identity() * alpha, nalgebra::Matrix2::identity() * beta)
            }
            _ => {
                let a: f64 = rng.random_range(-1.0..1.0);
                let b: f64 = rng.random_range(-1.0..1.0);
                let c: f64 = rng.random_range(-1.0..1.0);
                (nalgebra::Matrix2::zeros(), nalgebra::Matrix2::new(a, b, b, c))
            }
        };
        for (i, &gi) in idx.iter().enumerate() {
            for (j, &gj) in idx.iter().enumerate() {
                re[(gi, gj)] = bre[(i, j)];
                im[(gi, gj)] = bim[(i, j)];
            }
        }
    }
    // S = exp(J W) with W symmetric is real symplectic; Q -> S^T Q S
    let w = RMatrix::from_fn(n, n, |_, _| rng.random_range(-0.4..0.4));
    let w = (&w + w.transpose()) * 0.5;
    let j = standard_symplectic_form(dim_d)?;
    let jw = PhaseMatrix::from_real(&(j.re() * w))?;
    let s = matrix_exponential(&jw)?.re();
    let re = s.transpose() * re * &s;
    let im = s.transpose() * im * &s;
    let sym = |m: RMatrix| (&m + m.transpose()) * 0.5;
    QuadraticHamiltonian::from_parts(&sym(re), &sym(im))
}

/// Real 2d-vector as a nalgebra column.
pub fn column(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

/// Complex matrix with given real and imaginary parts.
pub fn complexify(re: &RMatrix, im: &RMatrix) -> CMatrix {
    re.zip_map(im, Complex64::new)
}
