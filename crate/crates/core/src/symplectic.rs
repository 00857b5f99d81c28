//! Dense complex/real linear algebra on phase space `R^{2d}` (or `C^{2d}`).
//!
//! Coordinates are ordered `(x_1, .., x_d, xi_1, .., xi_d)`; the standard
//! symplectic matrix is `J = [[0, I], [-I, 0]]` and the symplectic form is
//! `sigma(X, Y) = <J X, Y>`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

/// Default relative rank tolerance for kernels.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
/// Used instead of the relative threshold when the matrix vanishes.
const ABSOLUTE_RANK_FLOOR: f64 = 1e-14;
/// Entries above this magnitude are rejected by [`matrix_exponential`].
const EXP_ENTRY_LIMIT: f64 = 1e8;

/// A complex `2d x 2d` matrix acting on phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMatrix {
    entries: CMatrix,
    dim_d: usize,
}

impl PhaseMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        let (r, c) = entries.shape();
        if r != c || r == 0 || r % 2 != 0 {
            return Err(Error::InvalidDimension(format!(
                "phase matrix must be square with even positive side, got {r}x{c}"
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("phase matrix has non-finite entries".into()));
        }
        Ok(Self { entries, dim_d: r / 2 })
    }

    pub fn from_real(entries: &RMatrix) -> Result<Self> {
        Self::new(entries.map(|v| Complex64::new(v, 0.0)))
    }

    pub fn from_parts(re: &RMatrix, im: &RMatrix) -> Result<Self> {
        if re.shape() != im.shape() {
            return Err(Error::InvalidDimension(format!(
                "real part {:?} and imaginary part {:?} differ in shape",
                re.shape(),
                im.shape()
            )));
        }
        Self::new(re.zip_map(im, Complex64::new))
    }

    pub fn identity(dim_d: usize) -> Self {
        Self { entries: CMatrix::identity(2 * dim_d, 2 * dim_d), dim_d }
    }

    pub fn zeros(dim_d: usize) -> Self {
        Self { entries: CMatrix::zeros(2 * dim_d, 2 * dim_d), dim_d }
    }

    pub fn dim_d(&self) -> usize {
        self.dim_d
    }

    pub fn side(&self) -> usize {
        2 * self.dim_d
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn re(&self) -> RMatrix {
        self.entries.map(|z| z.re)
    }

    pub fn im(&self) -> RMatrix {
        self.entries.map(|z| z.im)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { entries: &self.entries * s, dim_d: self.dim_d }
    }

    pub fn mul(&self, other: &PhaseMatrix) -> Self {
        assert_eq!(self.dim_d, other.dim_d, "phase matrices of different dimension");
        Self { entries: &self.entries * &other.entries, dim_d: self.dim_d }
    }

    /// Max-norm distance between two matrices.
    pub fn max_diff(&self, other: &PhaseMatrix) -> f64 {
        (&self.entries - &other.entries)
            .iter()
            .fold(0.0, |m, z| m.max(z.norm()))
    }

    /// The `d x d` blocks `(A, B, C, D)` of `[[A, B], [C, D]]`.
    pub fn blocks(&self) -> (CMatrix, CMatrix, CMatrix, CMatrix) {
        let d = self.dim_d;
        let m = &self.entries;
        (
            m.view((0, 0), (d, d)).into_owned(),
            m.view((0, d), (d, d)).into_owned(),
            m.view((d, 0), (d, d)).into_owned(),
            m.view((d, d), (d, d)).into_owned(),
        )
    }

    pub fn from_blocks(a: &CMatrix, b: &CMatrix, c: &CMatrix, d: &CMatrix) -> Result<Self> {
        let n = a.nrows();
        for (name, blk) in [("A", a), ("B", b), ("C", c), ("D", d)] {
            if blk.shape() != (n, n) {
                return Err(Error::InvalidDimension(format!(
                    "block {name} has shape {:?}, expected {n}x{n}",
                    blk.shape()
                )));
            }
        }
        let mut m = CMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(a);
        m.view_mut((0, n), (n, n)).copy_from(b);
        m.view_mut((n, 0), (n, n)).copy_from(c);
        m.view_mut((n, n), (n, n)).copy_from(d);
        Self::new(m)
    }

    /// Applies a real matrix (imaginary part must vanish) to a real vector.
    pub fn apply_real(&self, v: &DVector<f64>) -> DVector<f64> {
        self.re() * v
    }
}

/// `J = [[0, I], [-I, 0]]` in `d x d` blocks.
pub fn standard_symplectic_form(dim_d: usize) -> Result<PhaseMatrix> {
    if dim_d == 0 {
        return Err(Error::InvalidDimension("d must be at least 1".into()));
    }
    let n = 2 * dim_d;
    let mut j = CMatrix::zeros(n, n);
    for k in 0..dim_d {
        j[(k, dim_d + k)] = Complex64::new(1.0, 0.0);
        j[(dim_d + k, k)] = Complex64::new(-1.0, 0.0);
    }
    PhaseMatrix::new(j)
}

// Padé(13) numerator coefficients.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// `exp(M)` by scaling and squaring with the diagonal Padé(13) approximant.
pub fn matrix_exponential(m: &PhaseMatrix) -> Result<PhaseMatrix> {
    let big = m.max_abs();
    if big > EXP_ENTRY_LIMIT {
        return Err(Error::OutOfRange(format!(
            "matrix exponential input entry magnitude {big:e} exceeds {EXP_ENTRY_LIMIT:e}"
        )));
    }
    let e = expm_complex(m.entries())?;
    let out = PhaseMatrix::new(e)?;
    Ok(out)
}

/// Matrix exponential of an arbitrary square complex matrix.
pub fn expm_complex(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::InvalidDimension("matrix exponential needs a square matrix".into()));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput("matrix exponential input has non-finite entries".into()));
    }
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a * Complex64::new(2f64.powi(-squarings), 0.0);

    let c = |k: usize| Complex64::new(PADE13[k], 0.0);
    let ident = CMatrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * c(13) + &a4 * c(11) + &a2 * c(9))
        + &a6 * c(7)
        + &a4 * c(5)
        + &a2 * c(3)
        + &ident * c(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * c(12) + &a4 * c(10) + &a2 * c(8))
        + &a6 * c(6)
        + &a4 * c(4)
        + &a2 * c(2)
        + &ident * c(0);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::Degenerate("Padé denominator is singular".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

/// `true` iff `||T^t J T - J||_max <= tol`.
pub fn is_symplectic(t: &PhaseMatrix, tol: f64) -> bool {
    let j = standard_symplectic_form(t.dim_d()).expect("dim_d >= 1 by construction");
    let form = t.entries().transpose() * j.entries() * t.entries();
    (form - j.entries()).iter().all(|z| z.norm() <= tol)
}

/// Hermitian matrix `i (J - T^* J T)` whose quadratic form is
/// `X -> i (sigma(conj(TX), TX) - sigma(conj(X), X))`.
pub fn positivity_form(t: &PhaseMatrix) -> CMatrix {
    let j = standard_symplectic_form(t.dim_d()).expect("dim_d >= 1 by construction");
    let tj = t.entries().adjoint() * j.entries() * t.entries();
    (j.entries() - tj) * Complex64::new(0.0, 1.0)
}

/// Smallest eigenvalue of [`positivity_form`].
pub fn positivity_margin(t: &PhaseMatrix) -> f64 {
    let h = positivity_form(t);
    // symmetrize against rounding before the Hermitian solver
    let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Positivity of a complex symplectic matrix: all eigenvalues of
/// [`positivity_form`] are `>= -tol`.
pub fn is_positive_symplectic(t: &PhaseMatrix, tol: f64) -> Result<bool> {
    if !is_symplectic(t, tol) {
        return Err(Error::InvalidInput("matrix is not symplectic".into()));
    }
    Ok(positivity_margin(t) >= -tol)
}

/// An orthonormal basis (as columns) of a real subspace of `R^{2d}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: RMatrix,
    dim_d: usize,
}

impl Subspace {
    /// Wraps a basis; columns must be orthonormal within `1e-10`.
    pub fn from_orthonormal(basis: RMatrix, dim_d: usize) -> Result<Self> {
        if basis.nrows() != 2 * dim_d || basis.ncols() > 2 * dim_d {
            return Err(Error::InvalidDimension(format!(
                "subspace basis has shape {:?} in ambient dimension {}",
                basis.shape(),
                2 * dim_d
            )));
        }
        let gram = basis.transpose() * &basis;
        let k = basis.ncols();
        let off = (gram - RMatrix::identity(k, k)).amax();
        if k > 0 && off > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "subspace basis is not orthonormal (deviation {off:e})"
            )));
        }
        Ok(Self { basis, dim_d })
    }

    /// Orthonormalizes the span of the given columns.
    pub fn span(columns: &RMatrix, dim_d: usize, tol: f64) -> Result<Self> {
        if columns.nrows() != 2 * dim_d {
            return Err(Error::InvalidDimension("span: wrong ambient dimension".into()));
        }
        if columns.ncols() == 0 {
            return Ok(Self::zero(dim_d));
        }
        let svd = columns.clone().svd(true, false);
        let u = svd.u.expect("requested left singular vectors");
        let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let threshold = if sigma_max > 0.0 { tol * sigma_max } else { ABSOLUTE_RANK_FLOOR };
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&k| svd.singular_values[k] > threshold)
            .collect();
        let mut basis = RMatrix::zeros(2 * dim_d, keep.len());
        for (out, k) in keep.iter().enumerate() {
            basis.set_column(out, &u.column(*k));
        }
        Ok(Self { basis, dim_d })
    }

    pub fn full(dim_d: usize) -> Self {
        Self { basis: RMatrix::identity(2 * dim_d, 2 * dim_d), dim_d }
    }

    pub fn zero(dim_d: usize) -> Self {
        Self { basis: RMatrix::zeros(2 * dim_d, 0), dim_d }
    }

    pub fn basis(&self) -> &RMatrix {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn dim_d(&self) -> usize {
        self.dim_d
    }

    pub fn ambient_dim(&self) -> usize {
        2 * self.dim_d
    }

    pub fn projector(&self) -> RMatrix {
        &self.basis * self.basis.transpose()
    }

    /// Euclidean distance from `v` to its orthogonal projection.
    pub fn distance(&self, v: &DVector<f64>) -> f64 {
        let coeffs = self.basis.transpose() * v;
        (v - &self.basis * coeffs).norm()
    }

    /// Largest distance from a basis vector of `other` to `self`.
    pub fn projection_residual(&self, other: &Subspace) -> f64 {
        (0..other.dim())
            .map(|k| self.distance(&other.basis.column(k).into_owned()))
            .fold(0.0, f64::max)
    }

    /// Same span: equal dimension and mutual projection residual `<= tol`.
    pub fn same_span(&self, other: &Subspace, tol: f64) -> bool {
        self.dim() == other.dim()
            && self.projection_residual(other) <= tol
            && other.projection_residual(self) <= tol
    }
}

/// Orthonormal null-space basis of an arbitrary real matrix via SVD.
///
/// Singular values `<= tol * sigma_max` count as zero; if `sigma_max` is
/// zero the absolute floor `1e-14` is used instead.
pub fn null_space(m: &RMatrix, tol: f64) -> RMatrix {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return RMatrix::zeros(0, 0);
    }
    // pad so the SVD returns a full set of right singular vectors
    let padded = if rows < cols {
        let mut p = RMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let threshold = if sigma_max > 0.0 { tol * sigma_max } else { ABSOLUTE_RANK_FLOOR };
    let mut null_rows: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= threshold)
        .map(|(k, _)| k)
        .collect();
    null_rows.sort_unstable();
    let mut basis = RMatrix::zeros(cols, null_rows.len());
    for (out, k) in null_rows.iter().enumerate() {
        basis.set_column(out, &v_t.row(*k).transpose());
    }
    basis
}

/// Null space of a real phase matrix.
pub fn kernel(m: &PhaseMatrix, tol: f64) -> Result<Subspace> {
    if m.max_abs_imag() > 0.0 {
        return Err(Error::InvalidInput("kernel expects a real matrix".into()));
    }
    Ok(kernel_real(&m.re(), m.dim_d(), tol))
}

/// Null space of a real matrix with `2d` columns (any number of rows).
pub fn kernel_real(m: &RMatrix, dim_d: usize, tol: f64) -> Subspace {
    assert_eq!(m.ncols(), 2 * dim_d, "kernel_real: column count must be 2d");
    Subspace { basis: null_space(m, tol), dim_d }
}

/// `a ∩ b` as the kernel of the stacked complements `[I - P_a; I - P_b]`.
pub fn intersect(a: &Subspace, b: &Subspace, tol: f64) -> Result<Subspace> {
    if a.dim_d != b.dim_d {
        return Err(Error::InvalidDimension("intersect: subspaces in different ambient spaces".into()));
    }
    let n = a.ambient_dim();
    let ident = RMatrix::identity(n, n);
    let mut stacked = RMatrix::zeros(2 * n, n);
    stacked.view_mut((0, 0), (n, n)).copy_from(&(&ident - a.projector()));
    stacked.view_mut((n, 0), (n, n)).copy_from(&(&ident - b.projector()));
    Ok(kernel_real(&stacked, a.dim_d, tol))
}
