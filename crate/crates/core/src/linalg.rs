//! Dense complex linear algebra for small (d ≤ 9) density matrices.
//!
//! Storage is a thin newtype over `nalgebra::DMatrix<Complex<f64>>`; the
//! Hermitian eigensolver is nalgebra's `SymmetricEigen` re-sorted into
//! ascending order.

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub const ZERO: C64 = Complex { re: 0.0, im: 0.0 };
pub const ONE: C64 = Complex { re: 1.0, im: 0.0 };
pub const I: C64 = Complex { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    Complex::new(x, 0.0)
}

/// Absolute tolerances used by validation routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub hermitian: f64,
    pub trace: f64,
    /// Minimum eigenvalue accepted for a feasible state.
    pub psd: f64,
    /// Pairs with λ_a + λ_b at or below this are dropped from the spectral metric sum.
    pub zero_mode: f64,
    pub ppt: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-12,
            trace: 1e-12,
            psd: 1e-10,
            zero_mode: 1e-12,
            ppt: 1e-10,
        }
    }
}

/// Dense square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSquareMatrix(DMatrix<C64>);

impl ComplexSquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(dim, dim, |i, j| f(i, j)))
    }

    /// Builds a matrix from row-major entries; panics if `entries.len()` is not a square.
    pub fn from_row_slice(dim: usize, entries: &[C64]) -> Self {
        assert_eq!(entries.len(), dim * dim, "entries must hold dim² values");
        Self(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        Self::from_fn(n, |i, j| re(rows[i][j]))
    }

    pub fn diag(values: &[f64]) -> Self {
        Self::from_fn(values.len(), |i, j| if i == j { re(values[i]) } else { ZERO })
    }

    pub fn from_dmatrix(m: DMatrix<C64>) -> Self {
        assert!(m.is_square(), "matrix must be square");
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.0[(i, j)] = v;
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(&self.0 - &other.0)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self(&self.0 * re(s))
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &Self) {
        self.0 += &other.0 * re(s);
    }

    pub fn matmul(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0)
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Tr(self · other) without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.0[(i, k)] * other.0[(k, i)];
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// max |a_ij − conj(a_ji)|
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn determinant(&self) -> C64 {
        self.0.clone().lu().determinant()
    }

    pub fn try_inverse(&self) -> Option<Self> {
        self.0.clone().try_inverse().map(Self)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }
}

pub fn kron(a: &ComplexSquareMatrix, b: &ComplexSquareMatrix) -> ComplexSquareMatrix {
    a.kron(b)
}

/// A complex matrix that has passed the Hermiticity check.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(ComplexSquareMatrix);

impl HermitianMatrix {
    pub fn new(m: ComplexSquareMatrix) -> Result<Self> {
        Self::with_tolerance(m, Tolerances::default().hermitian)
    }

    pub fn with_tolerance(m: ComplexSquareMatrix, tol: f64) -> Result<Self> {
        let defect = m.hermitian_defect();
        if defect > tol {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self(m))
    }

    /// Caller guarantees Hermiticity (e.g. the matrix was built from a Hermitian basis).
    pub fn new_unchecked(m: ComplexSquareMatrix) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &ComplexSquareMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexSquareMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn eig(&self) -> Result<Spectrum> {
        herm_eig(self)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(herm_eig(self)?.eigenvalues[0])
    }
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending, eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexSquareMatrix,
}

impl Spectrum {
    /// V Λ V†
    pub fn reconstruct(&self) -> ComplexSquareMatrix {
        let v = &self.eigenvectors;
        let lam = ComplexSquareMatrix::diag(&self.eigenvalues);
        v.matmul(&lam).matmul(&v.adjoint())
    }

    /// V f(Λ) V† for a real function of the eigenvalues.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> ComplexSquareMatrix {
        let v = &self.eigenvectors;
        let vals: Vec<f64> = self.eigenvalues.iter().map(|&x| f(x)).collect();
        v.matmul(&ComplexSquareMatrix::diag(&vals)).matmul(&v.adjoint())
    }
}

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITER: usize = 10_000;

pub fn herm_eig(h: &HermitianMatrix) -> Result<Spectrum> {
    let n = h.dim();
    let se = SymmetricEigen::try_new(h.matrix().as_dmatrix().clone(), EIG_EPS, EIG_MAX_ITER)
        .ok_or_else(|| Error::Numerical("Hermitian eigen-iteration did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let eigenvectors = ComplexSquareMatrix::from_fn(n, |i, j| se.eigenvectors[(i, order[j])]);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Tensor-factor structure of a density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dims {
    Single(usize),
    Bipartite(usize, usize),
}

impl Dims {
    pub fn total(&self) -> usize {
        match *self {
            Dims::Single(d) => d,
            Dims::Bipartite(a, b) => a * b,
        }
    }
}

impl std::fmt::Display for Dims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Dims::Single(d) => write!(f, "{d}"),
            Dims::Bipartite(a, b) => write!(f, "{a}x{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Hermitian, unit-trace, positive semidefinite matrix with declared factorization.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    herm: HermitianMatrix,
    dims: Dims,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and min eigenvalue ≥ −psd tolerance.
    pub fn new(m: ComplexSquareMatrix, dims: Dims) -> Result<Self> {
        Self::with_tolerances(m, dims, &Tolerances::default())
    }

    pub fn with_tolerances(m: ComplexSquareMatrix, dims: Dims, tol: &Tolerances) -> Result<Self> {
        let rho = Self::boundary_tolerant(m, dims, tol)?;
        let min = rho.herm.min_eigenvalue()?;
        if min < -tol.psd {
            return Err(Error::NotPositive(min));
        }
        Ok(rho)
    }

    /// Checks Hermiticity and trace only; negative eigenvalues are allowed so
    /// callers can probe states just outside the feasible set.
    pub fn boundary_tolerant(m: ComplexSquareMatrix, dims: Dims, tol: &Tolerances) -> Result<Self> {
        if dims.total() != m.dim() {
            return Err(Error::Usage(format!(
                "dims {dims} do not match matrix dimension {}",
                m.dim()
            )));
        }
        let herm = HermitianMatrix::with_tolerance(m, tol.hermitian)?;
        let tr = herm.matrix().trace();
        if (tr.re - 1.0).abs() > tol.trace || tr.im.abs() > tol.trace {
            return Err(Error::InvalidTrace(tr.re));
        }
        Ok(Self { herm, dims })
    }

    pub(crate) fn new_unchecked(m: ComplexSquareMatrix, dims: Dims) -> Self {
        Self {
            herm: HermitianMatrix::new_unchecked(m),
            dims,
        }
    }

    pub fn matrix(&self) -> &ComplexSquareMatrix {
        self.herm.matrix()
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.herm
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn dim(&self) -> usize {
        self.herm.dim()
    }

    pub fn eig(&self) -> Result<Spectrum> {
        herm_eig(&self.herm)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        self.herm.min_eigenvalue()
    }
}

/// Transpose on one tensor factor of a `da × db` matrix.
pub fn partial_transpose_matrix(
    m: &ComplexSquareMatrix,
    da: usize,
    db: usize,
    which: Subsystem,
) -> ComplexSquareMatrix {
    let n = da * db;
    assert_eq!(m.dim(), n);
    ComplexSquareMatrix::from_fn(n, |row, col| {
        let (a, b) = (row / db, row % db);
        let (ap, bp) = (col / db, col % db);
        match which {
            Subsystem::B => m.get(a * db + bp, ap * db + b),
            Subsystem::A => m.get(ap * db + b, a * db + bp),
        }
    })
}

pub fn partial_transpose(rho: &DensityMatrix, which: Subsystem) -> Result<HermitianMatrix> {
    match rho.dims() {
        Dims::Bipartite(da, db) => Ok(HermitianMatrix::new_unchecked(partial_transpose_matrix(
            rho.matrix(),
            da,
            db,
            which,
        ))),
        Dims::Single(d) => Err(Error::Usage(format!(
            "partial transpose needs a bipartite factorization, state has single dimension {d}"
        ))),
    }
}

/// Reduced state after tracing out `traced`.
pub fn partial_trace(rho: &DensityMatrix, traced: Subsystem) -> Result<ComplexSquareMatrix> {
    let (da, db) = match rho.dims() {
        Dims::Bipartite(a, b) => (a, b),
        Dims::Single(d) => {
            return Err(Error::Usage(format!(
                "partial trace needs a bipartite factorization, state has single dimension {d}"
            )))
        }
    };
    let m = rho.matrix();
    Ok(match traced {
        Subsystem::B => ComplexSquareMatrix::from_fn(da, |a, ap| {
            (0..db).map(|b| m.get(a * db + b, ap * db + b)).sum()
        }),
        Subsystem::A => ComplexSquareMatrix::from_fn(db, |b, bp| {
            (0..da).map(|a| m.get(a * db + b, a * db + bp)).sum()
        }),
    })
}

/// The identity and the three Pauli matrices, indexed 0..4.
pub fn pauli(k: usize) -> ComplexSquareMatrix {
    match k {
        0 => ComplexSquareMatrix::identity(2),
        1 => ComplexSquareMatrix::from_row_slice(2, &[ZERO, ONE, ONE, ZERO]),
        2 => ComplexSquareMatrix::from_row_slice(2, &[ZERO, -I, I, ZERO]),
        3 => ComplexSquareMatrix::from_row_slice(2, &[ONE, ZERO, ZERO, -ONE]),
        _ => panic!("pauli index {k} out of range"),
    }
}

/// σ_i ⊗ σ_j with 0 denoting the identity.
pub fn pauli_product(i: usize, j: usize) -> ComplexSquareMatrix {
    pauli(i).kron(&pauli(j))
}

/// ρ = ¼(I⊗I + Σ 4aᵢ σᵢ⊗I + Σ 4bⱼ I⊗σⱼ + Σ 4ζᵢⱼ σᵢ⊗σⱼ).
///
/// With this scaling the singlet has ζᵢᵢ = −¼. Positivity is not checked.
pub fn pauli_two_qubit(a: [f64; 3], b: [f64; 3], zeta: [[f64; 3]; 3]) -> DensityMatrix {
    let mut m = ComplexSquareMatrix::identity(4).scale_real(0.25);
    for i in 0..3 {
        m.axpy(a[i], &pauli_product(i + 1, 0));
        m.axpy(b[i], &pauli_product(0, i + 1));
        for j in 0..3 {
            m.axpy(zeta[i][j], &pauli_product(i + 1, j + 1));
        }
    }
    DensityMatrix::new_unchecked(m, Dims::Bipartite(2, 2))
}

/// Principal square root of a positive semidefinite Hermitian matrix; small
/// negative eigenvalues are clamped to zero.
pub fn sqrt_psd(h: &HermitianMatrix) -> Result<ComplexSquareMatrix> {
    Ok(herm_eig(h)?.apply(|x| x.max(0.0).sqrt()))
}

/// Determinant of a small real matrix given row-major.
pub fn real_determinant(n: usize, entries: &[f64]) -> f64 {
    DMatrix::from_row_slice(n, n, entries).lu().determinant()
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn real_symmetric_eigenvalues(n: usize, entries: &[f64]) -> Vec<f64> {
    let m = DMatrix::from_row_slice(n, n, entries);
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn singlet() -> ComplexSquareMatrix {
        let s = 0.5;
        ComplexSquareMatrix::from_real_rows(&[
            &[0.0, 0.0, 0.0, 0.0],
            &[0.0, s, -s, 0.0],
            &[0.0, -s, s, 0.0],
            &[0.0, 0.0, 0.0, 0.0],
        ])
    }

    #[test]
    fn kron_identities_and_diagonal_paulis() {
        let i4 = kron(&pauli(0), &pauli(0));
        assert_eq!(i4, ComplexSquareMatrix::identity(4));
        let zz = kron(&pauli(3), &pauli(3));
        assert_eq!(zz, ComplexSquareMatrix::diag(&[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn kron_sigma_x_sigma_y_is_antidiagonal() {
        let m = kron(&pauli(1), &pauli(2));
        // σx⊗σy has −i, i, −i, i on the antidiagonal, read top to bottom.
        let expected = [-I, I, -I, I];
        for r in 0..4 {
            for col in 0..4 {
                let want = if r + col == 3 { expected[r] } else { ZERO };
                assert_eq!(m.get(r, col), want, "entry ({r},{col})");
            }
        }
    }

    #[test]
    fn eig_small_cases() {
        let d = HermitianMatrix::new(ComplexSquareMatrix::diag(&[0.9, 0.1])).unwrap();
        let s = herm_eig(&d).unwrap();
        assert!((s.eigenvalues[0] - 0.1).abs() < 1e-15);
        assert!((s.eigenvalues[1] - 0.9).abs() < 1e-15);

        let sx = HermitianMatrix::new(pauli(1)).unwrap();
        let s = herm_eig(&sx).unwrap();
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-14);

        let pure = HermitianMatrix::new(singlet()).unwrap();
        let s = herm_eig(&pure).unwrap();
        for (k, want) in [0.0, 0.0, 0.0, 1.0].iter().enumerate() {
            assert!((s.eigenvalues[k] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = ComplexSquareMatrix::from_row_slice(2, &[ONE, ONE, ZERO, ONE]);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn density_matrix_checks_trace_and_positivity() {
        let bad_trace = ComplexSquareMatrix::diag(&[0.5, 0.6]);
        assert!(matches!(
            DensityMatrix::new(bad_trace, Dims::Single(2)),
            Err(Error::InvalidTrace(_))
        ));
        let negative = ComplexSquareMatrix::diag(&[1.1, -0.1]);
        assert!(matches!(
            DensityMatrix::new(negative.clone(), Dims::Single(2)),
            Err(Error::NotPositive(_))
        ));
        assert!(DensityMatrix::boundary_tolerant(negative, Dims::Single(2), &Tolerances::default()).is_ok());
    }

    #[test]
    fn singlet_partial_transpose_has_minus_half() {
        let rho = DensityMatrix::new(singlet(), Dims::Bipartite(2, 2)).unwrap();
        let pt = partial_transpose(&rho, Subsystem::B).unwrap();
        let s = pt.eig().unwrap();
        assert!((s.eigenvalues[0] + 0.5).abs() < 1e-14);
        for &l in &s.eigenvalues[1..] {
            assert!((l - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn partial_transpose_requires_factorization() {
        let rho = DensityMatrix::new(ComplexSquareMatrix::identity(4).scale_real(0.25), Dims::Single(4)).unwrap();
        assert!(matches!(partial_transpose(&rho, Subsystem::A), Err(Error::Usage(_))));
    }

    #[test]
    fn product_state_is_ppt() {
        let a = ComplexSquareMatrix::from_row_slice(2, &[re(0.7), c(0.1, 0.2), c(0.1, -0.2), re(0.3)]);
        let b = ComplexSquareMatrix::from_row_slice(2, &[re(0.4), c(-0.3, 0.1), c(-0.3, -0.1), re(0.6)]);
        let rho = DensityMatrix::new(a.kron(&b), Dims::Bipartite(2, 2)).unwrap();
        for which in [Subsystem::A, Subsystem::B] {
            let min = partial_transpose(&rho, which).unwrap().min_eigenvalue().unwrap();
            assert!(min >= -1e-14);
        }
    }

    #[test]
    fn pauli_two_qubit_special_points() {
        let mixed = pauli_two_qubit([0.0; 3], [0.0; 3], [[0.0; 3]; 3]);
        assert!(mixed.matrix().max_abs_diff(&ComplexSquareMatrix::identity(4).scale_real(0.25)) < 1e-16);

        let q = -0.25;
        let s = pauli_two_qubit([0.0; 3], [0.0; 3], [[q, 0.0, 0.0], [0.0, q, 0.0], [0.0, 0.0, q]]);
        assert!(s.matrix().max_abs_diff(&singlet()) < 1e-15);
    }

    #[test]
    fn equal_intra_spectrum_and_feasible_range() {
        for &z in &[-0.25, -0.1, 0.0, 0.05, 1.0 / 12.0] {
            let rho = pauli_two_qubit([0.0; 3], [0.0; 3], [[z, 0.0, 0.0], [0.0, z, 0.0], [0.0, 0.0, z]]);
            let ev = rho.eig().unwrap().eigenvalues;
            let mut want = [(1.0 + 4.0 * z) / 4.0, (1.0 + 4.0 * z) / 4.0, (1.0 + 4.0 * z) / 4.0, (1.0 - 12.0 * z) / 4.0];
            want.sort_by(f64::total_cmp);
            for k in 0..4 {
                assert!((ev[k] - want[k]).abs() < 1e-14, "ζ={z}");
            }
        }
    }

    #[test]
    fn partial_trace_of_product() {
        let a = ComplexSquareMatrix::diag(&[0.3, 0.7]);
        let b = ComplexSquareMatrix::diag(&[0.2, 0.5, 0.3]);
        let rho = DensityMatrix::new(a.kron(&b), Dims::Bipartite(2, 3)).unwrap();
        assert!(partial_trace(&rho, Subsystem::B).unwrap().max_abs_diff(&a) < 1e-15);
        assert!(partial_trace(&rho, Subsystem::A).unwrap().max_abs_diff(&b) < 1e-15);
    }
}
