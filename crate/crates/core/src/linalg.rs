//! Dense linear-algebra helpers shared by the sensing, certification and
//! recovery code.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Relative singular-value threshold used for every rank and nullspace
/// decision: `σ ≤ RANK_TOL · σ_max` counts as zero.
pub const RANK_TOL: f64 = 1e-10;

/// A dense matrix over either the reals or the complex numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "field", content = "data", rename_all = "lowercase")]
pub enum Dense {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

impl Dense {
    pub fn nrows(&self) -> usize {
        match self {
            Dense::Real(m) => m.nrows(),
            Dense::Complex(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Dense::Real(m) => m.ncols(),
            Dense::Complex(m) => m.ncols(),
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, Dense::Complex(_))
    }

    pub fn to_complex(&self) -> DMatrix<Complex64> {
        match self {
            Dense::Real(m) => m.map(|v| Complex64::new(v, 0.0)),
            Dense::Complex(m) => m.clone(),
        }
    }

    pub fn as_real(&self) -> Option<&DMatrix<f64>> {
        match self {
            Dense::Real(m) => Some(m),
            Dense::Complex(_) => None,
        }
    }

    pub fn transpose(&self) -> Dense {
        match self {
            Dense::Real(m) => Dense::Real(m.transpose()),
            Dense::Complex(m) => Dense::Complex(m.transpose()),
        }
    }

    /// `self * rhs` for a real right-hand side, staying real when possible.
    pub fn mul_real(&self, rhs: &DMatrix<f64>) -> Dense {
        match self {
            Dense::Real(m) => Dense::Real(m * rhs),
            Dense::Complex(m) => Dense::Complex(m * rhs.map(|v| Complex64::new(v, 0.0))),
        }
    }

    /// Selects rows by index, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dense {
        match self {
            Dense::Real(m) => Dense::Real(m.select_rows(rows)),
            Dense::Complex(m) => Dense::Complex(m.select_rows(rows)),
        }
    }

    pub fn kronecker(&self, rhs: &Dense) -> Dense {
        match (self, rhs) {
            (Dense::Real(a), Dense::Real(b)) => Dense::Real(a.kronecker(b)),
            (a, b) => Dense::Complex(a.to_complex().kronecker(&b.to_complex())),
        }
    }

    /// `‖B^* B − I‖_F`, the distance of the columns from an orthonormal set.
    pub fn orthonormality_defect(&self) -> f64 {
        let c = self.to_complex();
        let gram = c.adjoint() * &c;
        let id = DMatrix::<Complex64>::identity(gram.nrows(), gram.ncols());
        (gram - id).norm()
    }
}

/// Column-major vectorization: `vec(M)[i + j·m] = M[i, j]`.
pub fn vec<T: nalgebra::Scalar>(m: &DMatrix<T>) -> DVector<T> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec`].
pub fn unvec<T: nalgebra::Scalar>(v: &DVector<T>, rows: usize, cols: usize) -> DMatrix<T> {
    assert_eq!(v.len(), rows * cols, "unvec: length does not match shape");
    DMatrix::from_column_slice(rows, cols, v.as_slice())
}

fn to_faer(a: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(a: faer::MatRef<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Runs a faer decomposition. On a convergence failure it retries on a copy
/// with entries at round-off level (`≤ 1e−15·max|aᵢⱼ|`) flushed to zero, then
/// on that copy scaled by `1 + 1e−9`. Returns the result and the scale used.
fn decompose<T, E>(a: &DMatrix<f64>, what: &str, f: impl Fn(faer::MatRef<'_, f64>) -> Result<T, E>) -> (T, f64) {
    if let Ok(t) = f(to_faer(a).as_ref()) {
        return (t, 1.0);
    }
    let m = a.amax();
    let flushed = a.map(|v| if v.abs() <= 1e-15 * m { 0.0 } else { v });
    if let Ok(t) = f(to_faer(&flushed).as_ref()) {
        return (t, 1.0);
    }
    const NUDGE: f64 = 1.0 + 1e-9;
    match f(to_faer(&(flushed * NUDGE)).as_ref()) {
        Ok(t) => (t, NUDGE),
        Err(_) => panic!("{what} iteration failed to converge"),
    }
}

/// Thin SVD `(U, σ, Vᵀ)` with `A = U diag(σ) Vᵀ` and `σ` non-increasing.
pub fn svd(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let r = a.nrows().min(a.ncols());
    if r == 0 {
        return (DMatrix::zeros(a.nrows(), 0), DVector::zeros(0), DMatrix::zeros(0, a.ncols()));
    }
    let (f, scale) = decompose(a, "SVD", |m| m.thin_svd());
    let sigma = DVector::from_fn(r, |k, _| f.S()[k] / scale);
    (from_faer(f.U()), sigma, from_faer(f.V()).transpose())
}

/// Singular values in non-increasing order.
pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    if a.is_empty() {
        return DVector::zeros(0);
    }
    let (mut s, scale) = decompose(a, "SVD", |m| m.singular_values());
    s.sort_by(|x, y| y.total_cmp(x));
    DVector::from_iterator(s.len(), s.into_iter().map(|v| v / scale))
}

/// Eigen-decomposition of a symmetric matrix: eigenvalues in non-decreasing
/// order and the matching orthonormal eigenvectors as columns.
///
/// Only the lower triangle is read.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let (e, scale) = decompose(a, "eigenvalue", |m| m.self_adjoint_eigen(faer::Side::Lower));
    let values = DVector::from_fn(a.nrows(), |k, _| e.S()[k] / scale);
    (values, from_faer(e.U()))
}

/// Eigenvalues of a symmetric matrix in non-decreasing order.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> DVector<f64> {
    let (mut v, scale) = decompose(a, "eigenvalue", |m| m.self_adjoint_eigenvalues(faer::Side::Lower));
    v.sort_by(f64::total_cmp);
    DVector::from_iterator(v.len(), v.into_iter().map(|x| x / scale))
}

/// Numerical rank under [`RANK_TOL`].
pub fn rank(a: &DMatrix<f64>) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = singular_values(a);
    let smax = sv[0];
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() { 0.0 } else { singular_values(a)[0] }
}

/// Orthonormal basis of the right nullspace of `a`, one vector per column.
///
/// Singular values at or below `RANK_TOL · σ_max` are treated as zero. The
/// returned matrix has `a.ncols()` rows and `nullity` columns.
pub fn nullspace(a: &DMatrix<f64>) -> DMatrix<f64> {
    nullspace_below(a, RANK_TOL * spectral_norm(a))
}

/// Nullspace basis treating singular values `≤ threshold` as zero.
pub fn nullspace_below(a: &DMatrix<f64>, threshold: f64) -> DMatrix<f64> {
    let n = a.ncols();
    if a.nrows() == 0 || n == 0 {
        return DMatrix::identity(n, n);
    }
    let (f, scale) = decompose(a, "SVD", |m| m.svd());
    let s = f.S();
    let keep: Vec<usize> = (0..n).filter(|&k| k >= s.dim() || s[k] <= threshold * scale).collect();
    let v = f.V();
    DMatrix::from_fn(n, keep.len(), |i, c| v[(i, keep[c])])
}

/// Projector onto the affine set `{x : A x = y}` for a fixed `A`.
///
/// Built once from a thin SVD; `project` then costs `O(N·rank)`.
#[derive(Debug, Clone)]
pub struct AffineProjector {
    /// Orthonormal basis of the row space, `N × rank`.
    row_basis: DMatrix<f64>,
    /// `U_r Σ_r^{-1}` stored transposed so that `A⁺ y = V_r (pinv_left · y)`.
    pinv_left: DMatrix<f64>,
    rank: usize,
}

impl AffineProjector {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let n = a.ncols();
        if a.nrows() == 0 {
            return AffineProjector {
                row_basis: DMatrix::zeros(n, 0),
                pinv_left: DMatrix::zeros(0, 0),
                rank: 0,
            };
        }
        let (u, sigma, v_t) = svd(a);
        let smax = sigma.max();
        let keep: Vec<usize> = (0..sigma.len())
            .filter(|&k| smax > 0.0 && sigma[k] > RANK_TOL * smax)
            .collect();
        let r = keep.len();
        let mut row_basis = DMatrix::zeros(n, r);
        let mut pinv_left = DMatrix::zeros(r, a.nrows());
        for (c, &k) in keep.iter().enumerate() {
            row_basis.set_column(c, &v_t.row(k).transpose());
            let inv = 1.0 / sigma[k];
            pinv_left.set_row(c, &(u.column(k).transpose() * inv));
        }
        AffineProjector { row_basis, pinv_left, rank: r }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Minimum-norm solution `A⁺ y`.
    pub fn min_norm_solution(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.row_basis * (&self.pinv_left * y)
    }

    /// Orthogonal projection of `v` onto the nullspace of `A`.
    pub fn project_nullspace(&self, v: &DVector<f64>) -> DVector<f64> {
        v - &self.row_basis * (self.row_basis.transpose() * v)
    }
}
