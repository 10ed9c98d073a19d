//! Dense operator algebra: projections, Loewner order, pseudoinverses,
//! positive square roots and Douglas factorization.
//!
//! Everything is real and dense. Operators are `rows × cols` matrices acting on
//! column vectors; `cols` is the domain dimension.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::report::{Provenance, VerificationReport};
use crate::tolerances::{
    DOUGLAS_PRECISION, NEGATIVE_EIG_TOL, ORTHONORMAL_TOL, RANK_TOL, SINGULAR_EIG_TOL,
    SYMMETRY_TOL,
};

/// A dense real operator with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator(DMatrix<f64>);

impl Operator {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.iter().all(|x| x.is_finite()) {
            Ok(Operator(matrix))
        } else {
            Err(Error::NonFinite("operator".into()))
        }
    }

    /// Builds an operator from a list of rows. `cols` is only consulted when
    /// `rows` is empty.
    pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Result<Self> {
        let ncols = rows.first().map_or(cols, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
            return Err(Error::shape(format!("row {i}"), ncols, r.len()));
        }
        let m = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
        Operator::new(m)
    }

    pub fn identity(n: usize) -> Self {
        Operator(DMatrix::identity(n, n))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Operator(DMatrix::zeros(rows, cols))
    }

    pub fn diag(values: &[f64]) -> Self {
        Operator(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub(crate) fn wrap(matrix: DMatrix<f64>) -> Self {
        debug_assert!(matrix.iter().all(|x| x.is_finite()));
        Operator(matrix)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.0.is_square()
    }

    pub fn transpose(&self) -> Operator {
        Operator(self.0.transpose())
    }

    /// Spectral (largest singular value) norm.
    pub fn op_norm(&self) -> f64 {
        op_norm(&self.0)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }
}

impl Deref for Operator {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Spectral norm of a dense matrix. Empty matrices have norm zero.
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Smallest singular value above `rank_tol · σ_max`, if any.
pub fn min_positive_singular_value(m: &DMatrix<f64>, rank_tol: f64) -> Option<f64> {
    let s = singular_values(m);
    let cutoff = rank_tol * s.first().copied().unwrap_or(0.0);
    s.into_iter().rfind(|&x| x > cutoff && x > 0.0)
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues in ascending
/// order; `vectors` column `i` pairs with `values[i]`.
#[derive(Debug, Clone)]
pub struct SymmetricSpectrum {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymmetricSpectrum {
    /// Decomposes the symmetric part `(m + mᵀ)/2`.
    pub fn of(m: &DMatrix<f64>) -> Self {
        assert!(m.is_square(), "symmetric spectrum of a non-square matrix");
        let n = m.nrows();
        if n == 0 {
            return SymmetricSpectrum {
                values: Vec::new(),
                vectors: DMatrix::zeros(0, 0),
            };
        }
        let sym = symmetric_part(m);
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        SymmetricSpectrum { values, vectors }
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Rebuilds `Q f(Λ) Qᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let d = DVector::from_iterator(self.values.len(), self.values.iter().map(|&x| f(x)));
        let scaled = &self.vectors * DMatrix::from_diagonal(&d);
        symmetric_part(&(scaled * self.vectors.transpose()))
    }
}

pub fn symmetric_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn lambda_min(m: &DMatrix<f64>) -> f64 {
    SymmetricSpectrum::of(m).min()
}

pub fn lambda_max(m: &DMatrix<f64>) -> f64 {
    SymmetricSpectrum::of(m).max()
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Largest entrywise asymmetry relative to the entry scale.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    max_abs(&(m - m.transpose())) / max_abs(m).max(1.0)
}

fn require_symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Domain(format!(
            "{what} must be square, found {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let a = asymmetry(m);
    if a > SYMMETRY_TOL {
        return Err(Error::Domain(format!(
            "{what} is not symmetric (relative asymmetry {a:.3e})"
        )));
    }
    Ok(())
}

/// A closed subspace of `R^n`, stored as an orthonormal basis (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Accepts a basis whose columns are orthonormal within `ORTHONORMAL_TOL`.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        if !basis.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("subspace basis".into()));
        }
        let defect = orthonormality_defect(&basis);
        if defect > ORTHONORMAL_TOL {
            return Err(Error::Domain(format!(
                "basis columns are not orthonormal (defect {defect:.3e})"
            )));
        }
        Ok(Subspace { basis })
    }

    /// Like [`Subspace::new`], but re-orthonormalizes a basis whose defect is at
    /// most `repair_tol`. A basis that is already orthonormal is kept verbatim.
    pub fn repaired(basis: DMatrix<f64>, repair_tol: f64) -> Result<Self> {
        if !basis.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("subspace basis".into()));
        }
        let defect = orthonormality_defect(&basis);
        if defect <= ORTHONORMAL_TOL {
            return Ok(Subspace { basis });
        }
        if defect > repair_tol {
            return Err(Error::Domain(format!(
                "basis orthonormality defect {defect:.3e} exceeds repair threshold {repair_tol:.1e}"
            )));
        }
        let q = orthonormal_range(&basis, RANK_TOL);
        if q.ncols() != basis.ncols() {
            return Err(Error::Domain("basis columns are linearly dependent".into()));
        }
        Ok(Subspace { basis: q })
    }

    pub fn empty(ambient_dim: usize) -> Self {
        Subspace {
            basis: DMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Subspace {
            basis: DMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    /// Span of the listed standard basis vectors.
    pub fn coordinate(ambient_dim: usize, axes: &[usize]) -> Result<Self> {
        let mut basis = DMatrix::zeros(ambient_dim, axes.len());
        for (c, &a) in axes.iter().enumerate() {
            if a >= ambient_dim {
                return Err(Error::shape("coordinate axis", format!("< {ambient_dim}"), a));
            }
            basis[(a, c)] = 1.0;
        }
        Subspace::new(basis)
    }

    /// Orthonormal basis for the span of arbitrary columns.
    pub fn span(vectors: &DMatrix<f64>, rank_tol: f64) -> Self {
        Subspace {
            basis: orthonormal_range(vectors, rank_tol),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }
}

/// `max |BᵀB − I|`.
pub fn orthonormality_defect(basis: &DMatrix<f64>) -> f64 {
    let k = basis.ncols();
    max_abs(&(basis.tr_mul(basis) - DMatrix::identity(k, k)))
}

/// Orthonormal basis of the column space of `m` by modified Gram–Schmidt with
/// column pivoting. Columns whose residual falls to `rank_tol · max‖column‖`
/// are treated as dependent.
pub fn orthonormal_range(m: &DMatrix<f64>, rank_tol: f64) -> DMatrix<f64> {
    let n = m.nrows();
    let mut cols: Vec<DVector<f64>> = m.column_iter().map(|c| c.into_owned()).collect();
    let scale = cols.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
    let mut q: Vec<DVector<f64>> = Vec::new();
    if scale == 0.0 {
        return DMatrix::zeros(n, 0);
    }
    let threshold = rank_tol * scale;
    let mut remaining: Vec<usize> = (0..cols.len()).collect();

    while !remaining.is_empty() && q.len() < n {
        let (pos, norm) = remaining
            .iter()
            .enumerate()
            .map(|(p, &j)| (p, cols[j].norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        if norm <= threshold {
            break;
        }
        let j = remaining.remove(pos);
        let mut u = &cols[j] / norm;
        // second pass against the accepted vectors
        for qi in &q {
            let d = qi.dot(&u);
            u.axpy(-d, qi, 1.0);
        }
        let un = u.norm();
        if un <= f64::EPSILON {
            continue;
        }
        u /= un;
        for &r in &remaining {
            let d = u.dot(&cols[r]);
            cols[r].axpy(-d, &u, 1.0);
        }
        q.push(u);
    }

    if q.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&q)
    }
}

/// Orthogonal projection of `f` onto `v`.
pub fn project(v: &Subspace, f: &DVector<f64>) -> Result<DVector<f64>> {
    if f.len() != v.ambient_dim() {
        return Err(Error::shape("project", v.ambient_dim(), f.len()));
    }
    Ok(v.basis() * v.basis().tr_mul(f))
}

/// Result of a Loewner-order comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderCertificate {
    pub holds: bool,
    /// Minimum eigenvalue of the difference `S − T`.
    pub gap: f64,
    pub lambda: Option<f64>,
}

/// Decides `T ≤ S` in the Loewner order: `S − T` positive semidefinite up to `tol`.
pub fn operator_leq(t: &DMatrix<f64>, s: &DMatrix<f64>, tol: f64) -> Result<OrderCertificate> {
    require_symmetric(t, "T")?;
    require_symmetric(s, "S")?;
    if t.shape() != s.shape() {
        return Err(Error::shape(
            "operator_leq",
            format!("{:?}", s.shape()),
            format!("{:?}", t.shape()),
        ));
    }
    let gap = lambda_min(&(s - t));
    Ok(OrderCertificate {
        holds: gap >= -tol,
        gap,
        lambda: None,
    })
}

/// Moore–Penrose pseudoinverse via the SVD; singular values at or below
/// `rank_tol · σ_max` are dropped.
pub fn pinv(t: &DMatrix<f64>, rank_tol: f64) -> DMatrix<f64> {
    let (r, c) = t.shape();
    if t.is_empty() {
        return DMatrix::zeros(c, r);
    }
    let svd = SVD::new(t.clone(), true, true);
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested Vᵀ");
    let smax = svd.singular_values.iter().copied().fold(0.0_f64, f64::max);
    let cutoff = rank_tol * smax;
    let mut out = DMatrix::zeros(c, r);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            out += (vt.row(i).transpose() * u.column(i).transpose()) / s;
        }
    }
    out
}

/// Output of [`douglas_factor`].
#[derive(Debug, Clone)]
pub struct DouglasFactor {
    /// Minimal-norm solution of `T·S = L`.
    pub factor: Operator,
    /// Smallest λ with `L Lᵀ ≤ λ² T Tᵀ` (within the Loewner tolerance).
    pub lambda: f64,
    /// `‖T·S − L‖`.
    pub residual: f64,
}

/// Certifies `R(L) ⊆ R(T)` by producing `S` with `L = T S` and the majorization
/// constant λ.
pub fn douglas_factor(l: &DMatrix<f64>, t: &DMatrix<f64>, tol: f64) -> Result<DouglasFactor> {
    if l.nrows() != t.nrows() {
        return Err(Error::shape("douglas_factor codomain", t.nrows(), l.nrows()));
    }
    let s = pinv(t, RANK_TOL) * l;
    let residual = op_norm(&(t * &s - l));
    let l_norm = op_norm(l);
    let tolerance = tol * l_norm.max(1.0);
    if residual > tolerance {
        return Err(Error::RangeInclusion {
            residual,
            tolerance,
        });
    }

    let llt = l * l.transpose();
    let ttt = t * t.transpose();
    let feasible = |lam: f64| lambda_min(&(&ttt * (lam * lam) - &llt)) >= -tol;

    let lambda = if feasible(0.0) {
        0.0
    } else {
        let sigma = min_positive_singular_value(t, RANK_TOL).unwrap_or(1.0);
        let mut hi = l_norm / sigma + 1.0;
        while !feasible(hi) {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        while hi - lo > DOUGLAS_PRECISION {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if feasible(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };

    Ok(DouglasFactor {
        factor: Operator::wrap(s),
        lambda,
        residual,
    })
}

/// `S^{1/2}` or, with `invert`, `S^{-1/2}` for symmetric positive (semi)definite `S`.
pub fn positive_sqrt(s: &DMatrix<f64>, invert: bool) -> Result<DMatrix<f64>> {
    require_symmetric(s, "S")?;
    let spec = SymmetricSpectrum::of(s);
    let min = spec.min();
    if min < -NEGATIVE_EIG_TOL {
        return Err(Error::NotPositive {
            min_eigenvalue: min,
        });
    }
    if invert {
        if min <= SINGULAR_EIG_TOL {
            return Err(Error::Singular {
                min_eigenvalue: min,
            });
        }
        Ok(spec.map(|x| 1.0 / x.sqrt()))
    } else {
        Ok(spec.map(|x| x.max(0.0).sqrt()))
    }
}

/// Inverse of a symmetric positive definite operator through its spectrum.
pub fn spd_inverse(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    require_symmetric(s, "S")?;
    let spec = SymmetricSpectrum::of(s);
    if spec.min() <= SINGULAR_EIG_TOL {
        return Err(Error::Singular {
            min_eigenvalue: spec.min(),
        });
    }
    Ok(spec.map(|x| 1.0 / x))
}

/// Orthonormal basis of `T·V`.
pub fn orthonormalize_image(t: &DMatrix<f64>, v: &Subspace, rank_tol: f64) -> Result<Subspace> {
    if t.ncols() != v.ambient_dim() {
        return Err(Error::shape(
            "orthonormalize_image",
            v.ambient_dim(),
            t.ncols(),
        ));
    }
    Ok(Subspace::span(&(t * v.basis()), rank_tol))
}

/// Checks `π_V Tᵀ = π_V Tᵀ π_{TV}` and, for orthogonal `T`, `π_{TV} T = T π_V`.
pub fn projection_identity_check(
    t: &DMatrix<f64>,
    v: &Subspace,
    tol: f64,
) -> Result<VerificationReport> {
    if !t.is_square() {
        return Err(Error::shape(
            "projection_identity_check",
            "square operator",
            format!("{}x{}", t.nrows(), t.ncols()),
        ));
    }
    let tv = orthonormalize_image(t, v, RANK_TOL)?;
    let pv = v.projector();
    let ptv = tv.projector();
    let tt = t.transpose();
    let scale = op_norm(t).max(1.0);

    let first = op_norm(&(&pv * &tt - &pv * &tt * &ptv));
    let mut report = VerificationReport::builder("projection_identity", Provenance::ExactSpectral)
        .residual("adjoint_identity", first, tol * scale);

    let n = t.nrows();
    let unitary_defect = op_norm(&(t.tr_mul(t) - DMatrix::identity(n, n)));
    if unitary_defect <= tol {
        let second = op_norm(&(&ptv * t - t * &pv));
        report = report.residual("unitary_identity", second, tol * scale);
    } else {
        report = report
            .constant("unitary_defect", unitary_defect)
            .note("T is not orthogonal; unitary branch skipped");
    }
    Ok(report.finish())
}
