//! Dense complex matrix kernels: nullspaces, Hermitian eigendecomposition,
//! inverse square roots, determinants, singular values, matrix polynomials and
//! the Vandermonde interpolation used to express an inverse square root as a
//! polynomial in the matrix.

use nalgebra::{ComplexField, DMatrix, DVector};

use crate::error::{Result, UepError};
use crate::scalar::{cx_real, Cx, Real};

/// Dense rectangular complex matrix. Storage is nalgebra's column-major layout;
/// use [`from_row_major`] to build one from a row-major entry list.
pub type ComplexMatrix<T> = DMatrix<Cx<T>>;

const MAX_SWEEPS: usize = 10_000;

/// Builds a matrix from row-major entries, rejecting zero dimensions, a wrong
/// entry count and non-finite values.
pub fn from_row_major<T: Real>(
    rows: usize,
    cols: usize,
    entries: Vec<Cx<T>>,
) -> Result<ComplexMatrix<T>> {
    if rows == 0 || cols == 0 {
        return Err(UepError::InvalidInput(format!(
            "matrix dimensions must be positive, got {rows}x{cols}"
        )));
    }
    if entries.len() != rows * cols {
        return Err(UepError::ShapeMismatch(format!(
            "{rows}x{cols} matrix needs {} entries, got {}",
            rows * cols,
            entries.len()
        )));
    }
    let m = DMatrix::from_row_iterator(rows, cols, entries);
    check_finite(&m)?;
    Ok(m)
}

pub fn check_finite<T: Real>(m: &ComplexMatrix<T>) -> Result<()> {
    for row in 0..m.nrows() {
        for col in 0..m.ncols() {
            let z = m[(row, col)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(UepError::NonFinite { row, col });
            }
        }
    }
    Ok(())
}

fn check_finite_real<T: Real>(m: &DMatrix<T>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(UepError::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

pub fn identity<T: Real>(d: usize) -> ComplexMatrix<T> {
    DMatrix::identity(d, d)
}

pub fn frobenius<T: Real>(m: &ComplexMatrix<T>) -> T {
    m.norm()
}

/// Entry-wise complex conjugate (no transpose).
pub fn conjugate<T: Real>(m: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    m.map(|z| z.conj())
}

/// `‖U†U − I‖_F`.
pub fn unitarity_defect<T: Real>(u: &ComplexMatrix<T>) -> T {
    let n = u.ncols();
    (u.adjoint() * u - identity::<T>(n)).norm()
}

/// `‖H − H†‖_F / ‖H‖_F` (zero for the zero matrix).
pub fn hermitian_defect<T: Real>(h: &ComplexMatrix<T>) -> T {
    let scale = h.norm();
    if scale == T::zero() {
        return T::zero();
    }
    (h - h.adjoint()).norm() / scale
}

/// Numerical thresholds shared by the whole pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T: Real> {
    /// Relative singular-value cutoff for numerical rank and invertibility.
    pub rank_rel: T,
    /// Largest residual (relative, with an absolute floor of one) accepted as satisfied.
    pub residual_abs: T,
    /// Minimum eigenvalue gap for eigenvalues to count as distinct.
    pub degenerate_gap: T,
}

impl<T: Real> Tolerances<T> {
    pub fn new(rank_rel: T, residual_abs: T, degenerate_gap: T) -> Result<Self> {
        for (name, v) in [
            ("rank_rel", rank_rel),
            ("residual_abs", residual_abs),
            ("degenerate_gap", degenerate_gap),
        ] {
            if !(v > T::zero() && v < T::one()) {
                return Err(UepError::InvalidInput(format!(
                    "tolerance {name} must lie in (0, 1), got {v}"
                )));
            }
        }
        Ok(Self {
            rank_rel,
            residual_abs,
            degenerate_gap,
        })
    }

    /// Residual threshold scaled by `max(1, scale)`.
    pub fn residual_bound(&self, scale: T) -> T {
        self.residual_abs * scale.max(T::one())
    }
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            rank_rel: T::tolerance_floor(1e-10),
            residual_abs: T::tolerance_floor(1e-8),
            degenerate_gap: T::tolerance_floor(1e-8),
        }
    }
}

/// Matrix polynomial `P(λ) = Σ λ^i X_i` with coefficients of a common shape.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolynomial<T: Real> {
    coefficients: Vec<ComplexMatrix<T>>,
}

impl<T: Real> MatrixPolynomial<T> {
    pub fn new(coefficients: Vec<ComplexMatrix<T>>) -> Result<Self> {
        let first = coefficients
            .first()
            .ok_or_else(|| UepError::InvalidInput("matrix polynomial needs a coefficient".into()))?;
        let shape = first.shape();
        for (i, c) in coefficients.iter().enumerate() {
            if c.shape() != shape {
                return Err(UepError::ShapeMismatch(format!(
                    "coefficient {i} has shape {:?}, expected {shape:?}",
                    c.shape()
                )));
            }
            check_finite(c)?;
        }
        Ok(Self { coefficients })
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn shape(&self) -> (usize, usize) {
        self.coefficients[0].shape()
    }

    pub fn coefficients(&self) -> &[ComplexMatrix<T>] {
        &self.coefficients
    }

    pub fn evaluate(&self, lambda: Cx<T>) -> ComplexMatrix<T> {
        evaluate_matrix_polynomial(self, lambda)
    }
}

/// Horner evaluation of `Σ λ^i X_i`.
pub fn evaluate_matrix_polynomial<T: Real>(
    p: &MatrixPolynomial<T>,
    lambda: Cx<T>,
) -> ComplexMatrix<T> {
    let mut coeffs = p.coefficients.iter().rev();
    let mut acc = coeffs.next().expect("non-empty by construction").clone();
    for c in coeffs {
        acc = acc * lambda + c;
    }
    acc
}

/// Singular values and (optionally) right singular vectors of `m`, descending.
fn svd_checked<T: Real, N: ComplexField<RealField = T>>(
    m: DMatrix<N>,
    compute_u: bool,
    compute_v: bool,
) -> Result<nalgebra::SVD<N, nalgebra::Dyn, nalgebra::Dyn>> {
    m.try_svd(compute_u, compute_v, T::default_epsilon(), MAX_SWEEPS)
    .ok_or(UepError::NoConvergence("singular value decomposition"))
}

/// Orthonormal basis of the numerical right nullspace, over any field nalgebra
/// supports. A vector belongs to the nullspace when its singular value is at
/// most `rank_rel · σ_max`; every vector is returned for the zero matrix.
pub(crate) fn nullspace_generic<T: Real, N: ComplexField<RealField = T>>(
    m: &DMatrix<N>,
    rank_rel: T,
) -> Result<Vec<DVector<N>>> {
    let n = m.ncols();
    if n == 0 {
        return Err(UepError::InvalidInput("nullspace of a matrix with no columns".into()));
    }
    // Reduce to an n x n problem so that the SVD returns a full right basis.
    let square = if m.nrows() > n {
        m.clone().qr().r()
    } else {
        let mut padded = DMatrix::zeros(n, n);
        padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        padded
    };
    let svd = svd_checked(square, false, true)?;
    let v_t = svd.v_t.expect("requested right singular vectors");
    let sigma_max = svd.singular_values.iter().copied().fold(T::zero(), |a, b| a.max(b));
    let cutoff = rank_rel * sigma_max;
    Ok(svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| sigma_max == T::zero() || **s <= cutoff)
        .map(|(k, _)| v_t.row(k).adjoint())
        .collect())
}

/// Orthonormal basis of the numerical right nullspace of a real matrix.
pub fn nullspace_basis<T: Real>(m: &DMatrix<T>, tol: &Tolerances<T>) -> Result<Vec<DVector<T>>> {
    check_finite_real(m)?;
    nullspace_generic(m, tol.rank_rel)
}

/// Numerical rank at relative cutoff `rank_rel`.
pub fn numerical_rank<T: Real>(m: &ComplexMatrix<T>, tol: &Tolerances<T>) -> Result<usize> {
    let s = singular_values(m)?;
    let max = s.first().copied().unwrap_or_else(T::zero);
    if max == T::zero() {
        return Ok(0);
    }
    Ok(s.iter().filter(|x| **x > tol.rank_rel * max).count())
}

/// Hermitian eigendecomposition `H = Q diag(values) Q†` with eigenvalues
/// sorted in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    pub vectors: ComplexMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|v| cx_real(*v)),
        ));
        &self.vectors * d * self.vectors.adjoint()
    }
}

pub fn hermitian_eigendecomposition<T: Real>(
    h: &ComplexMatrix<T>,
    tol: &Tolerances<T>,
) -> Result<HermitianEigen<T>> {
    if !h.is_square() {
        return Err(UepError::ShapeMismatch(format!(
            "eigendecomposition needs a square matrix, got {:?}",
            h.shape()
        )));
    }
    check_finite(h)?;
    let defect = hermitian_defect(h);
    if defect > tol.residual_abs {
        return Err(UepError::NotHermitian(defect.as_f64()));
    }
    let half = cx_real(T::lit(0.5));
    let sym = (h + h.adjoint()) * half;
    let eig = sym
        .try_symmetric_eigen(T::default_epsilon(), MAX_SWEEPS)
        .ok_or(UepError::NoConvergence("Hermitian eigendecomposition"))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    // Stable sort: ties keep their original index order.
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let n = h.nrows();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(HermitianEigen {
        values: order.iter().map(|&k| eig.eigenvalues[k]).collect(),
        vectors,
    })
}

/// Inverse square root of a Hermitian positive definite matrix through its
/// spectral decomposition.
pub fn inverse_sqrt_psd<T: Real>(h: &ComplexMatrix<T>, tol: &Tolerances<T>) -> Result<ComplexMatrix<T>> {
    let eig = hermitian_eigendecomposition(h, tol)?;
    let largest = eig.values.first().copied().unwrap_or_else(T::zero);
    let smallest = eig.values.last().copied().unwrap_or_else(T::zero);
    if largest <= T::zero() || smallest <= tol.rank_rel * largest {
        let ratio = if largest > T::zero() { smallest / largest } else { T::zero() };
        return Err(UepError::NotPositiveDefinite(ratio.as_f64()));
    }
    let scaled = DMatrix::from_fn(eig.vectors.nrows(), eig.vectors.ncols(), |i, j| {
        eig.vectors[(i, j)] * cx_real(T::one() / eig.values[j].sqrt())
    });
    Ok(&scaled * eig.vectors.adjoint())
}

/// Coefficients (lowest degree first) of the polynomial `p` of degree
/// `len − 1` with `p(x) = x^{-1/2}` at every node.
///
/// Solves the Vandermonde system by Newton divided differences on the sorted
/// nodes followed by conversion to the monomial basis.
pub fn vandermonde_inverse_sqrt_coeffs<T: Real>(eigs: &[T], tol: &Tolerances<T>) -> Result<Vec<T>> {
    if eigs.is_empty() {
        return Err(UepError::InvalidInput("no interpolation nodes".into()));
    }
    let mut nodes = eigs.to_vec();
    if let Some(bad) = nodes.iter().find(|x| !(x.is_finite() && **x > T::zero())) {
        return Err(UepError::InvalidInput(format!("node {bad} is not strictly positive")));
    }
    nodes.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    for w in nodes.windows(2) {
        if w[1] - w[0] <= tol.degenerate_gap {
            return Err(UepError::InvalidInput(format!(
                "nodes {} and {} are not distinct",
                w[0], w[1]
            )));
        }
    }
    let n = nodes.len();
    let mut c: Vec<T> = nodes.iter().map(|x| T::one() / x.sqrt()).collect();
    for k in 0..n - 1 {
        for i in (k + 1..n).rev() {
            c[i] = (c[i] - c[i - 1]) / (nodes[i] - nodes[i - k - 1]);
        }
    }
    for k in (0..n - 1).rev() {
        for i in k..n - 1 {
            let next = c[i + 1];
            c[i] -= nodes[k] * next;
        }
    }
    Ok(c)
}

/// `Σ c_k H^k` by Horner's rule, for real coefficients.
pub fn evaluate_real_polynomial_at<T: Real>(coeffs: &[T], h: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let n = h.nrows();
    let mut acc = ComplexMatrix::<T>::zeros(n, n);
    for c in coeffs.iter().rev() {
        acc = h * acc;
        for i in 0..n {
            acc[(i, i)] += cx_real(*c);
        }
    }
    acc
}

/// Inverse square roots of several Hermitian positive definite matrices, all
/// computed from one interpolating polynomial through the union of their
/// spectra. Eigenvalues closer than `degenerate_gap` (after normalising the
/// largest to one) are merged into a single node.
pub fn vandermonde_inverse_sqrt<T: Real>(
    matrices: &[&ComplexMatrix<T>],
    tol: &Tolerances<T>,
) -> Result<Vec<ComplexMatrix<T>>> {
    let mut spectrum = Vec::new();
    for h in matrices {
        spectrum.extend(hermitian_eigendecomposition(h, tol)?.values);
    }
    let scale = spectrum.iter().copied().fold(T::zero(), |a, b| a.max(b));
    if scale <= T::zero() {
        return Err(UepError::NotPositiveDefinite(0.0));
    }
    let mut nodes: Vec<T> = spectrum.iter().map(|x| *x / scale).collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    if nodes[0] <= tol.rank_rel {
        return Err(UepError::NotPositiveDefinite(nodes[0].as_f64()));
    }
    let mut merged: Vec<T> = Vec::with_capacity(nodes.len());
    let mut cluster: Vec<T> = Vec::new();
    for x in nodes {
        if let Some(&last) = cluster.last() {
            if x - last > tol.degenerate_gap {
                merged.push(mean(&cluster));
                cluster.clear();
            }
        }
        cluster.push(x);
    }
    merged.push(mean(&cluster));
    let coeffs = vandermonde_inverse_sqrt_coeffs(&merged, tol)?;
    let inv_scale = cx_real(T::one() / scale);
    let back = cx_real(T::one() / scale.sqrt());
    Ok(matrices
        .iter()
        .map(|h| evaluate_real_polynomial_at(&coeffs, &(*h * inv_scale)) * back)
        .collect())
}

fn mean<T: Real>(xs: &[T]) -> T {
    xs.iter().copied().fold(T::zero(), |a, b| a + b) / T::lit(xs.len() as f64)
}

/// Singular values in descending order, `min(rows, cols)` of them.
pub fn singular_values<T: Real>(m: &ComplexMatrix<T>) -> Result<Vec<T>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    let svd = svd_checked(m.clone(), false, false)?;
    let mut s: Vec<T> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    Ok(s)
}

/// `|det M|²` together with the singular-value ratio used to decide singularity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeterminantReport<T: Real> {
    pub magnitude_sq: T,
    /// `σ_min / σ_max`, zero for the zero matrix.
    pub sigma_ratio: T,
}

impl<T: Real> DeterminantReport<T> {
    pub fn is_singular(&self, tol: &Tolerances<T>) -> bool {
        self.sigma_ratio <= tol.rank_rel
    }
}

pub fn determinant_magnitude_sq<T: Real>(m: &ComplexMatrix<T>) -> Result<DeterminantReport<T>> {
    if !m.is_square() {
        return Err(UepError::ShapeMismatch(format!(
            "determinant needs a square matrix, got {:?}",
            m.shape()
        )));
    }
    let det = m.clone().lu().determinant();
    Ok(DeterminantReport {
        magnitude_sq: det.modulus_squared(),
        sigma_ratio: sigma_ratio(m)?,
    })
}

/// `σ_min / σ_max` of a square matrix (zero if the matrix vanishes).
pub fn sigma_ratio<T: Real>(m: &ComplexMatrix<T>) -> Result<T> {
    let s = singular_values(m)?;
    match (s.first(), s.last()) {
        (Some(&max), Some(&min)) if max > T::zero() => Ok(min / max),
        _ => Ok(T::zero()),
    }
}

pub fn is_numerically_invertible<T: Real>(m: &ComplexMatrix<T>, tol: &Tolerances<T>) -> Result<bool> {
    Ok(m.is_square() && sigma_ratio(m)? > tol.rank_rel)
}

/// Column-major vectorisation.
pub(crate) fn vectorize<T: Real>(m: &ComplexMatrix<T>) -> DVector<Cx<T>> {
    DVector::from_column_slice(m.as_slice())
}

pub(crate) fn unvectorize<T: Real>(v: &[Cx<T>], rows: usize, cols: usize) -> ComplexMatrix<T> {
    DMatrix::from_column_slice(rows, cols, v)
}
