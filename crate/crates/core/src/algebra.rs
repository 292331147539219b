//! Unital matrix sub-algebras of `C^{d×d}` given by a spanning basis.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, UepError};
use crate::linalg::{self, check_finite, ComplexMatrix, Tolerances};
use crate::scalar::{cx_real, Cx, Real};

/// How an algebra was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgebraKind {
    /// All of `C^{d×d}`.
    Full,
    /// `{M ⊗ I_b : M ∈ C^{a×a}}` on dimension `a·b`.
    Factor { a: usize, b: usize },
    /// A user-supplied span.
    Span,
}

/// A complex sub-algebra of `C^{d×d}` represented by a linearly independent basis.
#[derive(Debug, Clone)]
pub struct MatrixAlgebra<T: Real> {
    dim: usize,
    kind: AlgebraKind,
    basis: Vec<ComplexMatrix<T>>,
    /// Orthonormal columns spanning the vectorised basis (`d² × k`).
    frame: DMatrix<Cx<T>>,
}

/// Closure properties of a candidate algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlgebraReport {
    pub unital: bool,
    pub multiplicatively_closed: bool,
    pub star_closed: bool,
}

impl AlgebraReport {
    /// Unitality and multiplicative closure are what the unitary extraction needs.
    pub fn is_usable(&self) -> bool {
        self.unital && self.multiplicatively_closed
    }
}

fn matrix_unit<T: Real>(d: usize, j: usize, k: usize) -> ComplexMatrix<T> {
    let mut e = ComplexMatrix::zeros(d, d);
    e[(j, k)] = cx_real(T::one());
    e
}

/// Normalised vectorisations of mutually orthogonal basis matrices.
fn orthogonal_frame<T: Real>(basis: &[ComplexMatrix<T>]) -> DMatrix<Cx<T>> {
    let columns: Vec<DVector<Cx<T>>> = basis
        .iter()
        .map(|m| {
            let v = linalg::vectorize(m);
            let n = v.norm();
            v / cx_real(n)
        })
        .collect();
    DMatrix::from_columns(&columns)
}

/// The full matrix algebra with the `d²` matrix units as basis.
pub fn full_algebra<T: Real>(d: usize) -> Result<MatrixAlgebra<T>> {
    if d == 0 {
        return Err(UepError::InvalidInput("algebra dimension must be positive".into()));
    }
    let basis: Vec<_> = (0..d)
        .flat_map(|j| (0..d).map(move |k| (j, k)))
        .map(|(j, k)| matrix_unit(d, j, k))
        .collect();
    let frame = orthogonal_frame(&basis);
    Ok(MatrixAlgebra {
        dim: d,
        kind: AlgebraKind::Full,
        basis,
        frame,
    })
}

/// The algebra `{M ⊗ I_b}` on dimension `a·b`, with basis `E_jk ⊗ I_b`.
pub fn factor_algebra<T: Real>(a: usize, b: usize) -> Result<MatrixAlgebra<T>> {
    if a == 0 || b == 0 {
        return Err(UepError::InvalidInput(format!(
            "factor algebra needs positive factors, got a={a}, b={b}"
        )));
    }
    let id_b = linalg::identity::<T>(b);
    let basis: Vec<_> = (0..a)
        .flat_map(|j| (0..a).map(move |k| (j, k)))
        .map(|(j, k)| matrix_unit::<T>(a, j, k).kronecker(&id_b))
        .collect();
    let frame = orthogonal_frame(&basis);
    Ok(MatrixAlgebra {
        dim: a * b,
        kind: AlgebraKind::Factor { a, b },
        basis,
        frame,
    })
}

impl<T: Real> MatrixAlgebra<T> {
    /// Wraps an arbitrary spanning set. Linear independence is required; the
    /// algebra axioms are checked separately by [`verify_algebra`].
    pub fn from_span(d: usize, basis: Vec<ComplexMatrix<T>>, tol: &Tolerances<T>) -> Result<Self> {
        if d == 0 || basis.is_empty() {
            return Err(UepError::InvalidAlgebra("empty span".into()));
        }
        for (i, m) in basis.iter().enumerate() {
            if m.shape() != (d, d) {
                return Err(UepError::InvalidAlgebra(format!(
                    "basis element {i} has shape {:?}, expected ({d}, {d})",
                    m.shape()
                )));
            }
            check_finite(m)?;
        }
        if basis.len() > d * d {
            return Err(UepError::InvalidAlgebra(format!(
                "{} basis elements cannot be independent in dimension {d}",
                basis.len()
            )));
        }
        let columns: Vec<_> = basis.iter().map(linalg::vectorize).collect();
        let stacked = DMatrix::from_columns(&columns);
        let svd = stacked
            .try_svd(true, false, T::default_epsilon(), 10_000)
            .ok_or(UepError::NoConvergence("span orthonormalisation"))?;
        let s = &svd.singular_values;
        let max = s.iter().copied().fold(T::zero(), |a, b| a.max(b));
        let min = s.iter().copied().fold(max, |a, b| a.min(b));
        if max == T::zero() || min <= tol.rank_rel * max {
            return Err(UepError::InvalidAlgebra(
                "basis matrices are linearly dependent".into(),
            ));
        }
        let frame = svd.u.expect("requested left singular vectors");
        Ok(Self {
            dim: d,
            kind: AlgebraKind::Span,
            basis,
            frame,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> AlgebraKind {
        self.kind
    }

    pub fn basis(&self) -> &[ComplexMatrix<T>] {
        &self.basis
    }

    /// Complex dimension of the algebra.
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Orthogonal projection of `m` onto the span.
    pub fn project(&self, m: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        let v = linalg::vectorize(m);
        let p = &self.frame * (self.frame.adjoint() * v);
        linalg::unvectorize(p.as_slice(), self.dim, self.dim)
    }

    /// Frobenius distance from `m` to the span.
    pub fn membership_residual(&self, m: &ComplexMatrix<T>) -> T {
        (m - self.project(m)).norm()
    }

    /// Membership within `residual_abs · max(1, ‖m‖_F)`.
    pub fn contains(&self, m: &ComplexMatrix<T>, tol: &Tolerances<T>) -> bool {
        m.shape() == (self.dim, self.dim)
            && self.membership_residual(m) <= tol.residual_bound(m.norm())
    }

    /// Real-linear constraints `C · [Re vec(M); Im vec(M)] = 0` (column-major
    /// `vec`) that hold exactly when `M` lies in the span. Empty for the full
    /// algebra.
    pub fn membership_constraints(&self, tol: &Tolerances<T>) -> Result<DMatrix<T>> {
        let n = self.dim * self.dim;
        if self.basis.len() == n {
            return Ok(DMatrix::zeros(0, 2 * n));
        }
        // Orthonormal complement w_1..w_r of the span: M ∈ span iff w† vec(M) = 0.
        let complement = linalg::nullspace_generic(&self.frame.adjoint(), tol.rank_rel)?;
        let mut c = DMatrix::zeros(2 * complement.len(), 2 * n);
        for (r, w) in complement.iter().enumerate() {
            for (p, z) in w.iter().enumerate() {
                // Re(w† v) = Re w · Re v + Im w · Im v
                // Im(w† v) = Re w · Im v − Im w · Re v
                c[(2 * r, p)] = z.re;
                c[(2 * r, n + p)] = z.im;
                c[(2 * r + 1, p)] = -z.im;
                c[(2 * r + 1, n + p)] = z.re;
            }
        }
        Ok(c)
    }
}

/// Checks unitality, multiplicative closure and closure under adjoints, each
/// through the projection residual onto the span.
pub fn verify_algebra<T: Real>(g: &MatrixAlgebra<T>, tol: &Tolerances<T>) -> AlgebraReport {
    let unital = g.contains(&linalg::identity(g.dim), tol);
    let multiplicatively_closed = g
        .basis
        .iter()
        .all(|e| g.basis.iter().all(|f| g.contains(&(e * f), tol)));
    let star_closed = g.basis.iter().all(|e| g.contains(&e.adjoint(), tol));
    AlgebraReport {
        unital,
        multiplicatively_closed,
        star_closed,
    }
}

/// Real-linear membership constraints of `g` (see [`MatrixAlgebra::membership_constraints`]).
pub fn membership_constraints<T: Real>(g: &MatrixAlgebra<T>, tol: &Tolerances<T>) -> Result<DMatrix<T>> {
    g.membership_constraints(tol)
}
