//! Simultaneous unitary equivalence of matrix pairs under algebra constraints.
//!
//! Given pairs `(X_i, Y_i)` and unital *-algebras `G1`, `G2`, decide whether
//! unitaries `U ∈ G1`, `V ∈ G2` exist with `U X_i V† = Y_i` for every `i`.
//! The decision linearises the problem, samples the solution space for an
//! invertible element and extracts the unitary parts by polar decomposition.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the `*64` and `*32`
//! aliases below fix the scalar type.

pub mod algebra;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod quantum;
pub mod scalar;
pub mod solver;

pub use algebra::{factor_algebra, full_algebra, verify_algebra, AlgebraKind, AlgebraReport, MatrixAlgebra};
pub use error::{Result, UepError};
pub use linalg::{ComplexMatrix, MatrixPolynomial, Tolerances};
pub use quantum::{
    generic_mixed_lu, simultaneous_lu_pure, unilocal_mixed_equivalence, DensityOperator, PhaseGrid, PureState,
};
pub use scalar::{Cx, Real};
pub use solver::{
    decide_invertible_equivalence, decide_uep, singular_value_prefilter, Certainty, SamplerConfig, UepInstance,
    UepVerdict, Verdict,
};

#[allow(non_camel_case_types)]
pub type c64 = Cx<f64>;
#[allow(non_camel_case_types)]
pub type c32 = Cx<f32>;
pub type ComplexMatrix64 = ComplexMatrix<f64>;
pub type ComplexMatrix32 = ComplexMatrix<f32>;
pub type Tolerances64 = Tolerances<f64>;
pub type Tolerances32 = Tolerances<f32>;
pub type MatrixAlgebra64 = MatrixAlgebra<f64>;
pub type MatrixAlgebra32 = MatrixAlgebra<f32>;
pub type UepInstance64 = UepInstance<f64>;
pub type UepInstance32 = UepInstance<f32>;
pub type UepVerdict64 = UepVerdict<f64>;
pub type UepVerdict32 = UepVerdict<f32>;
pub type PureState64 = PureState<f64>;
pub type DensityOperator64 = DensityOperator<f64>;
