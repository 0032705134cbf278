//! Orthogonally additive homogeneous polynomials on matrix algebras and on
//! finite-rank operators.
//!
//! Numeric code is generic over the real scalar ([`scalar::Real`], for
//! `f32` and `f64`) and works with complex matrices; the free-algebra
//! identities in [`ncpoly`] are exact, over big integers and rationals.

pub mod approx_id;
pub mod error;
pub mod finite_rank;
pub mod matrix;
pub mod matrix_rep;
pub mod multilinear;
pub mod ncpoly;
pub mod random;
pub mod report;
pub mod scalar;

pub use error::{Error, Result};
pub use report::Verdict;
pub use scalar::Real;

pub type ComplexMatrix64 = matrix::ComplexMatrix<f64>;
pub type ComplexMatrix32 = matrix::ComplexMatrix<f32>;
pub type LinearMap64 = matrix::LinearMap<f64>;
pub type LinearMap32 = matrix::LinearMap<f32>;
pub type HomogeneousPolynomial64 = multilinear::HomogeneousPolynomial<f64>;
pub type HomogeneousPolynomial32 = multilinear::HomogeneousPolynomial<f32>;
pub type SymmetricMultilinearForm64 = multilinear::SymmetricMultilinearForm<f64>;
pub type RankOneOperator64 = finite_rank::RankOneOperator<f64>;
pub type FiniteRankOperator64 = finite_rank::FiniteRankOperator<f64>;
pub type BiorthogonalSystem64 = finite_rank::BiorthogonalSystem<f64>;
pub type IntPoly = ncpoly::IntPoly;
pub type RatPoly = ncpoly::RatPoly;
