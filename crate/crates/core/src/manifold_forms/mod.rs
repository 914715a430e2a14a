//! The model of M = ℝⁿ and of its odd tangent bundle ΠTM: scalar and vector fields,
//! differential forms as functions on ΠTM, and derivations of Ω*.

pub mod derivation;
pub mod form;
pub mod maps;
pub mod polynomial;
pub mod scalar;
pub mod vector;

pub use derivation::{apply_derivation, decompose_derivation, graded_bracket, PiTDerivation};
pub use form::{contract, exterior_d, lie_derivative, wedge, DifferentialForm};
pub use maps::{diagonal_pullback, i_pullback, pi_pullback, SuperFunction11};
pub use polynomial::Polynomial;
pub use scalar::{FnOracle, ScalarField};
pub use vector::VectorField;
