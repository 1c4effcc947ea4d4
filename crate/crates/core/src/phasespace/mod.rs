//! Fields on six-dimensional phase space, torsions, algebra axioms,
//! symplectic compatibility and spectra.

mod checks;
mod field;
mod torsion;

pub use checks::{
    algebra_axiom_check, canonical_j, eigen_spectrum, random_polynomial, random_unit_vector, symplectic_compat,
    AlgebraReport, SpectralData, CANONICAL_VARS,
};
pub use field::{
    lift, seed, Composition, ExprFields, ExprOperator, FieldScalar, LinearCombination, OperatorField, PhaseEval,
    PhaseFunction, PhasePoint, ScalarField, VectorField, DIM, SINGULAR_EPS,
};
pub use torsion::{
    haantjes_residual, haantjes_scaled, haantjes_torsion, lie_bracket, nijenhuis_residual, nijenhuis_torsion, Tensor3,
};
