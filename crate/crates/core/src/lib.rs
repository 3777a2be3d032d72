//! Deformation quantization on finite fermionic phase spaces.
//!
//! Elements live in a Grassmann algebra over named odd generators. A
//! symmetric form `𝒜` defines the Moyal-type star product; spectral
//! projectors, reduced states and entropies are computed inside that
//! algebra and cross-checked against Fock-space matrices.

pub mod brackets;
pub mod expr;
pub mod fock;
pub mod grassmann;
pub mod scenario;
pub mod scalar;
pub mod spectral;
pub mod star;
pub mod states;
pub mod verify;

pub use brackets::{
    classical_time_derivative, classify_constraints, constraint_matrix, dirac_bracket, poisson_bracket,
    quantization_form, BracketContext, BracketError, BracketTensor, Classification, ConstraintMatrix,
    ConstraintSet, DiracBracket,
};
pub use expr::{evaluate, format_element, parse_expression, EvalError, Expr, ParseError, Params};
pub use fock::{
    annihilation, creation, holomorphic_transform, inverse_holomorphic_transform, weyl_quantize,
    wigner_operator_map, CliffordRep, FockError, FockMatrix, HolomorphicPairing,
};
pub use grassmann::{GeneratorSet, GrassmannElement, GrassmannError, Monomial, ParityClass, Side};
pub use scalar::{Cx, Scalar};
pub use scenario::{
    run_scenario, run_sweep, ConfigError, Link, Pipeline, Quantity, ScenarioConfig, ScenarioError, ScenarioReport,
    SweepSpec,
};
pub use spectral::{
    fourier_dirichlet, mult_operator, spectral_decompose, star_genvalue_solve, AlgebraOperator, OperatorSide,
    SolveOptions, SpectralError, SpectralPair, SpectralResolution,
};
pub use star::{BracketMode, StarError, StarProduct, SymmetricForm};
pub use states::{
    closed_form_ep, closed_form_p, entanglement_entropy, entropy_abs, h_pm, partial_trace, renyi_entropy,
    state_spectrum, trace, Bipartition, EntropyMethod, EntropyReport, StateError, StateLabel, WignerState,
};

pub type Element = GrassmannElement<f64>;
pub type Form = SymmetricForm<f64>;
pub type Star = StarProduct<f64>;
pub type Tensor = BracketTensor<f64>;
pub type Complex64 = Cx<f64>;
pub use verify::{verify_suite, CheckResult, Grid, Tolerances, VerifyOptions, VerifyReport};
