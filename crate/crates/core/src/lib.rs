//! Caputo fractional differential equations solved two independent ways.
//!
//! The crate discretizes the Caputo derivative with a substitution quadrature
//! and with an integration-by-parts quadrature, solves quasilinear equations
//!
//! ```text
//! Σ_i K_i(x, u) D^{α_i} u(x) + f(x) = g(u(x)),   0 ≤ x ≤ T
//! ```
//!
//! with either representation, and trusts a numerical solution only when the
//! two agree ([`dual::dual_solve`]).
//!
//! Everything numerical is generic over [`Scalar`] (`f32` or `f64`). The
//! `*64` and `*32` aliases below fix the precision.

pub mod caputo;
pub mod dual;
pub mod expr;
pub mod linalg;
pub mod scalar;
pub mod solver;
pub mod special;
pub mod stencils;

pub use caputo::{
    caputo_byparts, caputo_power, caputo_substitution, caputo_taylor, tan_taylor_coeffs, AnalyticFunction, CaputoError,
    FractionalOrder, GridFunction, MethodKind,
};
pub use dual::{
    compare_to_exact, convergence_study, default_threshold, dual_solve, inter_method_difference,
    validity_against_exact, ConvergenceTable, DualReport, ErrorMetrics, FailedMethod, StudyTarget, Validity, Verdict,
};
pub use expr::{EvalError, Expr, ParseError};
pub use scalar::Scalar;
pub use solver::{
    assemble_residual, collocation_layout, solve, EquationSpec, Solution, SolveError, SolverConfig, TermSpec,
};
pub use special::{beta, gamma, ln_gamma, SpecialError};

pub type Expr64 = Expr<f64>;
pub type FractionalOrder64 = FractionalOrder<f64>;
pub type GridFunction64 = GridFunction<f64>;
pub type TermSpec64 = TermSpec<f64>;
pub type EquationSpec64 = EquationSpec<f64>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type Solution64 = Solution<f64>;
pub type DualReport64 = DualReport<f64>;

pub type Expr32 = Expr<f32>;
pub type GridFunction32 = GridFunction<f32>;
pub type EquationSpec32 = EquationSpec<f32>;
pub type SolverConfig32 = SolverConfig<f32>;
pub type Solution32 = Solution<f32>;
