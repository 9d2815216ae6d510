//! Rearrangement calculus on uniform grids: polarization, Schwarz
//! symmetrization, generalized Dirichlet functionals, sampled inequality
//! verdicts and a projected gradient flow for constrained minimization.

pub mod error;
pub mod functional;
pub mod grid;
pub mod inequalities;
pub mod io;
pub mod minimize;
pub mod rearrange;
pub mod report;
pub mod sum;

pub use error::{Error, Result};
pub use functional::{
    audit_coupling, audit_integrand, evaluate_constraint, evaluate_coupling, evaluate_j, ConstraintDensity,
    Coupling, Integrand, IntegrandFlags, Sampler,
};
pub use grid::{
    distribution_function, gradient_norm, lp_distance, lp_norm, measure, reflect, sobolev_seminorm, Grid,
    GridFunction, HalfSpace, Measurement, SignedField,
};
pub use rearrange::{
    halfspace_sequence, polarization_iterate, polarize, schwarz_symmetrize, HalfSpaceSequence, IterateOptions,
    IterationTrace, Schedule, Strategy,
};
pub use report::{Check, Report, Verdict};
