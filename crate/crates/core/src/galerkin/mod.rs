//! Fourier–Galerkin discretization of ü = −∇V(u, λ) on 2π-periodic loops,
//! with a Newton solver and amplitude continuation toward infinity.

mod continuation;
mod fourier;
mod residual;
mod solver;
mod transform;

pub use continuation::{
    active_modes, continue_branch, continue_to_infinity, energy_variation, kernel_directions,
    minimal_period, minimal_period_divisor, spectral_tail, write_csv, Branch, BranchFailure,
    BranchPoint, ContinuationOptions,
};
pub use fourier::FourierLoop;
pub use residual::{jacobian, residual, residual_with_nodes, Evaluator};
pub use solver::{newton_solve, newton_solve_report, solve_pinned, SolveReport, SolverOptions};
pub use transform::{default_nodes, Transform};
