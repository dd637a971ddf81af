//! Unit-disk experiments and the single-solve driver.

pub mod bessel;
mod experiments;
pub mod manufactured;
mod pipeline;

pub use experiments::{
    log_log_slope, parse_field_spec, run_compare_robin, run_eigen_convergence,
    run_poisson_convergence, run_single_solve, ConvergenceRow, EigenRow, Experiment,
    ExperimentConfig, RobinRow, SingleSolveOutcome, TPolicy,
};
pub use pipeline::{certify_spd, Discretization, SpdCertificate};
