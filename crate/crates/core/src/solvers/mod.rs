//! Krylov solvers for the assembled operators.

mod cg;
mod eigen;
mod gmres;

pub use cg::{cg_solve, CgConfig, IterativeOutcome, Preconditioner};
pub use eigen::{
    smallest_eigenpairs, smallest_eigenpairs_with, EigenConfig, EigenPair, EigenResult, MassUsed,
};
pub use gmres::{gmres_solve, gmres_solve_with, BlockTriangular, GmresConfig};

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
