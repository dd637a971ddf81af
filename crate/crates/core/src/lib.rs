//! Mesh-free Poisson and Laplace–Beltrami eigen solvers on point clouds.
//!
//! Dirichlet data is enforced through a volume constraint: every sample
//! within `2√t` of the boundary is pinned to the prescribed value, and the
//! remaining samples satisfy the kernel-integral discretization of the
//! Laplacian. The crate is organized bottom-up:
//!
//! - [`pointcloud`]: the sample data model, text I/O, neighbor search and
//!   the deterministic unit-disk sampler.
//! - [`geometry`]: tangent frames, Voronoi volume weights and boundary
//!   measure weights.
//! - [`kernel`]: the compactly supported profile, its antiderivative and
//!   bandwidth selection.
//! - [`operator`]: domain partition, sparse assembly (volume-constrained and
//!   Robin variants), the interpolant and diagnostics.
//! - [`solvers`]: preconditioned CG, restarted GMRES and a shift-invert
//!   block Krylov eigensolver.
//! - [`harness`]: the unit-disk experiments and the single-solve driver
//!   behind the `pimvc` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod harness;
pub mod kernel;
pub mod operator;
pub mod pointcloud;
pub mod solvers;

pub use error::{PimError, Result};
pub use kernel::{BandwidthPolicy, KernelSpec, Profile};
pub use operator::{DomainPartition, SolveReport, SourceField, SparseOperator};
pub use pointcloud::{CloudFormat, NeighborIndex, PointCloud, SamplingStats};
pub use solvers::{CgConfig, EigenPair, EigenResult, Preconditioner};
