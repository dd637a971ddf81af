//! Shared stages: weights, bandwidth, partition, assembly and solves.

use crate::error::{PimError, Result, StageExt};
use crate::geometry::{ensure_weights, DEFAULT_NEIGHBORS};
use crate::kernel::{select_t, support_warning, BandwidthPolicy, KernelSpec};
use crate::operator::{
    assemble_load, assemble_mass, assemble_robin, assemble_stiffness, partition_domain,
    DomainPartition, SolveReport, SourceField, SparseOperator,
};
use crate::pointcloud::{estimate_fill_distance, NeighborIndex, PointCloud, SamplingStats};
use crate::solvers::{
    cg_solve, gmres_solve_with, smallest_eigenpairs_with, BlockTriangular, CgConfig, EigenConfig,
    EigenResult, GmresConfig,
};

/// A weighted cloud with its bandwidth and partition fixed.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub cloud: PointCloud,
    pub index: NeighborIndex,
    pub stats: SamplingStats,
    pub kernel: KernelSpec,
    pub partition: DomainPartition,
    pub warnings: Vec<String>,
}

impl Discretization {
    /// Estimates missing weights, selects `t` and partitions the cloud.
    pub fn prepare(
        mut cloud: PointCloud,
        policy: BandwidthPolicy,
        m_neighbors: Option<usize>,
    ) -> Result<Self> {
        let index = NeighborIndex::build(&cloud);
        let stats = estimate_fill_distance(&cloud, &index).stage("sampling statistics")?;
        ensure_weights(&mut cloud, &index, m_neighbors.unwrap_or(DEFAULT_NEIGHBORS))
            .stage("weights")?;
        let t = select_t(&stats, policy).stage("bandwidth")?;
        let kernel = KernelSpec::new(t, cloud.intrinsic_dim()).stage("bandwidth")?;
        let partition = partition_domain(&cloud, &index, t).stage("partition")?;
        let warnings = support_warning(&cloud, &index, t).into_iter().collect();
        Ok(Discretization {
            cloud,
            index,
            stats,
            kernel,
            partition,
            warnings,
        })
    }

    pub fn t(&self) -> f64 {
        self.kernel.t()
    }

    pub fn stiffness(&self) -> Result<SparseOperator> {
        assemble_stiffness(&self.cloud, &self.index, &self.kernel, &self.partition)
            .stage("stiffness assembly")
    }

    pub fn mass(&self) -> Result<SparseOperator> {
        assemble_mass(&self.cloud, &self.index, &self.kernel, &self.partition)
            .stage("mass assembly")
    }

    pub fn load(&self, source: &SourceField) -> Result<Vec<f64>> {
        assemble_load(
            &self.cloud,
            &self.index,
            &self.kernel,
            &self.partition,
            source,
        )
        .stage("load assembly")
    }

    /// Volume-constrained Poisson solve; `u = g` on the collar.
    pub fn solve_poisson(
        &self,
        stiffness: &SparseOperator,
        source: &SourceField,
        cg: &CgConfig,
    ) -> Result<SolveReport> {
        let b = self.load(source)?;
        let out = cg_solve(stiffness, &b, cg).stage("linear solve")?;
        let g = source.g.sample_values(&self.cloud, "constraint g")?;
        Ok(SolveReport {
            solution: self.partition.extend(&out.x, &g),
            iterations: out.iterations,
            residual: out.residual,
            residual_history: out.residual_history,
            interior_count: self.partition.interior_count(),
            constrained_count: self.partition.constrained_count(),
        })
    }

    /// Robin-penalty solve over all samples (no collar).
    pub fn solve_robin(
        &self,
        beta: f64,
        source: &SourceField,
        gmres: &GmresConfig,
    ) -> Result<SolveReport> {
        let system =
            assemble_robin(&self.cloud, &self.index, &self.kernel, beta).stage("robin assembly")?;
        let b = system
            .rhs(&self.cloud, &self.index, &self.kernel, source)
            .stage("robin assembly")?;
        let pre = BlockTriangular::new(&system.matrix, &self.cloud.boundary_ids())
            .stage("robin solve")?;
        let out = gmres_solve_with(&system.matrix, &b, gmres, &pre).stage("robin solve")?;
        Ok(SolveReport {
            solution: out.x,
            iterations: out.iterations,
            residual: out.residual,
            residual_history: out.residual_history,
            interior_count: self.cloud.len(),
            constrained_count: 0,
        })
    }

    /// Smallest Dirichlet eigenpairs on the interior block.
    pub fn eigenpairs(
        &self,
        stiffness: &SparseOperator,
        m: usize,
        cfg: &EigenConfig,
    ) -> Result<EigenResult> {
        let mass = self.mass()?;
        smallest_eigenpairs_with(stiffness, &mass, m, cfg).stage("eigensolve")
    }
}

/// Evidence that the interior stiffness block is positive definite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpdCertificate {
    /// Smallest Ritz value of `A` (shift-invert, `B = I`).
    pub min_ritz: f64,
    /// Symmetric, irreducibly diagonally dominant with positive diagonal.
    pub diagonally_dominant: bool,
    pub symmetry_defect: f64,
}

impl SpdCertificate {
    pub fn holds(&self) -> bool {
        self.min_ritz > 0.0 && self.symmetry_defect <= 1e-12
    }
}

pub fn certify_spd(a: &SparseOperator) -> Result<SpdCertificate> {
    let symmetry_defect = a.symmetry_defect();
    let diagonally_dominant = a.diagonal_dominance_certificate();
    let id = SparseOperator::identity(a.nrows());
    let cfg = EigenConfig {
        tol: 1e-6 * a.diagonal().iter().fold(0.0f64, |m, d| m.max(*d)),
        block_size: 1,
        ..Default::default()
    };
    let min_ritz = match smallest_eigenpairs_with(a, &id, 1, &cfg) {
        Ok(r) => r.pairs[0].value,
        Err(e) => match e.root() {
            PimError::Indefinite(_) => f64::NEG_INFINITY,
            _ => return Err(e.in_stage("spd certificate")),
        },
    };
    Ok(SpdCertificate {
        min_ritz,
        diagonally_dominant,
        symmetry_defect,
    })
}
