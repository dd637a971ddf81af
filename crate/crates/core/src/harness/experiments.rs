use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::bessel::disk_dirichlet_modes;
use super::manufactured::{exact_u, source_f};
use super::pipeline::{certify_spd, Discretization};
use crate::error::{PimError, Result, StageExt};
use crate::kernel::{BandwidthPolicy, DEFAULT_C_B};
use crate::operator::{
    discrete_l2_error, weighted_l2_error, Field, SolveReport, SourceField, SparseOperator,
};
use crate::pointcloud::{load_cloud, sample_unit_disk, CloudFormat, PointCloud};
use crate::solvers::{cg_solve, CgConfig, EigenConfig, GmresConfig, MassUsed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    #[serde(alias = "poisson_convergence")]
    PoissonConvergence,
    #[serde(alias = "eigen_convergence")]
    EigenConvergence,
    #[serde(alias = "compare_robin")]
    CompareRobin,
    #[serde(alias = "single_solve", alias = "solve")]
    SingleSolve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TPolicy {
    Balance,
    Fixed,
}

impl FromStr for TPolicy {
    type Err = PimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "balance" | "theorem_balance" => Ok(TPolicy::Balance),
            "fixed" => Ok(TPolicy::Fixed),
            _ => Err(PimError::Parameter(format!("unknown t policy {s:?}"))),
        }
    }
}

/// Settings shared by all experiments. Keys mirror the CLI flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub sizes: Vec<usize>,
    pub seed: u64,
    pub t_policy: TPolicy,
    pub t: Option<f64>,
    pub c_b: f64,
    pub beta: f64,
    pub m_eigs: usize,
    pub out: PathBuf,
    pub cloud: Option<PathBuf>,
    /// Manufactured solution for the disk experiments: `disk-cos` or `zero`.
    pub exact: String,
    /// Source term for `solve`: `zero`, `const:<c>`, `disk-cos`, `disk-source`.
    pub f: String,
    /// Constraint data for `solve`, same grammar as `f`.
    pub g: String,
    pub neighbors: usize,
    pub cg_tol: f64,
    pub cg_max_iter: Option<usize>,
    pub gmres_tol: f64,
    pub gmres_restart: usize,
    pub eig_tol: f64,
    pub certify: bool,
    pub dump_history: bool,
    pub dump_matrices: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: Experiment::PoissonConvergence,
            sizes: vec![684, 2610, 10191, 40269],
            seed: 1,
            t_policy: TPolicy::Balance,
            t: None,
            c_b: DEFAULT_C_B,
            beta: 1e-4,
            m_eigs: 10,
            out: PathBuf::from("out"),
            cloud: None,
            exact: "disk-cos".into(),
            f: "zero".into(),
            g: "zero".into(),
            neighbors: crate::geometry::DEFAULT_NEIGHBORS,
            cg_tol: 1e-10,
            cg_max_iter: None,
            gmres_tol: 1e-10,
            gmres_restart: 80,
            eig_tol: 1e-6,
            certify: true,
            dump_history: false,
            dump_matrices: false,
        }
    }
}

impl ExperimentConfig {
    pub fn for_experiment(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            ..Default::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| PimError::Parameter(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| PimError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn policy(&self) -> Result<BandwidthPolicy> {
        match self.t_policy {
            TPolicy::Balance => Ok(BandwidthPolicy::Balance { c_b: self.c_b }),
            TPolicy::Fixed => self
                .t
                .map(BandwidthPolicy::Fixed)
                .ok_or_else(|| PimError::Parameter("fixed t policy needs t".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment != Experiment::SingleSolve {
            if self.sizes.is_empty() {
                return Err(PimError::Parameter("sizes must not be empty".into()));
            }
            if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
                return Err(PimError::Parameter(
                    "sizes must be strictly ascending".into(),
                ));
            }
        }
        if self.experiment == Experiment::CompareRobin
            && !(self.beta > 0.0 && self.beta.is_finite())
        {
            return Err(PimError::Parameter("compare-robin needs beta > 0".into()));
        }
        if self.experiment == Experiment::EigenConvergence && !(1..=20).contains(&self.m_eigs) {
            return Err(PimError::Parameter(format!(
                "m_eigs must lie in 1..=20, got {}",
                self.m_eigs
            )));
        }
        if self.experiment == Experiment::SingleSolve && self.cloud.is_none() {
            return Err(PimError::Parameter("solve needs a cloud path".into()));
        }
        if self.t_policy == TPolicy::Balance && !(self.c_b > 0.0 && self.c_b.is_finite()) {
            return Err(PimError::Parameter(format!(
                "c_b must be positive, got {}",
                self.c_b
            )));
        }
        self.policy().map(|_| ())
    }

    fn cg(&self) -> CgConfig {
        CgConfig {
            tol: self.cg_tol,
            max_iter: self.cg_max_iter,
            ..Default::default()
        }
    }

    fn gmres(&self) -> GmresConfig {
        GmresConfig {
            tol: self.gmres_tol,
            restart: self.gmres_restart,
            ..Default::default()
        }
    }

    fn prepare_disk(&self, n: usize) -> Result<Discretization> {
        let cloud = sample_unit_disk(n, self.seed).stage("sampling")?;
        Discretization::prepare(cloud, self.policy()?, Some(self.neighbors))
    }

    fn ensure_out(&self) -> Result<()> {
        fs::create_dir_all(&self.out).map_err(|e| PimError::io(&self.out, e))
    }

    fn write(&self, name: &str, body: &str) -> Result<()> {
        let path = self.out.join(name);
        fs::write(&path, body).map_err(|e| PimError::io(&path, e))
    }
}

/// One row of the convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub t: f64,
    pub l2_error: f64,
    pub cg_iters: usize,
    pub interior_count: usize,
    pub constrained_count: usize,
    /// Smallest Ritz value of the interior stiffness block, when certified.
    pub min_ritz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobinRow {
    pub n: usize,
    pub h: f64,
    pub t: f64,
    pub vc_error: f64,
    pub robin_error: f64,
    pub vc_iters: usize,
    pub robin_iters: usize,
    pub min_ritz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenRow {
    pub n: usize,
    pub h: f64,
    pub t: f64,
    /// 1-based position in the ascending spectrum.
    pub index: usize,
    pub lambda: f64,
    pub lambda_exact: f64,
    pub rel_error: f64,
    pub residual: f64,
    pub mass: MassUsed,
    pub min_ritz: Option<f64>,
}

/// Least-squares slope of `log(error)` against `log(h)`.
pub fn log_log_slope(h: &[f64], err: &[f64]) -> f64 {
    let n = h.len().min(err.len()) as f64;
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

type Exact = fn(&[f64]) -> f64;

fn manufactured(cfg: &ExperimentConfig) -> Result<(SourceField, Exact)> {
    match cfg.exact.as_str() {
        "disk-cos" => Ok((
            SourceField::new(Field::func(source_f), Field::func(exact_u)),
            exact_u,
        )),
        "zero" => Ok((SourceField::zero(), |_| 0.0)),
        other => Err(PimError::Parameter(format!(
            "unknown manufactured solution {other:?}"
        ))),
    }
}

fn certificate(cfg: &ExperimentConfig, a: &SparseOperator) -> Result<Option<f64>> {
    if !cfg.certify {
        return Ok(None);
    }
    Ok(Some(certify_spd(a)?.min_ritz))
}

fn dump_history(cfg: &ExperimentConfig, name: &str, report: &SolveReport) -> Result<()> {
    if !cfg.dump_history {
        return Ok(());
    }
    let mut s = String::from("iteration,relative_residual\n");
    for (k, r) in report.residual_history.iter().enumerate() {
        writeln!(s, "{k},{r}").unwrap();
    }
    cfg.write(name, &s)
}

fn dump_matrix(cfg: &ExperimentConfig, name: &str, a: &SparseOperator) -> Result<()> {
    if !cfg.dump_matrices {
        return Ok(());
    }
    a.write_triplets(cfg.out.join(name))
}

fn header(cfg: &ExperimentConfig, title: &str) -> String {
    let mut s = format!("{title}\n");
    writeln!(s, "seed = {}", cfg.seed).unwrap();
    match cfg.t_policy {
        TPolicy::Balance => writeln!(s, "bandwidth = balance, c_b = {}", cfg.c_b).unwrap(),
        TPolicy::Fixed => {
            writeln!(s, "bandwidth = fixed, t = {}", cfg.t.unwrap_or(f64::NAN)).unwrap()
        }
    }
    s
}

fn note_warnings(report: &mut String, n: usize, d: &Discretization) {
    for w in &d.warnings {
        writeln!(report, "warning (n = {n}): {w}").unwrap();
    }
}

fn ritz_cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Volume-constrained solve of the manufactured problem for every size;
/// writes `convergence.csv` and `report.txt`.
pub fn run_poisson_convergence(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRow>> {
    cfg.validate()?;
    cfg.ensure_out()?;
    let (src, exact) = manufactured(cfg)?;
    let mut rows = Vec::new();
    let mut report = header(cfg, "poisson-convergence");
    for &n in &cfg.sizes {
        let d = cfg.prepare_disk(n)?;
        note_warnings(&mut report, n, &d);
        let a = d.stiffness()?;
        dump_matrix(cfg, &format!("stiffness_{n}.txt"), &a)?;
        let sol = d.solve_poisson(&a, &src, &cfg.cg())?;
        dump_history(cfg, &format!("history_{n}.csv"), &sol)?;
        let l2_error =
            discrete_l2_error(&sol.solution, exact, &d.cloud, &d.partition).stage("error norm")?;
        rows.push(ConvergenceRow {
            n: d.cloud.len(),
            h: d.stats.fill_distance,
            t: d.t(),
            l2_error,
            cg_iters: sol.iterations,
            interior_count: sol.interior_count,
            constrained_count: sol.constrained_count,
            min_ritz: certificate(cfg, &a)?,
        });
    }
    let mut csv =
        String::from("n,h,t,l2_error,cg_iters,interior_count,constrained_count,min_ritz\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.n,
            r.h,
            r.t,
            r.l2_error,
            r.cg_iters,
            r.interior_count,
            r.constrained_count,
            ritz_cell(r.min_ritz)
        )
        .unwrap();
    }
    cfg.write("convergence.csv", &csv)?;
    if rows.len() >= 2 {
        let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let e: Vec<f64> = rows.iter().map(|r| r.l2_error).collect();
        writeln!(report, "log-log slope = {}", log_log_slope(&h, &e)).unwrap();
    }
    cfg.write("report.txt", &report)?;
    Ok(rows)
}

/// Volume-constrained and Robin-penalty solves side by side; writes
/// `convergence.csv` and `report.txt`. The Robin error is measured over all
/// samples, the constrained one over the interior.
pub fn run_compare_robin(cfg: &ExperimentConfig) -> Result<Vec<RobinRow>> {
    cfg.validate()?;
    cfg.ensure_out()?;
    let (src, exact) = manufactured(cfg)?;
    let mut rows = Vec::new();
    let mut report = header(cfg, "compare-robin");
    writeln!(report, "beta = {}", cfg.beta).unwrap();
    for &n in &cfg.sizes {
        let d = cfg.prepare_disk(n)?;
        note_warnings(&mut report, n, &d);
        let a = d.stiffness()?;
        let vc = d.solve_poisson(&a, &src, &cfg.cg())?;
        let vc_error =
            discrete_l2_error(&vc.solution, exact, &d.cloud, &d.partition).stage("error norm")?;
        let robin = d.solve_robin(cfg.beta, &src, &cfg.gmres())?;
        dump_history(cfg, &format!("history_vc_{n}.csv"), &vc)?;
        dump_history(cfg, &format!("history_robin_{n}.csv"), &robin)?;
        let all: Vec<usize> = (0..d.cloud.len()).collect();
        let robin_error =
            weighted_l2_error(&robin.solution, exact, &d.cloud, &all).stage("error norm")?;
        rows.push(RobinRow {
            n: d.cloud.len(),
            h: d.stats.fill_distance,
            t: d.t(),
            vc_error,
            robin_error,
            vc_iters: vc.iterations,
            robin_iters: robin.iterations,
            min_ritz: certificate(cfg, &a)?,
        });
    }
    let mut csv = String::from("n,h,t,vc_error,robin_error,vc_iters,robin_iters,min_ritz\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.n,
            r.h,
            r.t,
            r.vc_error,
            r.robin_error,
            r.vc_iters,
            r.robin_iters,
            ritz_cell(r.min_ritz)
        )
        .unwrap();
    }
    cfg.write("convergence.csv", &csv)?;
    cfg.write("report.txt", &report)?;
    Ok(rows)
}

/// Smallest Dirichlet eigenvalues against the Bessel reference; writes
/// `eigen.csv` and `report.txt`.
pub fn run_eigen_convergence(cfg: &ExperimentConfig) -> Result<Vec<EigenRow>> {
    cfg.validate()?;
    cfg.ensure_out()?;
    let modes = disk_dirichlet_modes(cfg.m_eigs);
    let eig_cfg = EigenConfig {
        tol: cfg.eig_tol,
        seed: cfg.seed,
        ..Default::default()
    };
    let mut rows = Vec::new();
    let mut report = header(cfg, "eigen-convergence");
    for &n in &cfg.sizes {
        let d = cfg.prepare_disk(n)?;
        note_warnings(&mut report, n, &d);
        let a = d.stiffness()?;
        dump_matrix(cfg, &format!("stiffness_{n}.txt"), &a)?;
        if cfg.dump_matrices {
            dump_matrix(cfg, &format!("mass_{n}.txt"), &d.mass()?)?;
        }
        let res = d.eigenpairs(&a, cfg.m_eigs, &eig_cfg)?;
        let min_ritz = certificate(cfg, &a)?;
        writeln!(
            report,
            "n = {}: mass = {:?}, basis = {}, inner iterations = {}",
            d.cloud.len(),
            res.mass,
            res.basis_size,
            res.inner_iterations
        )
        .unwrap();
        for (k, (pair, mode)) in res.pairs.iter().zip(&modes).enumerate() {
            rows.push(EigenRow {
                n: d.cloud.len(),
                h: d.stats.fill_distance,
                t: d.t(),
                index: k + 1,
                lambda: pair.value,
                lambda_exact: mode.value,
                rel_error: (pair.value - mode.value).abs() / mode.value,
                residual: pair.residual,
                mass: res.mass,
                min_ritz,
            });
        }
    }
    let mut csv = String::from("n,h,t,index,lambda,lambda_exact,rel_error,residual,mass\n");
    for r in &rows {
        let mass = match r.mass {
            MassUsed::Consistent => "consistent",
            MassUsed::Lumped => "lumped",
        };
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.n, r.h, r.t, r.index, r.lambda, r.lambda_exact, r.rel_error, r.residual, mass
        )
        .unwrap();
    }
    cfg.write("eigen.csv", &csv)?;
    cfg.write("report.txt", &report)?;
    Ok(rows)
}

/// Parses `zero`, `const:<c>`, `disk-cos` (the manufactured solution) or
/// `disk-source` (its negative Laplacian).
pub fn parse_field_spec(spec: &str) -> Result<Field> {
    let spec = spec.trim();
    match spec {
        "zero" | "0" => Ok(Field::Zero),
        "disk-cos" => Ok(Field::func(exact_u)),
        "disk-source" => Ok(Field::func(source_f)),
        _ => match spec.strip_prefix("const:") {
            Some(c) => c
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|c| c.is_finite())
                .map(Field::constant)
                .ok_or_else(|| PimError::Parameter(format!("bad constant in field spec {spec:?}"))),
            None => Err(PimError::Parameter(format!("unknown field spec {spec:?}"))),
        },
    }
}

/// Outcome of a single solve on a user cloud.
#[derive(Debug, Clone)]
pub struct SingleSolveOutcome {
    pub report: SolveReport,
    pub t: f64,
    /// The cloud has no boundary and the constant nullspace was projected out.
    pub deflated: bool,
}

/// Solves the constrained Poisson problem on `cfg.cloud`; writes
/// `solution.csv` and `report.txt`.
pub fn run_single_solve(cfg: &ExperimentConfig) -> Result<SingleSolveOutcome> {
    cfg.validate()?;
    let path = cfg.cloud.as_ref().expect("validated");
    let cloud = load_cloud(path, CloudFormat::from_path(path)).stage("load cloud")?;
    let src = SourceField::new(parse_field_spec(&cfg.f)?, parse_field_spec(&cfg.g)?);
    cfg.ensure_out()?;
    let outcome = single_solve(cfg, cloud, &src)?;
    Ok(outcome)
}

fn single_solve(
    cfg: &ExperimentConfig,
    cloud: PointCloud,
    src: &SourceField,
) -> Result<SingleSolveOutcome> {
    let d = Discretization::prepare(cloud, cfg.policy()?, Some(cfg.neighbors))?;
    let a = d.stiffness()?;
    dump_matrix(cfg, "stiffness.txt", &a)?;
    let deflated = d.partition.constrained_count() == 0;
    let report = if deflated {
        deflated_solve(&d, &a, src, &cfg.cg())?
    } else {
        d.solve_poisson(&a, src, &cfg.cg())?
    };
    dump_history(cfg, "history.csv", &report)?;

    let mut csv = String::new();
    for k in 0..d.cloud.dim() {
        write!(csv, "x{k},").unwrap();
    }
    csv.push_str("constrained,u\n");
    for (i, u) in report.solution.iter().enumerate() {
        for x in d.cloud.point(i) {
            write!(csv, "{x},").unwrap();
        }
        writeln!(csv, "{},{u}", d.partition.is_constrained(i) as u8).unwrap();
    }
    cfg.write("solution.csv", &csv)?;

    let mut text = header(cfg, "solve");
    writeln!(
        text,
        "cloud = {}",
        cfg.cloud
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default()
    )
    .unwrap();
    writeln!(text, "f = {}", cfg.f).unwrap();
    writeln!(text, "g = {}", cfg.g).unwrap();
    writeln!(text, "points = {}", d.cloud.len()).unwrap();
    writeln!(text, "h = {}", d.stats.fill_distance).unwrap();
    writeln!(text, "t = {}", d.t()).unwrap();
    writeln!(text, "interior = {}", report.interior_count).unwrap();
    writeln!(text, "constrained = {}", report.constrained_count).unwrap();
    writeln!(text, "iterations = {}", report.iterations).unwrap();
    writeln!(text, "residual = {}", report.residual).unwrap();
    if deflated {
        writeln!(
            text,
            "nullspace = constants (no boundary); solution normalized to zero weighted mean"
        )
        .unwrap();
    }
    for w in &d.warnings {
        writeln!(text, "warning: {w}").unwrap();
    }
    cfg.write("report.txt", &text)?;
    Ok(SingleSolveOutcome {
        report,
        t: d.t(),
        deflated,
    })
}

/// Closed manifold: the stiffness annihilates constants, so the load is
/// projected onto their complement and the solution pinned to zero mean.
fn deflated_solve(
    d: &Discretization,
    a: &SparseOperator,
    src: &SourceField,
    cg: &CgConfig,
) -> Result<SolveReport> {
    let mut b = d.load(src)?;
    let n = b.len() as f64;
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mean = b.iter().sum::<f64>() / n;
    if mean.abs() * n.sqrt() > 1e-6 * b_norm.max(f64::MIN_POSITIVE) {
        return Err(PimError::Singular(format!(
            "operator has a constant nullspace and the load has nonzero mean {mean:e}"
        )));
    }
    b.iter_mut().for_each(|v| *v -= mean);
    let out = cg_solve(a, &b, cg).stage("linear solve")?;
    let v = d.cloud.require_volume()?;
    let vol: f64 = v.iter().sum();
    let shift = out.x.iter().zip(v).map(|(x, w)| x * w).sum::<f64>() / vol;
    Ok(SolveReport {
        solution: out.x.iter().map(|x| x - shift).collect(),
        iterations: out.iterations,
        residual: out.residual,
        residual_history: out.residual_history,
        interior_count: d.cloud.len(),
        constrained_count: 0,
    })
}
