use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pimvc::harness::{
    log_log_slope, run_compare_robin, run_eigen_convergence, run_poisson_convergence,
    run_single_solve, Experiment, ExperimentConfig, TPolicy,
};

#[derive(Parser)]
#[command(
    name = "pimvc",
    version,
    about = "Point integral method with volume constraint"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Manufactured-solution convergence on unit-disk clouds
    PoissonConvergence(Common),
    /// Dirichlet eigenvalues of the unit disk against Bessel zeros
    EigenConvergence(Common),
    /// Volume constraint versus Robin penalty on unit-disk clouds
    CompareRobin(Common),
    /// Single volume-constrained solve on a cloud file
    Solve(Common),
}

#[derive(Args)]
struct Common {
    /// Config file (TOML); flags given on the command line take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated target sample counts
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    /// balance | fixed
    #[arg(long)]
    t_policy: Option<TPolicy>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    c_b: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    m_eigs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    cloud: Option<PathBuf>,
    /// Manufactured solution for disk experiments: disk-cos | zero
    #[arg(long)]
    exact: Option<String>,
    /// Source term: zero | const:<c> | disk-cos | disk-source
    #[arg(long)]
    f: Option<String>,
    /// Constraint data, same grammar as --f
    #[arg(long)]
    g: Option<String>,
    /// Neighbors used for weight estimation
    #[arg(long)]
    neighbors: Option<usize>,
    #[arg(long)]
    cg_tol: Option<f64>,
    #[arg(long)]
    cg_max_iter: Option<usize>,
    #[arg(long)]
    gmres_tol: Option<f64>,
    #[arg(long)]
    gmres_restart: Option<usize>,
    #[arg(long)]
    eig_tol: Option<f64>,
    /// Skip the positive-definiteness certificate
    #[arg(long)]
    no_certify: bool,
    /// Write residual histories as CSV
    #[arg(long)]
    dump_history: bool,
    /// Write assembled matrices as triplet files
    #[arg(long)]
    dump_matrices: bool,
}

impl Common {
    fn into_config(self, experiment: Experiment) -> pimvc::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        cfg.experiment = experiment;
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        set!(
            sizes,
            seed,
            t_policy,
            c_b,
            beta,
            m_eigs,
            out,
            exact,
            f,
            g,
            neighbors,
            cg_tol,
            gmres_tol,
            gmres_restart,
            eig_tol
        );
        if self.t.is_some() {
            cfg.t = self.t;
            if self.t_policy.is_none() {
                cfg.t_policy = TPolicy::Fixed;
            }
        }
        if self.cloud.is_some() {
            cfg.cloud = self.cloud;
        }
        if self.cg_max_iter.is_some() {
            cfg.cg_max_iter = self.cg_max_iter;
        }
        cfg.certify &= !self.no_certify;
        cfg.dump_history |= self.dump_history;
        cfg.dump_matrices |= self.dump_matrices;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> pimvc::Result<()> {
    match cli.command {
        Command::PoissonConvergence(c) => {
            let cfg = c.into_config(Experiment::PoissonConvergence)?;
            let rows = run_poisson_convergence(&cfg)?;
            println!(
                "{:>7} {:>9} {:>10} {:>11} {:>6}",
                "n", "h", "t", "l2_error", "iters"
            );
            for r in &rows {
                println!(
                    "{:>7} {:>9.5} {:>10.6} {:>11.4e} {:>6}",
                    r.n, r.h, r.t, r.l2_error, r.cg_iters
                );
            }
            if rows.len() >= 2 {
                let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
                let e: Vec<f64> = rows.iter().map(|r| r.l2_error).collect();
                println!("log-log slope {:.3}", log_log_slope(&h, &e));
            }
        }
        Command::EigenConvergence(c) => {
            let cfg = c.into_config(Experiment::EigenConvergence)?;
            let rows = run_eigen_convergence(&cfg)?;
            println!(
                "{:>7} {:>4} {:>12} {:>12} {:>10}",
                "n", "k", "lambda", "exact", "rel_err"
            );
            for r in &rows {
                println!(
                    "{:>7} {:>4} {:>12.5} {:>12.5} {:>10.3e}",
                    r.n, r.index, r.lambda, r.lambda_exact, r.rel_error
                );
            }
        }
        Command::CompareRobin(c) => {
            let cfg = c.into_config(Experiment::CompareRobin)?;
            let rows = run_compare_robin(&cfg)?;
            println!("{:>7} {:>10} {:>11} {:>11}", "n", "t", "vc", "robin");
            for r in &rows {
                println!(
                    "{:>7} {:>10.6} {:>11.4e} {:>11.4e}",
                    r.n, r.t, r.vc_error, r.robin_error
                );
            }
        }
        Command::Solve(c) => {
            let cfg = c.into_config(Experiment::SingleSolve)?;
            let out = run_single_solve(&cfg)?;
            println!(
                "t = {:e}, interior = {}, constrained = {}, iterations = {}, residual = {:e}",
                out.t,
                out.report.interior_count,
                out.report.constrained_count,
                out.report.iterations,
                out.report.residual
            );
            if out.deflated {
                println!("no boundary: constant nullspace deflated");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
