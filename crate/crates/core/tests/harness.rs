use std::f64::consts::PI;
use std::fs;

use pimvc::harness::bessel::{bessel_j, bessel_zeros, disk_dirichlet_spectrum};
use pimvc::harness::manufactured::{exact_u, source_f};
use pimvc::harness::{
    log_log_slope, parse_field_spec, run_compare_robin, run_poisson_convergence, run_single_solve,
    Discretization, Experiment, ExperimentConfig, TPolicy,
};
use pimvc::operator::Field;
use pimvc::pointcloud::{sample_unit_disk, save_cloud};
use pimvc::solvers::GmresConfig;
use pimvc::{BandwidthPolicy, CloudFormat, PimError, PointCloud, SourceField};

fn fibonacci_sphere(n: usize) -> PointCloud {
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut coords = Vec::with_capacity(3 * n);
    for i in 0..n {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
        let r = (1.0 - z * z).sqrt();
        let phi = golden * i as f64;
        coords.extend([r * phi.cos(), r * phi.sin(), z]);
    }
    PointCloud::new(coords, 3, 2, vec![false; n]).unwrap()
}

fn small(experiment: Experiment, out: &std::path::Path) -> ExperimentConfig {
    ExperimentConfig {
        sizes: vec![300, 700],
        out: out.to_path_buf(),
        ..ExperimentConfig::for_experiment(experiment)
    }
}

#[test]
fn bessel_reference_values() {
    let table = [
        (0, 1.0, 0.765_197_686_557_966_6),
        (1, 1.0, 0.440_050_585_744_933_5),
        (2, 3.0, 0.486_091_260_585_891_1),
    ];
    for (m, x, v) in table {
        assert!((bessel_j(m, x) - v).abs() < 1e-10, "J_{m}({x})");
    }
    let z0 = bessel_zeros(0, 9.0);
    assert!((z0[0] - 2.404_825_557_695_773).abs() < 1e-9);
    assert!((z0[1] - 5.520_078_110_286_311).abs() < 1e-9);
    assert!((z0[2] - 8.653_727_912_911_013).abs() < 1e-9);
    let spec = disk_dirichlet_spectrum(6);
    let expected = [
        5.783_185_96,
        14.681_970_6,
        14.681_970_6,
        26.374_616_4,
        26.374_616_4,
        30.471_262_3,
    ];
    for (a, b) in spec.iter().zip(expected) {
        assert!((a - b).abs() < 1e-6 * b, "{a} vs {b}");
    }
}

#[test]
fn manufactured_pair_is_consistent() {
    // -Δu by central differences in polar-free Cartesian form
    let h = 1e-4;
    for p in [[0.1, 0.2], [0.5, -0.3], [-0.2, 0.6]] {
        let c = exact_u(&p);
        let lap = (exact_u(&[p[0] + h, p[1]])
            + exact_u(&[p[0] - h, p[1]])
            + exact_u(&[p[0], p[1] + h])
            + exact_u(&[p[0], p[1] - h])
            - 4.0 * c)
            / (h * h);
        assert!((-lap - source_f(&p)).abs() < 1e-4 * (1.0 + source_f(&p).abs()));
    }
    assert!((exact_u(&[0.6, 0.8]) - 1.0).abs() < 1e-12);
}

#[test]
fn zero_solution_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        exact: "zero".into(),
        certify: false,
        ..small(Experiment::PoissonConvergence, dir.path())
    };
    let rows = run_poisson_convergence(&cfg).unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert!(r.l2_error <= 1e-10, "{}", r.l2_error);
        assert_eq!(r.cg_iters, 0);
    }
}

#[test]
fn convergence_outputs_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_poisson_convergence(&small(Experiment::PoissonConvergence, a.path())).unwrap();
    let rb = run_poisson_convergence(&small(Experiment::PoissonConvergence, b.path())).unwrap();
    assert_eq!(ra, rb);
    let ca = fs::read(a.path().join("convergence.csv")).unwrap();
    let cb = fs::read(b.path().join("convergence.csv")).unwrap();
    assert_eq!(ca, cb);
    let text = String::from_utf8(ca).unwrap();
    assert!(text.starts_with("n,h,t,l2_error,cg_iters"));
    assert_eq!(text.lines().count(), 3);
    let report = fs::read_to_string(a.path().join("report.txt")).unwrap();
    assert!(report.contains("slope"));
    for r in &ra {
        assert!(r.min_ritz.unwrap() > 0.0);
        assert!(r.l2_error.is_finite() && r.l2_error > 0.0);
    }
}

#[test]
fn robin_comparison_rows() {
    let dir = tempfile::tempdir().unwrap();
    let rows = run_compare_robin(&small(Experiment::CompareRobin, dir.path())).unwrap();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!(r.vc_error > 0.0 && r.robin_error > 0.0);
        assert!(r.robin_iters > 0);
    }
    assert!(dir.path().join("convergence.csv").exists());
}

#[test]
fn weak_penalty_increases_boundary_error() {
    let d = Discretization::prepare(
        sample_unit_disk(2610, 1).unwrap(),
        BandwidthPolicy::Fixed(0.01),
        None,
    )
    .unwrap();
    let src = SourceField::new(Field::func(source_f), Field::func(exact_u));
    let gm = GmresConfig::default();
    let ids = d.cloud.boundary_ids();
    let boundary_err = |beta: f64| {
        let u = d.solve_robin(beta, &src, &gm).unwrap().solution;
        let s: f64 = ids
            .iter()
            .map(|&i| (u[i] - exact_u(d.cloud.point(i))).powi(2))
            .sum();
        (s / ids.len() as f64).sqrt()
    };
    let errs: Vec<f64> = [1e-4, 1.0, 100.0].into_iter().map(boundary_err).collect();
    assert!(errs.windows(2).all(|w| w[1] > w[0]), "{errs:?}");

    // the Neumann limit has an inconsistent load; the solve must not claim success
    let capped = GmresConfig {
        max_iter: 800,
        ..Default::default()
    };
    let err = d.solve_robin(1e12, &src, &capped).unwrap_err();
    assert!(
        matches!(
            err.root(),
            PimError::NotConverged { .. } | PimError::Stagnation { .. }
        ),
        "{}",
        err.root()
    );
}

#[test]
fn slope_of_power_law() {
    let h = [0.1, 0.05, 0.025];
    let e: Vec<f64> = h.iter().map(|h| 3.0 * h * h).collect();
    assert!((log_log_slope(&h, &e) - 2.0).abs() < 1e-12);
}

#[test]
fn config_round_trip_and_validation() {
    let cfg = ExperimentConfig::for_experiment(Experiment::EigenConvergence);
    let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
    assert_eq!(cfg, back);

    let parsed = ExperimentConfig::from_toml(
        "experiment = \"compare_robin\"\nsizes = [684, 2610]\nt-policy = \"fixed\"\nt = 0.01\nbeta = 0.5\n",
    )
    .unwrap();
    assert_eq!(parsed.experiment, Experiment::CompareRobin);
    assert_eq!(parsed.t_policy, TPolicy::Fixed);
    assert_eq!(parsed.policy().unwrap(), BandwidthPolicy::Fixed(0.01));
    parsed.validate().unwrap();

    assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
    let bad = |c: ExperimentConfig| matches!(c.validate(), Err(PimError::Parameter(_)));
    let base = ExperimentConfig::default();
    assert!(bad(ExperimentConfig {
        sizes: vec![2610, 684],
        ..base.clone()
    }));
    assert!(bad(ExperimentConfig {
        sizes: vec![],
        ..base.clone()
    }));
    assert!(bad(ExperimentConfig {
        experiment: Experiment::CompareRobin,
        beta: 0.0,
        ..base.clone()
    }));
    assert!(bad(ExperimentConfig {
        experiment: Experiment::EigenConvergence,
        m_eigs: 21,
        ..base.clone()
    }));
    assert!(bad(ExperimentConfig {
        experiment: Experiment::SingleSolve,
        ..base.clone()
    }));
    assert!(bad(ExperimentConfig {
        t_policy: TPolicy::Fixed,
        t: None,
        ..base.clone()
    }));
    assert!(bad(ExperimentConfig {
        c_b: -1.0,
        ..base.clone()
    }));
    assert!("theorem_balance".parse::<TPolicy>().is_ok());
    assert!("other".parse::<TPolicy>().is_err());
}

#[test]
fn field_specs() {
    assert!(parse_field_spec("zero").unwrap().is_zero());
    assert_eq!(
        parse_field_spec("const:2.5")
            .unwrap()
            .at_point(&[0.3, 0.1])
            .unwrap(),
        2.5
    );
    assert!(parse_field_spec("const:nan").is_err());
    assert!(parse_field_spec("sin").is_err());
    let p = [0.3, 0.4];
    assert_eq!(
        parse_field_spec("disk-cos").unwrap().at_point(&p).unwrap(),
        exact_u(&p)
    );
}

#[test]
fn single_solve_on_disk_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("disk.xyzb");
    save_cloud(&sample_unit_disk(500, 4).unwrap(), &path, CloudFormat::Xyzb).unwrap();
    let run = |sub: &str, g: &str| {
        let cfg = ExperimentConfig {
            experiment: Experiment::SingleSolve,
            cloud: Some(path.clone()),
            out: dir.path().join(sub),
            g: g.into(),
            ..Default::default()
        };
        let outcome = run_single_solve(&cfg).unwrap();
        (outcome, fs::read(cfg.out.join("solution.csv")).unwrap())
    };
    let (zero, _) = run("zero", "zero");
    assert!(!zero.deflated);
    assert!(zero.report.solution.iter().all(|u| u.abs() <= 1e-10));
    let (c1, csv1) = run("c1", "const:1.5");
    let (_, csv2) = run("c2", "const:1.5");
    assert_eq!(csv1, csv2);
    assert!(c1.report.solution.iter().all(|u| (u - 1.5).abs() < 1e-8));
    let text = String::from_utf8(csv1).unwrap();
    assert!(text.starts_with("x0,x1,constrained,u"));
    assert_eq!(text.lines().count(), 1 + c1.report.solution.len());
}

#[test]
fn closed_manifold_is_deflated() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sphere.xyzb");
    save_cloud(&fibonacci_sphere(1500), &path, CloudFormat::Xyzb).unwrap();
    let base = ExperimentConfig {
        experiment: Experiment::SingleSolve,
        cloud: Some(path),
        out: dir.path().to_path_buf(),
        t_policy: TPolicy::Fixed,
        t: Some(0.01),
        ..Default::default()
    };
    let out = run_single_solve(&ExperimentConfig {
        f: "zero".into(),
        ..base.clone()
    })
    .unwrap();
    assert!(out.deflated);
    assert!(out.report.solution.iter().all(|u| u.abs() <= 1e-10));
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("nullspace"));

    let err = run_single_solve(&ExperimentConfig {
        f: "const:1".into(),
        ..base
    })
    .unwrap_err();
    assert!(matches!(err.root(), PimError::Singular(_)), "{err}");
}
