use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pimvc::pointcloud::{sample_unit_disk, save_cloud};
use pimvc::CloudFormat;

fn pimvc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pimvc"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = pimvc(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn poisson_convergence_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let stdout = ok(&[
        "poisson-convergence",
        "--sizes",
        "300,700",
        "--seed",
        "3",
        "--out",
        s(&a),
    ]);
    ok(&[
        "poisson-convergence",
        "--sizes",
        "300,700",
        "--seed",
        "3",
        "--out",
        s(&b),
    ]);
    assert!(stdout.contains("log-log slope"));
    for name in ["convergence.csv", "report.txt"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("out");
    fs::write(
        &cfg,
        format!(
            "sizes = [300, 700]\nt-policy = \"fixed\"\nt = 0.02\nout = {:?}\n",
            s(&out)
        ),
    )
    .unwrap();
    ok(&[
        "compare-robin",
        "--config",
        s(&cfg),
        "--sizes",
        "400",
        "--dump-history",
    ]);
    let csv = fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().contains(",0.02,"), "{csv}");
    assert!(fs::read_dir(&out).unwrap().any(|e| e
        .unwrap()
        .file_name()
        .to_string_lossy()
        .starts_with("history")));
}

#[test]
fn eigen_subcommand_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "eigen-convergence",
        "--sizes",
        "700",
        "--m-eigs",
        "3",
        "--out",
        s(dir.path()),
    ]);
    let csv = fs::read_to_string(dir.path().join("eigen.csv")).unwrap();
    assert!(csv.starts_with("n,h,t,index,lambda,lambda_exact,rel_error,residual,mass"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn solve_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("disk.csv");
    save_cloud(&sample_unit_disk(400, 2).unwrap(), &cloud, CloudFormat::Csv).unwrap();
    let out = dir.path().join("out");
    let stdout = ok(&[
        "solve",
        "--cloud",
        s(&cloud),
        "--f",
        "zero",
        "--g",
        "const:2",
        "--out",
        s(&out),
    ]);
    assert!(stdout.contains("interior"));
    let sol = fs::read_to_string(out.join("solution.csv")).unwrap();
    for line in sol.lines().skip(1) {
        let u: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((u - 2.0).abs() < 1e-8);
    }
}

#[test]
fn invalid_input_fails_cleanly() {
    let out = pimvc(&[
        "poisson-convergence",
        "--sizes",
        "700,300",
        "--out",
        "/nonexistent-pimvc",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("ascending"));
    let out = pimvc(&["solve"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let out = pimvc(&["eigen-convergence", "--t-policy", "sideways"]);
    assert!(!out.status.success());
}
