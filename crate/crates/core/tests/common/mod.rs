//! Direct double-loop and dense oracles shared by the test targets.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use pimvc::harness::Discretization;
use pimvc::operator::{Field, Interpolant};
use pimvc::pointcloud::sample_unit_disk;
use pimvc::solvers::{smallest_eigenpairs_with, CgConfig, EigenConfig, MassUsed};
use pimvc::{BandwidthPolicy, SourceField, SparseOperator};

pub fn r(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        (1.0 - s).powi(4) * (4.0 * s + 1.0)
    }
}

pub fn rbar(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        (1.0 - s).powi(5) * (1.0 + 2.0 * s) / 3.0
    }
}

pub fn d2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn rt(t: f64, x: &[f64], y: &[f64]) -> f64 {
    r(d2(x, y) / (4.0 * t)) / (4.0 * PI * t)
}

pub fn rbart(t: f64, x: &[f64], y: &[f64]) -> f64 {
    rbar(d2(x, y) / (4.0 * t)) / (4.0 * PI * t)
}

pub fn fixture(n: usize, seed: u64, t: f64) -> Discretization {
    Discretization::prepare(
        sample_unit_disk(n, seed).unwrap(),
        BandwidthPolicy::Fixed(t),
        None,
    )
    .unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// `uᵀAu` against the pairwise sum plus the collar term.
pub fn quad_form_error(d: &Discretization) -> f64 {
    let t = d.t();
    let a = d.stiffness().unwrap();
    let v = d.cloud.volume_weights().unwrap();
    let p = &d.partition;
    let mut u = vec![0.0; d.cloud.len()];
    for (k, &i) in p.interior_ids.iter().enumerate() {
        u[i] = ((k * 7919) % 101) as f64 / 50.0 - 1.0;
    }
    let mut pair = 0.0;
    let mut collar = 0.0;
    for &i in &p.interior_ids {
        let pi = d.cloud.point(i);
        for &j in &p.interior_ids {
            pair += rt(t, pi, d.cloud.point(j)) * (u[i] - u[j]).powi(2) * v[i] * v[j];
        }
        let w: f64 = p
            .constrained_ids
            .iter()
            .map(|&j| rt(t, pi, d.cloud.point(j)) * v[j])
            .sum();
        collar += u[i] * u[i] * w * v[i];
    }
    rel(a.quad_form(&p.restrict(&u)), pair / (2.0 * t) + collar / t)
}

/// Largest relative deviation of the load vector from the direct sum.
pub fn load_error(d: &Discretization, f: fn(&[f64]) -> f64, g: fn(&[f64]) -> f64) -> f64 {
    let t = d.t();
    let b = d
        .load(&SourceField::new(Field::func(f), Field::func(g)))
        .unwrap();
    let v = d.cloud.volume_weights().unwrap();
    let mut worst = 0.0f64;
    for (k, &i) in d.partition.interior_ids.iter().enumerate() {
        let pi = d.cloud.point(i);
        let mut body = 0.0;
        let mut collar = 0.0;
        for (j, vj) in v.iter().enumerate() {
            let pj = d.cloud.point(j);
            body += rbart(t, pi, pj) * f(pj) * vj;
            if d.partition.is_constrained(j) {
                collar += rt(t, pi, pj) * g(pj) * vj;
            }
        }
        worst = worst.max(rel(b[k], v[i] * (body + collar / t)));
    }
    worst
}

/// Largest relative entry error of the interior mass block; a structural
/// mismatch (nonzero where the oracle is zero) counts as infinite.
pub fn mass_error(d: &Discretization) -> f64 {
    let t = d.t();
    let dense = d.mass().unwrap().to_dense();
    let v = d.cloud.volume_weights().unwrap();
    let ids = &d.partition.interior_ids;
    let mut worst = 0.0f64;
    for (a, &i) in ids.iter().enumerate() {
        for (b, &j) in ids.iter().enumerate() {
            let oracle = v[i] * rbart(t, d.cloud.point(i), d.cloud.point(j)) * v[j];
            let e = if oracle == 0.0 {
                if dense[a][b] == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                rel(dense[a][b], oracle)
            };
            worst = worst.max(e);
        }
    }
    worst
}

/// Interpolant at interior samples and a few off-sample points against the
/// direct kernel sums; returns the worst error and the number of probes.
pub fn interpolant_error(d: &Discretization) -> (f64, usize) {
    let t = d.t();
    let a = d.stiffness().unwrap();
    let f = |x: &[f64]| 1.0 + x[1];
    let src = SourceField::new(Field::func(f), Field::Zero);
    let rep = d.solve_poisson(&a, &src, &CgConfig::default()).unwrap();
    let interp = Interpolant::new(&rep, &d.cloud, &d.index, &d.kernel, &d.partition, &src).unwrap();
    let v = d.cloud.volume_weights().unwrap();
    let probes: Vec<Vec<f64>> = d
        .partition
        .interior_ids
        .iter()
        .map(|&i| d.cloud.point(i).to_vec())
        .chain([vec![0.013, -0.021], vec![-0.2, 0.1]])
        .collect();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for x in probes {
        if interp.in_collar(&x) {
            if interp.eval(&x).unwrap() != 0.0 {
                worst = f64::INFINITY;
            }
            continue;
        }
        let (mut num, mut w, mut rhs) = (0.0, 0.0, 0.0);
        for (j, vj) in v.iter().enumerate() {
            let pj = d.cloud.point(j);
            num += rt(t, &x, pj) * rep.solution[j] * vj;
            w += rt(t, &x, pj) * vj;
            rhs += rbart(t, &x, pj) * f(pj) * vj;
        }
        worst = worst.max(rel(interp.eval(&x).unwrap(), (num + t * rhs) / w));
        checked += 1;
    }
    (worst, checked)
}

pub fn dense(op: &SparseOperator) -> DMatrix<f64> {
    let rows = op.to_dense();
    DMatrix::from_fn(op.nrows(), op.ncols(), |i, j| rows[i][j])
}

/// Positive eigenvalues of `A v = λ B v` in ascending order, from the
/// symmetric matrix `L⁻¹ B L⁻ᵀ` with `A = L Lᵀ` (valid for indefinite `B`).
pub fn dense_pencil(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    let l = a.clone().cholesky().expect("A positive definite").l();
    let linv = l.try_inverse().unwrap();
    let c = &linv * b * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut vals: Vec<f64> = SymmetricEigen::new(c)
        .eigenvalues
        .iter()
        .filter(|mu| **mu > 0.0)
        .map(|mu| 1.0 / mu)
        .collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Largest relative error of the `m` smallest eigenvalues against the dense
/// pencil built from whichever mass the solver reports using.
pub fn eigen_error(d: &Discretization, m: usize) -> f64 {
    let a = d.stiffness().unwrap();
    let b = d.mass().unwrap();
    let res = smallest_eigenpairs_with(&a, &b, m, &EigenConfig::default()).unwrap();
    let b_used = match res.mass {
        MassUsed::Consistent => dense(&b),
        MassUsed::Lumped => DMatrix::from_diagonal(&DVector::from_vec(b.row_sums())),
    };
    let oracle = dense_pencil(&dense(&a), &b_used);
    res.pairs
        .iter()
        .zip(&oracle)
        .map(|(p, o)| rel(p.value, *o))
        .fold(0.0, f64::max)
}
