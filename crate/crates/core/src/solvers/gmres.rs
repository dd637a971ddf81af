use super::cg::jacobi_inverse;
use super::{norm, IterativeOutcome, Preconditioner};
use crate::error::{PimError, Result};
use crate::operator::{dot, SparseOperator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresConfig {
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
    pub preconditioner: Preconditioner,
}

impl Default for GmresConfig {
    fn default() -> Self {
        GmresConfig {
            tol: 1e-10,
            restart: 80,
            max_iter: 20_000,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

/// Restarted GMRES with right preconditioning, for the nonsymmetric Robin
/// system. `energy_history` is left empty.
pub fn gmres_solve(a: &SparseOperator, b: &[f64], cfg: &GmresConfig) -> Result<IterativeOutcome> {
    check_request(a, b, cfg)?;
    let inv_diag = jacobi_inverse(a, cfg.preconditioner).unwrap_or(None);
    let apply_m = |v: &[f64]| -> Vec<f64> {
        match &inv_diag {
            Some(d) => v.iter().zip(d).map(|(a, b)| a * b).collect(),
            None => v.to_vec(),
        }
    };
    gmres_core(a, b, cfg, &apply_m)
}

/// GMRES with a block lower-triangular right preconditioner; `cfg.preconditioner` is ignored.
pub fn gmres_solve_with(
    a: &SparseOperator,
    b: &[f64],
    cfg: &GmresConfig,
    precond: &BlockTriangular,
) -> Result<IterativeOutcome> {
    check_request(a, b, cfg)?;
    if precond.n != a.nrows() {
        return Err(PimError::Parameter(
            "preconditioner dimension mismatch".into(),
        ));
    }
    gmres_core(a, b, cfg, &|v: &[f64]| precond.apply(a, v))
}

/// Preconditioner `[A_LL 0; A_RL tril(A_RR)]` for a chosen leading index set `L`:
/// a dense LU solve on `L` followed by a Gauss–Seidel sweep over the rest.
#[derive(Debug, Clone)]
pub struct BlockTriangular {
    n: usize,
    leading: Vec<usize>,
    // position within `leading`, or usize::MAX
    slot: Vec<usize>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    diag: Vec<f64>,
}

impl BlockTriangular {
    pub fn new(a: &SparseOperator, leading: &[usize]) -> Result<Self> {
        let n = a.nrows();
        let mut slot = vec![usize::MAX; n];
        for (k, &i) in leading.iter().enumerate() {
            if i >= n || slot[i] != usize::MAX {
                return Err(PimError::Parameter(
                    "leading set must hold distinct valid rows".into(),
                ));
            }
            slot[i] = k;
        }
        let m = leading.len();
        let mut block = nalgebra::DMatrix::<f64>::zeros(m, m);
        for (k, &i) in leading.iter().enumerate() {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if slot[j] != usize::MAX {
                    block[(k, slot[j])] = v;
                }
            }
        }
        let lu = block.lu();
        if m > 0 && !lu.is_invertible() {
            return Err(PimError::Singular(
                "leading block of the preconditioner".into(),
            ));
        }
        let diag = a.diagonal();
        for (i, d) in diag.iter().enumerate() {
            if slot[i] == usize::MAX && *d == 0.0 {
                return Err(PimError::Singular(format!("zero diagonal in row {i}")));
            }
        }
        Ok(BlockTriangular {
            n,
            leading: leading.to_vec(),
            slot,
            lu,
            diag,
        })
    }

    fn apply(&self, a: &SparseOperator, v: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        if !self.leading.is_empty() {
            let rhs = nalgebra::DVector::from_iterator(
                self.leading.len(),
                self.leading.iter().map(|&i| v[i]),
            );
            let sol = self.lu.solve(&rhs).expect("checked invertible");
            for (k, &i) in self.leading.iter().enumerate() {
                y[i] = sol[k];
            }
        }
        for i in 0..self.n {
            if self.slot[i] != usize::MAX {
                continue;
            }
            let (cols, vals) = a.row(i);
            let mut s = v[i];
            for (&j, &val) in cols.iter().zip(vals) {
                if self.slot[j] != usize::MAX || j < i {
                    s -= val * y[j];
                }
            }
            y[i] = s / self.diag[i];
        }
        y
    }
}

fn check_request(a: &SparseOperator, b: &[f64], cfg: &GmresConfig) -> Result<()> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(PimError::Parameter(
            "GMRES needs a square system matching the rhs".into(),
        ));
    }
    if !(cfg.tol > 0.0 && cfg.tol < 1.0) || cfg.restart == 0 || cfg.max_iter == 0 {
        return Err(PimError::Parameter("invalid GMRES configuration".into()));
    }
    Ok(())
}

fn gmres_core(
    a: &SparseOperator,
    b: &[f64],
    cfg: &GmresConfig,
    apply_m: &dyn Fn(&[f64]) -> Vec<f64>,
) -> Result<IterativeOutcome> {
    let n = a.nrows();
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    let mut history = vec![if b_norm == 0.0 { 0.0 } else { 1.0 }];
    if b_norm == 0.0 {
        return Ok(IterativeOutcome {
            x,
            iterations: 0,
            residual: 0.0,
            residual_history: history,
            energy_history: Vec::new(),
        });
    }
    let m = cfg.restart.min(n);
    let mut total = 0;
    let mut rel = 1.0;
    while total < cfg.max_iter {
        let ax = a.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        rel = beta / b_norm;
        if rel <= cfg.tol {
            break;
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let mut w = a.matvec(&apply_m(&basis[k]));
            for _ in 0..2 {
                for (j, q) in basis.iter().enumerate() {
                    let c = dot(&w, q);
                    h[j][k] += c;
                    w.iter_mut().zip(q).for_each(|(w, q)| *w -= c * q);
                }
            }
            let wn = norm(&w);
            h[k + 1][k] = wn;
            for j in 0..k {
                let tmp = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = tmp;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            if denom == 0.0 {
                return Err(PimError::Singular("GMRES breakdown".into()));
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            rel = g[k + 1].abs() / b_norm;
            history.push(rel);
            if rel <= cfg.tol || wn == 0.0 || total >= cfg.max_iter {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // back substitution for the Krylov coefficients
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (yi, q) in y.iter().zip(&basis) {
            update.iter_mut().zip(q).for_each(|(u, q)| *u += yi * q);
        }
        let update = apply_m(&update);
        x.iter_mut().zip(&update).for_each(|(x, u)| *x += u);
        if rel <= cfg.tol {
            // confirm with the true residual
            let ax = a.matvec(&x);
            let true_rel =
                norm(&b.iter().zip(&ax).map(|(b, a)| b - a).collect::<Vec<_>>()) / b_norm;
            if true_rel <= cfg.tol * 10.0 {
                return Ok(IterativeOutcome {
                    x,
                    iterations: total,
                    residual: true_rel,
                    residual_history: history,
                    energy_history: Vec::new(),
                });
            }
            rel = true_rel;
        }
    }
    if rel <= cfg.tol {
        return Ok(IterativeOutcome {
            x,
            iterations: total,
            residual: rel,
            residual_history: history,
            energy_history: Vec::new(),
        });
    }
    Err(PimError::NotConverged {
        iterations: total,
        residual: rel,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_nonsymmetric_system() {
        let n = 120;
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 3.0)];
                if i > 0 {
                    r.push((i - 1, -1.5));
                }
                if i + 1 < n {
                    r.push((i + 1, -0.5));
                }
                if i + 7 < n {
                    r.push((i + 7, 0.3));
                }
                r
            })
            .collect();
        let a = SparseOperator::from_rows(n, rows);
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).cos()).collect();
        let b = a.matvec(&x_true);
        let cfg = GmresConfig {
            restart: 10,
            ..Default::default()
        };
        let out = gmres_solve(&a, &b, &cfg).unwrap();
        for (x, t) in out.x.iter().zip(&x_true) {
            assert!((x - t).abs() < 1e-8);
        }
    }
}
