use super::norm;
use crate::error::{PimError, Result};
use crate::operator::{dot, SparseOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    None,
    #[default]
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgConfig {
    /// Target relative residual `|Ax - b| / |b|`.
    pub tol: f64,
    /// Iteration cap; `None` means `10 · dim`.
    pub max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for CgConfig {
    fn default() -> Self {
        CgConfig {
            tol: 1e-10,
            max_iter: None,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

impl CgConfig {
    pub fn with_tol(tol: f64) -> Self {
        CgConfig {
            tol,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(PimError::Parameter(format!(
                "tolerance must lie in (0, 1), got {}",
                self.tol
            )));
        }
        if self.max_iter == Some(0) {
            return Err(PimError::Parameter("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Solution of an iterative solve plus its convergence record.
#[derive(Debug, Clone, PartialEq)]
pub struct IterativeOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final relative residual.
    pub residual: f64,
    /// Relative residual after each iteration (index 0 is the start).
    pub residual_history: Vec<f64>,
    /// `½xᵀAx - bᵀx` after each iteration; CG keeps it nonincreasing.
    pub energy_history: Vec<f64>,
}

pub(crate) fn jacobi_inverse(a: &SparseOperator, kind: Preconditioner) -> Result<Option<Vec<f64>>> {
    match kind {
        Preconditioner::None => Ok(None),
        Preconditioner::Jacobi => a
            .diagonal()
            .into_iter()
            .enumerate()
            .map(|(i, d)| {
                if d > 0.0 {
                    Ok(1.0 / d)
                } else if d == 0.0 {
                    Err(PimError::Singular(format!("zero diagonal in row {i}")))
                } else {
                    Err(PimError::Indefinite(format!(
                        "negative diagonal {d} in row {i}"
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(Some),
    }
}

/// Preconditioned conjugate gradients from a zero start.
pub fn cg_solve(a: &SparseOperator, b: &[f64], cfg: &CgConfig) -> Result<IterativeOutcome> {
    cfg.validate()?;
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(PimError::Parameter(format!(
            "system is {}x{} but rhs has {} entries",
            n,
            a.ncols(),
            b.len()
        )));
    }
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(IterativeOutcome {
            x,
            iterations: 0,
            residual: 0.0,
            residual_history: vec![0.0],
            energy_history: vec![0.0],
        });
    }
    let inv_diag = jacobi_inverse(a, cfg.preconditioner)?;
    let precondition = |r: &[f64], z: &mut [f64]| match &inv_diag {
        Some(d) => z
            .iter_mut()
            .zip(r)
            .zip(d)
            .for_each(|((z, r), d)| *z = r * d),
        None => z.copy_from_slice(r),
    };
    let max_iter = cfg.max_iter.unwrap_or(10 * n.max(1));

    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut history = vec![1.0];
    let mut energy = vec![0.0];
    let mut rel = 1.0;

    for it in 1..=max_iter {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !pap.is_finite() || !rz.is_finite() {
            return Err(PimError::Indefinite(format!(
                "breakdown (NaN) at iteration {it}"
            )));
        }
        if pap <= 0.0 {
            return Err(PimError::Indefinite(format!(
                "pᵀAp = {pap:e} at iteration {it}"
            )));
        }
        let alpha = rz / pap;
        for ((xi, ri), (pi, api)) in x.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&ap)) {
            *xi += alpha * pi;
            *ri -= alpha * api;
        }
        energy.push(energy.last().unwrap() - 0.5 * alpha * rz);
        rel = norm(&r) / b_norm;
        history.push(rel);
        if rel <= cfg.tol {
            return Ok(IterativeOutcome {
                x,
                iterations: it,
                residual: rel,
                residual_history: history,
                energy_history: energy,
            });
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(PimError::NotConverged {
        iterations: max_iter,
        residual: rel,
        history,
    })
}
