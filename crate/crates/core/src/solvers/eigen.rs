//! Smallest eigenpairs of the pencil `A v = λ B v` with `A` SPD.
//!
//! A block Krylov space of the shift-invert operator `A⁻¹B` (shift 0) is
//! grown with full B-orthogonalization; inner solves use CG. Ritz pairs are
//! extracted by Rayleigh–Ritz on the original pencil and their residuals
//! are measured with explicit products, so inexact inner solves only slow
//! convergence down.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{cg_solve, norm, CgConfig};
use crate::error::{PimError, Result};
use crate::operator::{dot, SparseOperator};

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// `|Av - λBv| / |Bv|`
    pub residual: f64,
}

/// Which mass matrix produced the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassUsed {
    Consistent,
    /// `B` lost definiteness; its row-sum diagonal was used instead.
    Lumped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub pairs: Vec<EigenPair>,
    pub mass: MassUsed,
    pub basis_size: usize,
    pub inner_iterations: usize,
}

impl EigenResult {
    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenConfig {
    /// Bound on each pair's residual `|Av - λBv| / |Bv|`.
    pub tol: f64,
    pub seed: u64,
    /// Krylov block size; covers eigenvalue multiplicities up to this.
    pub block_size: usize,
    /// Basis size at which the solver gives up; `None` picks `max(80, 20 m)`.
    pub max_basis: Option<usize>,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig {
            tol: 1e-8,
            seed: 0,
            block_size: 4,
            max_basis: None,
        }
    }
}

pub fn smallest_eigenpairs(
    a: &SparseOperator,
    b: &SparseOperator,
    m: usize,
    tol: f64,
    seed: u64,
) -> Result<EigenResult> {
    smallest_eigenpairs_with(
        a,
        b,
        m,
        &EigenConfig {
            tol,
            seed,
            ..Default::default()
        },
    )
}

pub fn smallest_eigenpairs_with(
    a: &SparseOperator,
    b: &SparseOperator,
    m: usize,
    cfg: &EigenConfig,
) -> Result<EigenResult> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(PimError::Parameter(
            "A and B must be square and of equal size".into(),
        ));
    }
    if m == 0 || m > n {
        return Err(PimError::Parameter(format!(
            "cannot extract {m} eigenpairs from a {n}-dimensional pencil"
        )));
    }
    if !(cfg.tol > 0.0) || cfg.block_size == 0 {
        return Err(PimError::Parameter(
            "invalid eigensolver configuration".into(),
        ));
    }
    if let Some(i) = b.diagonal().iter().position(|&d| !(d > 0.0)) {
        return Err(PimError::Parameter(format!(
            "B has a nonpositive diagonal entry in row {i}"
        )));
    }
    match run(a, b, m, cfg) {
        Err(Breakdown::Indefinite) => {
            let lumped = SparseOperator::from_diagonal(&b.row_sums());
            match run(a, &lumped, m, cfg) {
                Ok(mut r) => {
                    r.mass = MassUsed::Lumped;
                    Ok(r)
                }
                Err(Breakdown::Indefinite) => Err(PimError::Indefinite(
                    "lumped mass matrix is not positive".into(),
                )),
                Err(Breakdown::Error(e)) => Err(e),
            }
        }
        Err(Breakdown::Error(e)) => Err(e),
        Ok(r) => Ok(r),
    }
}

enum Breakdown {
    Indefinite,
    Error(PimError),
}

impl From<PimError> for Breakdown {
    fn from(e: PimError) -> Self {
        Breakdown::Error(e)
    }
}

struct Basis<'a> {
    a: &'a SparseOperator,
    b: &'a SparseOperator,
    q: Vec<Vec<f64>>,
    aq: Vec<Vec<f64>>,
    bq: Vec<Vec<f64>>,
}

impl Basis<'_> {
    /// B-orthogonalizes `w` against the basis and appends it. Returns
    /// whether it was kept (false when numerically dependent).
    fn push(&mut self, mut w: Vec<f64>) -> std::result::Result<bool, Breakdown> {
        let bw0 = self.b.matvec(&w);
        let norm0 = dot(&w, &bw0);
        if !(norm0 > 0.0) {
            return if norm0 < 0.0 {
                Err(Breakdown::Indefinite)
            } else {
                Ok(false)
            };
        }
        for _ in 0..2 {
            for (q, bq) in self.q.iter().zip(&self.bq) {
                let c = dot(bq, &w);
                w.iter_mut().zip(q).for_each(|(w, q)| *w -= c * q);
            }
        }
        let bw = self.b.matvec(&w);
        let nrm2 = dot(&w, &bw);
        if nrm2 < 0.0 {
            return Err(Breakdown::Indefinite);
        }
        if nrm2 <= 1e-20 * norm0 {
            return Ok(false);
        }
        let s = 1.0 / nrm2.sqrt();
        w.iter_mut().for_each(|x| *x *= s);
        let bw: Vec<f64> = bw.into_iter().map(|x| x * s).collect();
        self.aq.push(self.a.matvec(&w));
        self.bq.push(bw);
        self.q.push(w);
        Ok(true)
    }
}

fn run(
    a: &SparseOperator,
    b: &SparseOperator,
    m: usize,
    cfg: &EigenConfig,
) -> std::result::Result<EigenResult, Breakdown> {
    let n = a.nrows();
    let max_basis = cfg.max_basis.unwrap_or((20 * m).max(80)).min(n);
    let inner = CgConfig::with_tol((1e-2 * cfg.tol).max(1e-14));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut basis = Basis {
        a,
        b,
        q: Vec::new(),
        aq: Vec::new(),
        bq: Vec::new(),
    };
    let mut inner_iterations = 0;
    let mut block: Vec<usize> = Vec::new();

    loop {
        if block.is_empty() {
            // (re)seed with random directions
            for _ in 0..cfg.block_size {
                if basis.q.len() >= max_basis {
                    break;
                }
                let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                if basis.push(w)? {
                    block.push(basis.q.len() - 1);
                }
            }
        } else {
            let mut next = Vec::new();
            for &k in &block {
                if basis.q.len() >= max_basis {
                    break;
                }
                let out = cg_solve(a, &basis.bq[k], &inner)?;
                inner_iterations += out.iterations;
                if basis.push(out.x)? {
                    next.push(basis.q.len() - 1);
                }
            }
            block = next;
        }

        let k = basis.q.len();
        if k >= m {
            let pairs = rayleigh_ritz(&basis, m);
            let converged = pairs.iter().all(|p| p.residual <= cfg.tol);
            if converged || k >= max_basis {
                if !converged {
                    let worst = pairs.iter().map(|p| p.residual).fold(0.0, f64::max);
                    return Err(PimError::Stagnation(format!(
                        "basis reached {k} vectors with residual {worst:e} > {:e}",
                        cfg.tol
                    ))
                    .into());
                }
                return Ok(EigenResult {
                    pairs,
                    mass: MassUsed::Consistent,
                    basis_size: k,
                    inner_iterations,
                });
            }
        }
        if block.is_empty() && basis.q.len() >= max_basis {
            return Err(PimError::Stagnation("Krylov space exhausted".into()).into());
        }
    }
}

fn rayleigh_ritz(basis: &Basis, m: usize) -> Vec<EigenPair> {
    let k = basis.q.len();
    let n = basis.q[0].len();
    let mut h = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let v = 0.5 * (dot(&basis.q[i], &basis.aq[j]) + dot(&basis.q[j], &basis.aq[i]));
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    order
        .into_iter()
        .take(m)
        .map(|c| {
            let theta = eig.eigenvalues[c];
            let y = eig.eigenvectors.column(c);
            let combine = |vs: &[Vec<f64>]| {
                let mut out = vec![0.0; n];
                for (yi, v) in y.iter().zip(vs) {
                    out.iter_mut().zip(v).for_each(|(o, v)| *o += yi * v);
                }
                out
            };
            let mut x = combine(&basis.q);
            let mut ax = combine(&basis.aq);
            let mut bx = combine(&basis.bq);
            // deterministic sign: largest component positive
            let big = x
                .iter()
                .fold(0.0f64, |m, v| if v.abs() > m.abs() { *v } else { m });
            if big < 0.0 {
                for v in [&mut x, &mut ax, &mut bx] {
                    v.iter_mut().for_each(|e| *e = -*e);
                }
            }
            let r: Vec<f64> = ax.iter().zip(&bx).map(|(a, b)| a - theta * b).collect();
            EigenPair {
                value: theta,
                residual: norm(&r) / norm(&bx),
                vector: x,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_diagonal_problem() {
        let a = SparseOperator::from_diagonal(&[1.0, 2.0, 3.0]);
        let r = smallest_eigenpairs(&a, &SparseOperator::identity(3), 2, 1e-10, 1).unwrap();
        let v = r.values();
        assert!((v[0] - 1.0).abs() < 1e-10 && (v[1] - 2.0).abs() < 1e-10);
        assert_eq!(r.mass, MassUsed::Consistent);
    }

    #[test]
    fn generalized_scaling() {
        let a = SparseOperator::from_diagonal(&[2.0, 6.0]);
        let b = SparseOperator::from_diagonal(&[2.0, 2.0]);
        let v = smallest_eigenpairs(&a, &b, 2, 1e-10, 1).unwrap().values();
        assert!((v[0] - 1.0).abs() < 1e-10 && (v[1] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn laplacian_chain_with_multiplicity() {
        // two decoupled copies of a 1D Dirichlet Laplacian: every eigenvalue doubles
        let n = 60;
        let mut rows = Vec::new();
        for copy in 0..2 {
            for i in 0..n {
                let g = copy * n + i;
                let mut r = vec![(g, 2.0)];
                if i > 0 {
                    r.push((g - 1, -1.0));
                }
                if i + 1 < n {
                    r.push((g + 1, -1.0));
                }
                rows.push(r);
            }
        }
        let a = SparseOperator::from_rows(2 * n, rows);
        let r = smallest_eigenpairs(&a, &SparseOperator::identity(2 * n), 6, 1e-9, 3).unwrap();
        let exact = |k: usize| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
        for (i, p) in r.pairs.iter().enumerate() {
            assert!(
                (p.value - exact(i / 2 + 1)).abs() < 1e-9,
                "{i}: {}",
                p.value
            );
            assert!(p.residual <= 1e-9);
        }
    }

    #[test]
    fn indefinite_mass_falls_back_to_lumping() {
        // B = [[1, 2], [2, 1]] has eigenvalues 3 and -1; its row sums are positive
        let a = SparseOperator::from_diagonal(&[1.0, 1.0]);
        let b = SparseOperator::from_triplets(
            2,
            2,
            &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)],
        );
        let r = smallest_eigenpairs(&a, &b, 1, 1e-10, 5).unwrap();
        assert_eq!(r.mass, MassUsed::Lumped);
        assert!((r.pairs[0].value - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_requests() {
        let a = SparseOperator::identity(3);
        assert!(smallest_eigenpairs(&a, &a, 0, 1e-8, 0).is_err());
        assert!(smallest_eigenpairs(&a, &a, 4, 1e-8, 0).is_err());
        let b = SparseOperator::from_diagonal(&[1.0, 0.0, 1.0]);
        assert!(smallest_eigenpairs(&a, &b, 1, 1e-8, 0).is_err());
    }
}
