use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{PimError, Result};

/// Compressed sparse row matrix. Rows are kept sorted by column, and
/// explicit zeros are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Rows below this size are multiplied serially.
const PAR_MIN_ROWS: usize = 4096;

impl SparseOperator {
    /// Builds from per-row `(col, value)` lists; each row is sorted, zero
    /// entries are dropped, and duplicate columns are summed.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        row_ptr.push(0);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let start = cols.len();
            for (c, v) in row {
                debug_assert!(c < ncols);
                if cols.len() > start && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            // drop entries that are (or summed to) zero
            let mut w = start;
            for r in start..cols.len() {
                if vals[r] != 0.0 {
                    cols[w] = cols[r];
                    vals[w] = vals[r];
                    w += 1;
                }
            }
            cols.truncate(w);
            vals.truncate(w);
            row_ptr.push(cols.len());
        }
        SparseOperator {
            nrows,
            ncols,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows = vec![Vec::new(); nrows];
        for &(r, c, v) in triplets {
            rows[r].push((c, v));
        }
        Self::from_rows(ncols, rows)
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self::from_rows(
            diag.len(),
            diag.iter()
                .enumerate()
                .map(|(i, &d)| vec![(i, d)])
                .collect(),
        )
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |p| vals[p])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, i)).collect()
    }

    /// Row sums, i.e. `A·1`.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().sum())
            .collect()
    }

    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.row(i);
        cols.iter().zip(vals).map(|(&c, v)| v * x[c]).sum()
    }

    /// `y = A x`. Each row is summed in column order, so parallel and
    /// serial execution agree bit for bit.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        if self.nrows >= PAR_MIN_ROWS {
            y.par_iter_mut()
                .enumerate()
                .for_each(|(i, yi)| *yi = self.row_dot(i, x));
        } else {
            self.matvec_serial_into(x, y);
        }
    }

    pub fn matvec_serial_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row_dot(i, x);
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    /// `xᵀ A x`
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&c, &v)| (i, c, v))
        })
    }

    /// Largest `|A_ij - A_ji|` relative to the largest `|A_ij|`; structural
    /// asymmetry counts as a full-size mismatch.
    pub fn symmetry_defect(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for (i, j, v) in self.triplets() {
            let (cols, vals) = self.row(j);
            let mirror = match cols.binary_search(&i) {
                Ok(p) => vals[p],
                Err(_) => return f64::INFINITY,
            };
            worst = worst.max((v - mirror).abs());
        }
        worst / scale
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.symmetry_defect() <= rel_tol
    }

    /// Irreducible weak diagonal dominance with positive diagonal and at
    /// least one strictly dominant row in every connected component. For a
    /// symmetric matrix this certifies positive definiteness.
    pub fn diagonal_dominance_certificate(&self) -> bool {
        let n = self.nrows;
        let mut strict = vec![false; n];
        for (i, s) in strict.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            let mut diag = 0.0;
            let mut off = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                if c == i {
                    diag = v;
                } else {
                    off += v.abs();
                }
            }
            if !(diag > 0.0) || diag < off * (1.0 - 1e-12) {
                return false;
            }
            *s = diag > off * (1.0 + 1e-12);
        }
        // every component must reach a strictly dominant row
        let mut seen = vec![false; n];
        for root in 0..n {
            if seen[root] {
                continue;
            }
            let mut stack = vec![root];
            seen[root] = true;
            let mut has_strict = false;
            while let Some(i) = stack.pop() {
                has_strict |= strict[i];
                for &c in self.row(i).0 {
                    if !seen[c] {
                        seen[c] = true;
                        stack.push(c);
                    }
                }
            }
            if !has_strict {
                return false;
            }
        }
        true
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            m[i][j] = v;
        }
        m
    }

    /// Writes `row col value` lines for cross-checking.
    pub fn write_triplets(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = String::with_capacity(self.nnz() * 40);
        for (i, j, v) in self.triplets() {
            let _ = writeln!(out, "{i} {j} {v:e}");
        }
        std::fs::write(path.as_ref(), out).map_err(|e| PimError::io(path, e))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
