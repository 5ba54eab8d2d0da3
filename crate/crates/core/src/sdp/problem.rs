use serde::Serialize;

use super::linalg::SymMatrix;
use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

/// Rank tolerance for dropping linearly dependent constraints.
pub const RANK_TOL: f64 = 1e-10;

/// One entry of a sparse symmetric matrix: `(row, col)` with `row <= col`
/// stands for both `(row, col)` and `(col, row)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// `<A, X> = rhs` with `A` block-diagonal, symmetric and sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub entries: Vec<Entry>,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(entries: Vec<Entry>, rhs: f64) -> Self {
        Self { entries, rhs }
    }

    /// <A, X>
    pub fn apply(&self, x: &[SymMatrix]) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                let m = &x[e.block];
                if e.row == e.col {
                    e.value * m.get(e.row, e.row)
                } else {
                    e.value * (m.get(e.row, e.col) + m.get(e.col, e.row))
                }
            })
            .sum()
    }

    /// acc += s * A
    pub fn accumulate(&self, s: f64, acc: &mut [SymMatrix]) {
        for e in &self.entries {
            let v = s * e.value;
            acc[e.block].add_at(e.row, e.col, v);
            if e.row != e.col {
                acc[e.block].add_at(e.col, e.row, v);
            }
        }
    }

    fn normalize(&mut self) {
        for e in self.entries.iter_mut() {
            if e.row > e.col {
                std::mem::swap(&mut e.row, &mut e.col);
            }
        }
        self.entries.sort_by_key(|e| (e.block, e.row, e.col));
        let mut merged: Vec<Entry> = Vec::with_capacity(self.entries.len());
        for e in self.entries.drain(..) {
            match merged.last_mut() {
                Some(last) if (last.block, last.row, last.col) == (e.block, e.row, e.col) => {
                    last.value += e.value;
                }
                _ => merged.push(e),
            }
        }
        merged.retain(|e| e.value != 0.0);
        self.entries = merged;
    }

    fn dense_block(&self, block: usize, n: usize) -> SymMatrix {
        let mut m = SymMatrix::zeros(n);
        for e in self.entries.iter().filter(|e| e.block == block) {
            m.add_at(e.row, e.col, e.value);
            if e.row != e.col {
                m.add_at(e.col, e.row, e.value);
            }
        }
        m
    }
}

/// `minimize <C, X>  s.t.  <A_i, X> = b_i,  X >= 0` over block-diagonal
/// symmetric `X`.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    block_sizes: Vec<usize>,
    objective: Vec<SymMatrix>,
    constraints: Vec<Constraint>,
    kept: Vec<usize>,
    dropped: Vec<usize>,
    inconsistent: bool,
}

impl SdpProblem {
    /// Validates shapes and removes linearly dependent constraints. If a
    /// dependent row carries an inconsistent right-hand side the problem is
    /// flagged as structurally infeasible.
    pub fn new(block_sizes: Vec<usize>, objective: Vec<SymMatrix>, mut constraints: Vec<Constraint>) -> Result<Self> {
        if block_sizes.is_empty() || block_sizes.contains(&0) {
            return Err(Error::InvalidArgument("block sizes must be positive".into()));
        }
        if objective.len() != block_sizes.len() {
            return Err(Error::DimensionMismatch {
                expected: block_sizes.len(),
                found: objective.len(),
            });
        }
        for (c, &n) in objective.iter().zip(&block_sizes) {
            if c.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: c.n(),
                });
            }
            if c.sub(&c.symmetrized()).frobenius() > 1e-12 * (1.0 + c.frobenius()) {
                return Err(Error::InvalidArgument("objective block is not symmetric".into()));
            }
        }
        for c in constraints.iter_mut() {
            for e in &c.entries {
                let n = *block_sizes
                    .get(e.block)
                    .ok_or_else(|| Error::InvalidArgument(format!("constraint references block {}", e.block)))?;
                if e.row >= n || e.col >= n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: e.row.max(e.col) + 1,
                    });
                }
            }
            c.normalize();
        }
        let (keep, inconsistent) = independent_rows(&constraints);
        let dropped: Vec<usize> = (0..constraints.len()).filter(|i| !keep.contains(i)).collect();
        let constraints = keep.iter().map(|&i| constraints[i].clone()).collect();
        Ok(Self {
            block_sizes,
            objective,
            constraints,
            kept: keep,
            dropped,
            inconsistent,
        })
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn objective(&self) -> &[SymMatrix] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Number of constraints passed to `new`, before redundancy removal.
    pub fn input_count(&self) -> usize {
        self.kept.len() + self.dropped.len()
    }

    /// Input indices of the constraints that were kept, ascending.
    pub fn kept_constraints(&self) -> &[usize] {
        &self.kept
    }

    /// Indices (in the input order) of constraints removed as redundant.
    pub fn dropped_constraints(&self) -> &[usize] {
        &self.dropped
    }

    pub fn is_structurally_infeasible(&self) -> bool {
        self.inconsistent
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.constraints.iter().map(|c| c.rhs).collect()
    }

    /// A(X)
    pub fn apply(&self, x: &[SymMatrix]) -> Vec<f64> {
        self.constraints.iter().map(|c| c.apply(x)).collect()
    }

    /// A^T(y) as dense blocks.
    pub fn adjoint(&self, y: &[f64]) -> Vec<SymMatrix> {
        let mut out: Vec<SymMatrix> = self.block_sizes.iter().map(|&n| SymMatrix::zeros(n)).collect();
        for (c, &yi) in self.constraints.iter().zip(y) {
            if yi != 0.0 {
                c.accumulate(yi, &mut out);
            }
        }
        out
    }

    /// <C, X>
    pub fn objective_value(&self, x: &[SymMatrix]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c.inner(x)).sum()
    }

    /// Debug dump: block sizes, C, A_i (dense, in the repo-wide matrix
    /// encoding with zero imaginary parts) and b.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Dump {
            blocks: Vec<usize>,
            objective: Vec<ComplexMatrix>,
            constraints: Vec<Vec<ComplexMatrix>>,
            b: Vec<f64>,
        }
        let to_c = |m: &SymMatrix| ComplexMatrix::from_fn(m.n(), |i, j| crate::numerics::C64::new(m.get(i, j), 0.0));
        let dump = Dump {
            blocks: self.block_sizes.clone(),
            objective: self.objective.iter().map(to_c).collect(),
            constraints: self
                .constraints
                .iter()
                .map(|c| {
                    self.block_sizes
                        .iter()
                        .enumerate()
                        .map(|(k, &n)| to_c(&c.dense_block(k, n)))
                        .collect()
                })
                .collect(),
            b: self.rhs(),
        };
        serde_json::to_value(dump).expect("dump is serializable")
    }
}

fn gram(constraints: &[Constraint]) -> Vec<f64> {
    use std::collections::HashMap;
    let m = constraints.len();
    // entry -> list of (constraint, weight) with off-diagonals counted twice
    let mut by_entry: HashMap<(usize, usize, usize), Vec<(usize, f64)>> = HashMap::new();
    for (i, c) in constraints.iter().enumerate() {
        for e in &c.entries {
            by_entry.entry((e.block, e.row, e.col)).or_default().push((i, e.value));
        }
    }
    let mut g = vec![0.0; m * m];
    for ((_, r, c), list) in by_entry {
        let w = if r == c { 1.0 } else { 2.0 };
        for &(i, a) in &list {
            for &(j, b) in &list {
                g[i * m + j] += w * a * b;
            }
        }
    }
    g
}

/// Greedy selection of a maximal independent subset by incremental Cholesky
/// of the Gram matrix. Returns kept indices (ascending) and whether any
/// dropped row has a right-hand side inconsistent with the kept ones.
fn independent_rows(constraints: &[Constraint]) -> (Vec<usize>, bool) {
    let m = constraints.len();
    if m == 0 {
        return (Vec::new(), false);
    }
    let g = gram(constraints);
    let mut keep: Vec<usize> = Vec::new();
    let mut dropped: Vec<usize> = Vec::new();
    // rows of L for the kept Gram submatrix
    let mut l: Vec<Vec<f64>> = Vec::new();
    for i in 0..m {
        let norm_sq = g[i * m + i];
        if norm_sq <= 0.0 {
            dropped.push(i);
            continue;
        }
        let row = forward(&l, |a| g[i * m + keep[a]]);
        let d = norm_sq - row.iter().map(|x| x * x).sum::<f64>();
        if d > RANK_TOL * norm_sq {
            let mut row = row;
            row.push(d.sqrt());
            l.push(row);
            keep.push(i);
        } else {
            dropped.push(i);
        }
    }
    let b_keep: Vec<f64> = keep.iter().map(|&i| constraints[i].rhs).collect();
    let inconsistent = dropped.iter().any(|&d| {
        let b = constraints[d].rhs;
        // implied rhs = g_d^T G^{-1} b = (L^{-1} g_d) . (L^{-1} b)
        let u = forward(&l, |a| g[d * m + keep[a]]);
        let v = forward(&l, |a| b_keep[a]);
        let implied: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
        (implied - b).abs() > 1e-8 * (1.0 + b.abs())
    });
    (keep, inconsistent)
}

/// Solves L x = r for lower-triangular L given by rows.
fn forward(l: &[Vec<f64>], r: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut x: Vec<f64> = Vec::with_capacity(l.len() + 1);
    for (a, row) in l.iter().enumerate() {
        let s: f64 = row[..a].iter().zip(&x).map(|(p, q)| p * q).sum();
        x.push((r(a) - s) / row[a]);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(block: usize, row: usize, col: usize, value: f64) -> Entry {
        Entry { block, row, col, value }
    }

    #[test]
    fn duplicate_rows_are_dropped() {
        let c1 = Constraint::new(vec![e(0, 0, 0, 1.0)], 1.0);
        let c2 = Constraint::new(vec![e(0, 0, 0, 2.0)], 2.0);
        let c3 = Constraint::new(vec![e(0, 0, 1, 1.0)], 0.0);
        let p = SdpProblem::new(vec![2], vec![SymMatrix::zeros(2)], vec![c1, c2, c3]).unwrap();
        assert_eq!(p.constraints().len(), 2);
        assert_eq!(p.dropped_constraints(), &[1]);
        assert!(!p.is_structurally_infeasible());
    }

    #[test]
    fn inconsistent_rows_flagged() {
        let c1 = Constraint::new(vec![e(0, 0, 0, 1.0)], 1.0);
        let c2 = Constraint::new(vec![e(0, 0, 0, 1.0)], 2.0);
        let p = SdpProblem::new(vec![1], vec![SymMatrix::zeros(1)], vec![c1, c2]).unwrap();
        assert!(p.is_structurally_infeasible());
    }

    #[test]
    fn rejects_out_of_range_entries() {
        let c = Constraint::new(vec![e(0, 0, 3, 1.0)], 1.0);
        assert!(SdpProblem::new(vec![2], vec![SymMatrix::zeros(2)], vec![c]).is_err());
        let c = Constraint::new(vec![e(1, 0, 0, 1.0)], 1.0);
        assert!(SdpProblem::new(vec![2], vec![SymMatrix::zeros(2)], vec![c]).is_err());
    }

    #[test]
    fn entries_are_merged_and_mirrored() {
        let c = Constraint::new(vec![e(0, 1, 0, 1.0), e(0, 0, 1, 2.0)], 0.0);
        let p = SdpProblem::new(vec![2], vec![SymMatrix::zeros(2)], vec![c]).unwrap();
        assert_eq!(p.constraints()[0].entries, vec![e(0, 0, 1, 3.0)]);
        let x = vec![SymMatrix::from_fn(2, |i, j| (i + j) as f64)];
        assert_eq!(p.apply(&x), vec![6.0]);
    }
}
