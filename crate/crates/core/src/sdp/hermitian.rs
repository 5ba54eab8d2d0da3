//! Builder for programs whose variables are complex Hermitian PSD matrices
//! and nonnegative scalars. Each Hermitian `d x d` variable becomes a real
//! `2d x 2d` block; a functional `Y -> tr(H Y)` becomes `<emb(H)/2, X>`.

use std::ops::Range;

use super::embedding::hermitian_from_embedding;
use super::linalg::SymMatrix;
use super::problem::{Constraint, Entry, SdpProblem};
use super::solver::SdpSolution;
use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, HermitianMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarId(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EquationId(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarKind {
    Scalar,
    Hermitian(usize),
}

/// Linear functional `Y -> tr(H Y)` for Hermitian `H`, stored as every
/// nonzero entry of `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl Functional {
    pub fn from_matrix(h: &HermitianMatrix) -> Self {
        let d = h.dim();
        let mut entries = Vec::new();
        for i in 0..d {
            for j in 0..d {
                let v = h.get(i, j);
                if v != C64::new(0.0, 0.0) {
                    entries.push((i, j, v));
                }
            }
        }
        Self { dim: d, entries }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            dim: d,
            entries: (0..d).map(|i| (i, i, C64::new(1.0, 0.0))).collect(),
        }
    }

    /// Hermitian basis element `k` of the `d^2` ordering: diagonal units
    /// first, then for each `a < b` the pair `|a><b| + |b><a|`,
    /// `i|a><b| - i|b><a|`.
    pub fn basis(d: usize, k: usize) -> Self {
        if k < d {
            return Self {
                dim: d,
                entries: vec![(k, k, C64::new(1.0, 0.0))],
            };
        }
        let r = k - d;
        let (pair, imag) = (r / 2, r % 2 == 1);
        let mut idx = 0;
        for a in 0..d {
            for b in (a + 1)..d {
                if idx == pair {
                    let entries = if imag {
                        vec![(a, b, C64::new(0.0, 1.0)), (b, a, C64::new(0.0, -1.0))]
                    } else {
                        vec![(a, b, C64::new(1.0, 0.0)), (b, a, C64::new(1.0, 0.0))]
                    };
                    return Self { dim: d, entries };
                }
                idx += 1;
            }
        }
        panic!("basis index {k} out of range for dimension {d}");
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&(i, j, v)| (i, j, v * s)).collect(),
        }
    }

    /// The functional `Y -> tr(H Y^T)` where the transpose is the index map
    /// produced by [`crate::states::pt_index_map`].
    pub fn through_map(&self, map: &[(usize, usize)]) -> Self {
        let d = self.dim;
        Self {
            dim: d,
            entries: self
                .entries
                .iter()
                .map(|&(i, j, v)| {
                    let (a, b) = map[i * d + j];
                    (a, b, v)
                })
                .collect(),
        }
    }

    /// tr(H M)
    pub fn apply(&self, m: &ComplexMatrix) -> f64 {
        self.entries.iter().map(|&(i, j, v)| (v * m.get(j, i)).re).sum()
    }

    pub fn to_matrix(&self) -> HermitianMatrix {
        let mut m = ComplexMatrix::zeros(self.dim);
        for &(i, j, v) in &self.entries {
            m.set(i, j, m.get(i, j) + v);
        }
        m.hermitian_part()
    }

    fn embedded(&self, block: usize, coeff: f64, out: &mut Vec<Entry>) {
        let d = self.dim;
        for &(a, b, v) in &self.entries {
            let (re, im) = (0.5 * coeff * v.re, 0.5 * coeff * v.im);
            let mut push = |row: usize, col: usize, value: f64| {
                if row <= col && value != 0.0 {
                    out.push(Entry { block, row, col, value });
                }
            };
            push(a, b, re);
            push(a + d, b + d, re);
            push(a, b + d, -im);
        }
    }
}

#[derive(Debug, Clone)]
pub enum Term {
    /// coeff * s for a scalar variable.
    Scalar { var: VarId, coeff: f64 },
    /// tr(H Y) for a Hermitian variable.
    Matrix { var: VarId, functional: Functional },
}

/// One summand on the left of a matrix equation.
#[derive(Debug, Clone)]
pub enum MatrixTerm {
    /// coeff * Y, optionally through a partial-transpose index map.
    Var {
        var: VarId,
        coeff: f64,
        map: Option<Vec<(usize, usize)>>,
    },
    /// s * M for a scalar variable.
    ScalarTimes { var: VarId, matrix: HermitianMatrix },
}

#[derive(Debug, Clone, Default)]
pub struct HermitianProgram {
    vars: Vec<VarKind>,
    objective: Vec<Term>,
    rows: Vec<(Vec<Term>, f64)>,
    equations: Vec<(usize, Range<usize>)>,
}

impl HermitianProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn scalar(&mut self) -> VarId {
        self.vars.push(VarKind::Scalar);
        VarId(self.vars.len() - 1)
    }

    pub fn hermitian(&mut self, d: usize) -> VarId {
        self.vars.push(VarKind::Hermitian(d));
        VarId(self.vars.len() - 1)
    }

    /// Adds `terms` to the (minimized) objective.
    pub fn minimize(&mut self, terms: Vec<Term>) {
        self.objective.extend(terms);
    }

    /// Adds one real equation and returns its row index.
    pub fn add_row(&mut self, terms: Vec<Term>, rhs: f64) -> usize {
        self.rows.push((terms, rhs));
        self.rows.len() - 1
    }

    /// Adds the `d^2` real equations `sum(terms) = rhs` of a Hermitian
    /// matrix identity.
    pub fn add_matrix_equation(&mut self, terms: Vec<MatrixTerm>, rhs: &HermitianMatrix) -> EquationId {
        let d = rhs.dim();
        let start = self.rows.len();
        for k in 0..d * d {
            let e = Functional::basis(d, k);
            let mut row = Vec::with_capacity(terms.len());
            for t in &terms {
                match t {
                    MatrixTerm::Var { var, coeff, map } => {
                        let f = match map {
                            Some(map) => e.through_map(map),
                            None => e.clone(),
                        };
                        row.push(Term::Matrix {
                            var: *var,
                            functional: f.scaled(*coeff),
                        });
                    }
                    MatrixTerm::ScalarTimes { var, matrix } => {
                        let c = e.apply(matrix.matrix());
                        if c != 0.0 {
                            row.push(Term::Scalar { var: *var, coeff: c });
                        }
                    }
                }
            }
            self.rows.push((row, e.apply(rhs.matrix())));
        }
        self.equations.push((d, start..self.rows.len()));
        EquationId(self.equations.len() - 1)
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    fn block_size(kind: VarKind) -> usize {
        match kind {
            VarKind::Scalar => 1,
            VarKind::Hermitian(d) => 2 * d,
        }
    }

    fn entries(&self, terms: &[Term]) -> Result<Vec<Entry>> {
        let mut out = Vec::new();
        for t in terms {
            match t {
                Term::Scalar { var, coeff } => {
                    if self.vars[var.0] != VarKind::Scalar {
                        return Err(Error::InvalidArgument("scalar term on a matrix variable".into()));
                    }
                    out.push(Entry {
                        block: var.0,
                        row: 0,
                        col: 0,
                        value: *coeff,
                    });
                }
                Term::Matrix { var, functional } => match self.vars[var.0] {
                    VarKind::Hermitian(d) if d == functional.dim() => {
                        functional.embedded(var.0, 1.0, &mut out);
                    }
                    VarKind::Hermitian(d) => {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            found: functional.dim(),
                        })
                    }
                    VarKind::Scalar => return Err(Error::InvalidArgument("matrix term on a scalar variable".into())),
                },
            }
        }
        Ok(out)
    }

    pub fn build(&self) -> Result<SdpProblem> {
        let sizes: Vec<usize> = self.vars.iter().map(|&k| Self::block_size(k)).collect();
        let mut objective: Vec<SymMatrix> = sizes.iter().map(|&n| SymMatrix::zeros(n)).collect();
        Constraint::new(self.entries(&self.objective)?, 0.0).accumulate(1.0, &mut objective);
        let constraints = self
            .rows
            .iter()
            .map(|(terms, rhs)| Ok(Constraint::new(self.entries(terms)?, *rhs)))
            .collect::<Result<Vec<_>>>()?;
        SdpProblem::new(sizes, objective, constraints)
    }

    pub fn scalar_value(&self, sol: &SdpSolution, var: VarId) -> f64 {
        debug_assert_eq!(self.vars[var.0], VarKind::Scalar);
        sol.x[var.0].get(0, 0)
    }

    pub fn hermitian_value(&self, sol: &SdpSolution, var: VarId) -> HermitianMatrix {
        hermitian_from_embedding(&sol.x[var.0])
    }

    /// Hermitian multiplier `sum_k y_k E_k` of a matrix equation.
    pub fn equation_multiplier(&self, sol: &SdpSolution, eq: EquationId) -> HermitianMatrix {
        let (d, range) = &self.equations[eq.0];
        let mut m = ComplexMatrix::zeros(*d);
        for (k, row) in range.clone().enumerate() {
            let y = sol.y[row];
            for &(i, j, v) in &Functional::basis(*d, k).entries {
                m.set(i, j, m.get(i, j) + v * y);
            }
        }
        m.hermitian_part()
    }

    pub fn row_multiplier(&self, sol: &SdpSolution, row: usize) -> f64 {
        sol.y[row]
    }
}
