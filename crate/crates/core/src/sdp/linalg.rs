//! Dense real linear algebra for the interior-point solver: symmetric
//! blocks, Cholesky factorizations and a real Jacobi eigensolver.

use serde::{Deserialize, Serialize};

/// Square real matrix, row-major. Used for symmetric blocks, but products
/// of symmetric matrices (not symmetric) are stored in the same type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = s;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// self += s * other
    pub fn axpy(&mut self, s: f64, other: &SymMatrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn scaled(&self, s: f64) -> SymMatrix {
        SymMatrix {
            n: self.n,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// Sum of elementwise products.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn matmul(&self, other: &SymMatrix) -> SymMatrix {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                for (o, b) in out[i * n..(i + 1) * n].iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        SymMatrix { n, data: out }
    }

    /// (self + self^T)/2
    pub fn symmetrized(&self) -> SymMatrix {
        SymMatrix::from_fn(self.n, |i, j| 0.5 * (self.get(i, j) + self.get(j, i)))
    }

    pub fn cholesky(&self) -> Option<Cholesky> {
        let mut l = self.data.clone();
        if cholesky_in_place(&mut l, self.n) {
            Some(Cholesky { n: self.n, l })
        } else {
            None
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        sym_jacobi(self.symmetrized().data, self.n, false).0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.n == 1 {
            return self.data[0];
        }
        self.eigenvalues()[0]
    }
}

/// Lower-triangular Cholesky factor `A = L L^T`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn inverse(&self) -> SymMatrix {
        let n = self.n;
        // L^{-1} column by column
        let mut linv = vec![0.0; n * n];
        for c in 0..n {
            for i in c..n {
                let mut s = if i == c { 1.0 } else { 0.0 };
                for k in c..i {
                    s -= self.l[i * n + k] * linv[k * n + c];
                }
                linv[i * n + c] = s / self.l[i * n + i];
            }
        }
        // A^{-1} = L^{-T} L^{-1}
        SymMatrix::from_fn(n, |i, j| {
            let start = i.max(j);
            (start..n).map(|k| linv[k * n + i] * linv[k * n + j]).sum()
        })
    }

    /// L^{-1} B L^{-T} for symmetric B.
    pub fn congruence_inverse(&self, b: &SymMatrix) -> SymMatrix {
        let n = self.n;
        // Y = L^{-1} B
        let mut y = b.data.clone();
        for c in 0..n {
            for i in 0..n {
                let mut s = y[i * n + c];
                for k in 0..i {
                    s -= self.l[i * n + k] * y[k * n + c];
                }
                y[i * n + c] = s / self.l[i * n + i];
            }
        }
        // (L^{-1} Y^T)^T = Y L^{-T}
        let mut out = vec![0.0; n * n];
        for r in 0..n {
            for i in 0..n {
                let mut s = y[r * n + i];
                for k in 0..i {
                    s -= self.l[i * n + k] * out[r * n + k];
                }
                out[r * n + i] = s / self.l[i * n + i];
            }
        }
        SymMatrix { n, data: out }.symmetrized()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        chol_solve(&self.l, self.n, b)
    }
}

/// In-place Cholesky; the lower triangle of `a` receives L and the upper
/// triangle is zeroed. Returns false when a pivot is not positive.
pub fn cholesky_in_place(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            let (ri, rj) = (i * n, j * n);
            for k in 0..j {
                s -= a[ri + k] * a[rj + k];
            }
            a[i * n + j] = s / d;
        }
        for i in 0..j {
            a[i * n + j] = 0.0;
        }
    }
    true
}

pub fn chol_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    y
}

/// Cyclic Jacobi for real symmetric matrices. Returns ascending eigenvalues
/// and, if requested, the eigenvectors as columns (row-major n x n).
pub fn sym_jacobi(mut a: Vec<f64>, n: usize, vectors: bool) -> (Vec<f64>, Vec<f64>) {
    let mut v = if vectors {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        v
    } else {
        Vec::new()
    };
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = f64::EPSILON * 0.5 * scale;
    for _ in 0..80 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() <= target || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                if vectors {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let vals = order.iter().map(|&i| a[i * n + i]).collect();
    let vecs = if vectors {
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for (k, &o) in order.iter().enumerate() {
                out[i * n + k] = v[i * n + o];
            }
        }
        out
    } else {
        Vec::new()
    };
    (vals, vecs)
}
