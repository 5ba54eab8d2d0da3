use serde::{Deserialize, Serialize};

use super::linalg::{chol_solve, cholesky_in_place, sym_jacobi, Cholesky, SymMatrix};
use super::problem::{Constraint, SdpProblem};
use super::SolveStatus;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_GAP_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 200;
pub const DEFAULT_DIVERGENCE: f64 = 1e8;

const STEP_FACTOR: f64 = 0.98;
const EIG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative primal and dual feasibility tolerance.
    pub tol: f64,
    /// Relative duality gap tolerance.
    pub gap_tol: f64,
    pub max_iter: usize,
    /// Dual objective magnitude treated as divergence.
    pub divergence: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            gap_tol: DEFAULT_GAP_TOL,
            max_iter: DEFAULT_MAX_ITER,
            divergence: DEFAULT_DIVERGENCE,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdpSolution {
    pub x: Vec<SymMatrix>,
    /// Multipliers in the original constraint order; dropped redundant
    /// constraints carry zero.
    pub y: Vec<f64>,
    /// Dual slack `C - sum_i y_i A_i`, recomputed from `y`.
    pub s: Vec<SymMatrix>,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

pub fn solve(p: &SdpProblem, tol: f64, max_iter: usize) -> SdpSolution {
    solve_with(
        p,
        &SolverOptions {
            tol,
            max_iter,
            ..SolverOptions::default()
        },
    )
}

struct Iterate {
    x: Vec<SymMatrix>,
    y: Vec<f64>,
    z: Vec<SymMatrix>,
}

struct Metrics {
    pobj: f64,
    dobj: f64,
    pinf: f64,
    dinf: f64,
    rel_gap: f64,
}

impl Metrics {
    fn merit(&self) -> f64 {
        self.pinf.max(self.dinf).max(self.rel_gap)
    }
}

pub fn solve_with(p: &SdpProblem, opts: &SolverOptions) -> SdpSolution {
    let sizes = p.block_sizes();
    let cons = p.constraints();
    let m = cons.len();
    let b = p.rhs();
    let n_total: usize = sizes.iter().sum();
    let b_norm = norm(&b);
    let c_norm = p.objective().iter().map(|c| c.frobenius_sq()).sum::<f64>().sqrt();

    if p.is_structurally_infeasible() {
        let it = initial_point(p);
        return finish(p, it, 0, SolveStatus::PrimalInfeasible);
    }

    let mut it = initial_point(p);
    let mut best: Option<(f64, Iterate, usize)> = None;
    let mut stalls = 0usize;

    for iter in 0..opts.max_iter {
        let rp: Vec<f64> = b.iter().zip(p.apply(&it.x)).map(|(bi, ax)| bi - ax).collect();
        let aty = p.adjoint(&it.y);
        let rd: Vec<SymMatrix> = (0..sizes.len())
            .map(|k| p.objective()[k].sub(&aty[k]).sub(&it.z[k]))
            .collect();
        let metrics = measure(p, &it, &rp, &rd, b_norm, c_norm);

        if best.as_ref().is_none_or(|(merit, _, _)| metrics.merit() < *merit) {
            best = Some((
                metrics.merit(),
                Iterate {
                    x: it.x.clone(),
                    y: it.y.clone(),
                    z: it.z.clone(),
                },
                iter,
            ));
        }

        if metrics.pinf <= opts.tol
            && metrics.dinf <= opts.tol
            && (metrics.pobj - metrics.dobj).abs() <= opts.gap_tol * (1.0 + metrics.pobj.abs())
            && slack_ok(p, &it)
        {
            return finish(p, it, iter, SolveStatus::Optimal);
        }
        if metrics.dobj > opts.divergence && metrics.dinf <= opts.tol.sqrt() {
            return finish(p, it, iter, SolveStatus::PrimalInfeasible);
        }
        if metrics.pobj < -opts.divergence && metrics.pinf <= opts.tol.sqrt() {
            return finish(p, it, iter, SolveStatus::DualInfeasible);
        }

        let z_inv: Vec<SymMatrix> = match it.z.iter().map(|z| z.cholesky().map(|c| c.inverse())).collect() {
            Some(v) => v,
            None => break,
        };
        let Some(schur) = schur_factor(p, &it.x, &z_inv) else {
            break;
        };
        let mu = it.x.iter().zip(&it.z).map(|(x, z)| x.inner(z)).sum::<f64>() / n_total as f64;

        // predictor
        let rc_aff: Vec<SymMatrix> = it.x.iter().map(|x| x.scaled(-1.0)).collect();
        let (dx_a, _, dz_a) = direction(p, cons, m, &schur, &it.x, &z_inv, &rp, &rd, &rc_aff);
        let ap_a = step_length(&it.x, &dx_a);
        let ad_a = step_length(&it.z, &dz_a);
        let mu_aff =
            it.x.iter()
                .zip(&dx_a)
                .zip(it.z.iter().zip(&dz_a))
                .map(|((x, dx), (z, dz))| {
                    let mut xa = x.clone();
                    xa.axpy(ap_a, dx);
                    let mut za = z.clone();
                    za.axpy(ad_a, dz);
                    xa.inner(&za)
                })
                .sum::<f64>()
                / n_total as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let rc: Vec<SymMatrix> = (0..sizes.len())
            .map(|k| {
                let mut r = z_inv[k].scaled(sigma * mu);
                r.axpy(-1.0, &it.x[k]);
                let second = dx_a[k].matmul(&dz_a[k]).matmul(&z_inv[k]).symmetrized();
                r.axpy(-1.0, &second);
                r
            })
            .collect();
        let (dx, dy, dz) = direction(p, cons, m, &schur, &it.x, &z_inv, &rp, &rd, &rc);
        let ap = (STEP_FACTOR * step_length(&it.x, &dx)).min(1.0);
        let ad = (STEP_FACTOR * step_length(&it.z, &dz)).min(1.0);
        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }
        for k in 0..sizes.len() {
            it.x[k].axpy(ap, &dx[k]);
            it.x[k] = it.x[k].symmetrized();
            it.z[k].axpy(ad, &dz[k]);
            it.z[k] = it.z[k].symmetrized();
        }
        for (yi, dyi) in it.y.iter_mut().zip(&dy) {
            *yi += ad * dyi;
        }
    }

    let (_, it, iter) = best.expect("at least one iteration is recorded");
    finish(p, it, iter, SolveStatus::SlowProgress)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn measure(p: &SdpProblem, it: &Iterate, rp: &[f64], rd: &[SymMatrix], b_norm: f64, c_norm: f64) -> Metrics {
    let pobj = p.objective_value(&it.x);
    let dobj: f64 = p.rhs().iter().zip(&it.y).map(|(b, y)| b * y).sum();
    let rd_norm = rd.iter().map(|r| r.frobenius_sq()).sum::<f64>().sqrt();
    Metrics {
        pobj,
        dobj,
        pinf: norm(rp) / (1.0 + b_norm),
        dinf: rd_norm / (1.0 + c_norm),
        rel_gap: (pobj - dobj).abs() / (1.0 + pobj.abs()),
    }
}

fn exact_slack(p: &SdpProblem, y: &[f64]) -> Vec<SymMatrix> {
    let aty = p.adjoint(y);
    p.objective().iter().zip(&aty).map(|(c, a)| c.sub(a)).collect()
}

fn slack_ok(p: &SdpProblem, it: &Iterate) -> bool {
    exact_slack(p, &it.y).iter().all(|s| s.min_eigenvalue() >= -EIG_TOL)
        && it.x.iter().all(|x| x.min_eigenvalue() >= -EIG_TOL)
}

fn initial_point(p: &SdpProblem) -> Iterate {
    let sizes = p.block_sizes();
    let n_total: usize = sizes.iter().sum();
    let sqrt_n = (n_total as f64).sqrt();
    let mut xi: f64 = 10.0f64.max(sqrt_n);
    let mut eta: f64 = 10.0f64.max(sqrt_n);
    for c in p.constraints() {
        let a = constraint_norm(c);
        xi = xi.max((1.0 + c.rhs.abs()) / (1.0 + a));
        eta = eta.max(a);
    }
    let c_norm = p.objective().iter().map(|c| c.frobenius_sq()).sum::<f64>().sqrt();
    eta = eta.max(c_norm);
    Iterate {
        x: sizes.iter().map(|&n| SymMatrix::scaled_identity(n, xi)).collect(),
        y: vec![0.0; p.constraints().len()],
        z: sizes.iter().map(|&n| SymMatrix::scaled_identity(n, eta)).collect(),
    }
}

fn constraint_norm(c: &Constraint) -> f64 {
    c.entries
        .iter()
        .map(|e| {
            if e.row == e.col {
                e.value * e.value
            } else {
                2.0 * e.value * e.value
            }
        })
        .sum::<f64>()
        .sqrt()
}

/// Constraints whose entries in a block outnumber the block size go through a
/// dense product; the rest are paired entry by entry.
fn is_dense(c: &Constraint, sizes: &[usize]) -> bool {
    let mut counts = vec![0usize; sizes.len()];
    for e in &c.entries {
        counts[e.block] += 1;
    }
    counts.iter().zip(sizes).any(|(&k, &n)| k > n)
}

/// Factor of the HKM Schur matrix `M_ij = <A_i, X A_j Z^{-1}>`.
fn schur_factor(p: &SdpProblem, x: &[SymMatrix], z_inv: &[SymMatrix]) -> Option<Vec<f64>> {
    let cons = p.constraints();
    let sizes = p.block_sizes();
    let m = cons.len();
    if m == 0 {
        return Some(Vec::new());
    }
    let dense: Vec<bool> = cons.iter().map(|c| is_dense(c, sizes)).collect();
    let mut mat = vec![0.0; m * m];

    for j in (0..m).filter(|&j| dense[j]) {
        // G = X A_j Z^{-1}, block by block
        let mut a_j: Vec<SymMatrix> = sizes.iter().map(|&n| SymMatrix::zeros(n)).collect();
        cons[j].accumulate(1.0, &mut a_j);
        let g: Vec<SymMatrix> = (0..sizes.len())
            .map(|k| {
                if a_j[k].frobenius_sq() == 0.0 {
                    SymMatrix::zeros(sizes[k])
                } else {
                    x[k].matmul(&a_j[k]).matmul(&z_inv[k])
                }
            })
            .collect();
        for i in 0..m {
            mat[i * m + j] = cons[i].apply(&g);
        }
    }
    for j in (0..m).filter(|&j| !dense[j]) {
        for i in 0..m {
            if dense[i] {
                mat[i * m + j] = mat[j * m + i];
            } else if i <= j {
                let v = sparse_pair(&cons[i], &cons[j], x, z_inv);
                mat[i * m + j] = v;
                mat[j * m + i] = v;
            }
        }
    }
    for i in 0..m {
        for j in (i + 1)..m {
            let v = 0.5 * (mat[i * m + j] + mat[j * m + i]);
            mat[i * m + j] = v;
            mat[j * m + i] = v;
        }
    }
    let max_diag = (0..m).map(|i| mat[i * m + i].abs()).fold(0.0, f64::max);
    let mut reg = 0.0;
    for _ in 0..6 {
        let mut l = mat.clone();
        for i in 0..m {
            l[i * m + i] += reg;
        }
        if cholesky_in_place(&mut l, m) {
            return Some(l);
        }
        reg = if reg == 0.0 {
            1e-14 * max_diag.max(1.0)
        } else {
            reg * 100.0
        };
    }
    None
}

fn sparse_pair(ci: &Constraint, cj: &Constraint, x: &[SymMatrix], z_inv: &[SymMatrix]) -> f64 {
    let mut total = 0.0;
    for e in &ci.entries {
        for f in cj.entries.iter().filter(|f| f.block == e.block) {
            let (xb, zb) = (&x[e.block], &z_inv[e.block]);
            let se: &[(usize, usize)] = if e.row == e.col {
                &[(e.row, e.row)][..]
            } else {
                &[(e.row, e.col), (e.col, e.row)][..]
            };
            let sf: &[(usize, usize)] = if f.row == f.col {
                &[(f.row, f.row)][..]
            } else {
                &[(f.row, f.col), (f.col, f.row)][..]
            };
            let mut s = 0.0;
            for &(a, bb) in se {
                for &(c, d) in sf {
                    s += xb.get(bb, c) * zb.get(d, a);
                }
            }
            total += e.value * f.value * s;
        }
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn direction(
    p: &SdpProblem,
    cons: &[Constraint],
    m: usize,
    schur: &[f64],
    x: &[SymMatrix],
    z_inv: &[SymMatrix],
    rp: &[f64],
    rd: &[SymMatrix],
    rc: &[SymMatrix],
) -> (Vec<SymMatrix>, Vec<f64>, Vec<SymMatrix>) {
    let nb = x.len();
    let x_rd_zinv: Vec<SymMatrix> = (0..nb).map(|k| x[k].matmul(&rd[k]).matmul(&z_inv[k])).collect();
    let a_rc = p.apply(rc);
    let a_xrz: Vec<f64> = cons.iter().map(|c| c.apply(&x_rd_zinv)).collect();
    let rhs: Vec<f64> = (0..m).map(|i| rp[i] - a_rc[i] + a_xrz[i]).collect();
    let dy = if m == 0 { Vec::new() } else { chol_solve(schur, m, &rhs) };
    let aty = p.adjoint(&dy);
    let dz: Vec<SymMatrix> = (0..nb).map(|k| rd[k].sub(&aty[k])).collect();
    let dx: Vec<SymMatrix> = (0..nb)
        .map(|k| {
            let corr = x[k].matmul(&dz[k]).matmul(&z_inv[k]).symmetrized();
            rc[k].sub(&corr)
        })
        .collect();
    (dx, dy, dz)
}

/// Largest step in [0, inf) keeping `x + a dx` PSD, capped at 1/STEP_FACTOR
/// so that the fraction-to-boundary product never exceeds 1.
fn step_length(x: &[SymMatrix], dx: &[SymMatrix]) -> f64 {
    let mut alpha = 1.0 / STEP_FACTOR;
    for (xk, dxk) in x.iter().zip(dx) {
        let Some(ch): Option<Cholesky> = xk.cholesky() else {
            return 0.0;
        };
        let t = ch.congruence_inverse(dxk);
        let lam = if t.n() == 1 {
            t.get(0, 0)
        } else {
            sym_jacobi(t.data().to_vec(), t.n(), false).0[0]
        };
        if lam < 0.0 {
            alpha = alpha.min(-1.0 / lam);
        }
    }
    alpha
}

fn finish(p: &SdpProblem, it: Iterate, iterations: usize, status: SolveStatus) -> SdpSolution {
    let s = exact_slack(p, &it.y);
    let b = p.rhs();
    let rp: Vec<f64> = b.iter().zip(p.apply(&it.x)).map(|(bi, ax)| bi - ax).collect();
    let rd_norm =
        it.z.iter()
            .zip(&s)
            .map(|(z, s)| s.sub(z).frobenius_sq())
            .sum::<f64>()
            .sqrt();
    let primal_obj = p.objective_value(&it.x);
    let dual_obj: f64 = b.iter().zip(&it.y).map(|(b, y)| b * y).sum();
    let mut y_full = vec![0.0; p.input_count()];
    for (&orig, &yi) in p.kept_constraints().iter().zip(&it.y) {
        y_full[orig] = yi;
    }
    SdpSolution {
        x: it.x,
        y: y_full,
        s,
        primal_obj,
        dual_obj,
        gap: primal_obj - dual_obj,
        primal_residual: norm(&rp),
        dual_residual: rd_norm,
        iterations,
        status,
    }
}
