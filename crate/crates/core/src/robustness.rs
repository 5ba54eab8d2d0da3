//! Random and generalized robustness, the pure-state witness
//! `lambda I - |psi><psi|`, and the seesaw that estimates `lambda`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{psd_project, HermitianMatrix, C64};
use crate::sdp::{SolveStatus, SolverOptions};
use crate::separability::{
    extract_witness, gr_dual_program, gr_primal_program, rr_dual_program, rr_primal_program, ModelKind, Normalization,
    Quantifier, SeparabilityModel, Witness,
};
use crate::states::{random_unit_vector, DensityMatrix, Ket};

/// Relative tolerance for agreement of the primal and dual optima.
pub const DUALITY_TOL: f64 = 1e-6;
/// Values at or below this are treated as zero when recovering the noise
/// state of the generalized robustness.
pub const ZERO_VALUE_TOL: f64 = 1e-9;
/// Audit threshold for `Tr(W sigma)` on model members.
pub const AUDIT_TOL: f64 = 1e-8;

pub const SEESAW_RESTARTS: usize = 64;
pub const SEESAW_TOL: f64 = 1e-12;
const SEESAW_MAX_SWEEPS: usize = 100_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobustnessResult {
    pub quantifier: Quantifier,
    pub model: ModelKind,
    /// Primal optimum s.
    pub value: f64,
    /// `-Tr(W rho)` for the returned witness, before clamping.
    pub dual_value: f64,
    /// Set when `dual_value` was negative and has been clamped to zero for
    /// the duality check (separable input).
    pub clamped: bool,
    /// `value - max(dual_value, 0)`.
    pub gap: f64,
    pub status: SolveStatus,
    pub witness: Witness,
    pub boundary_state: DensityMatrix,
    pub optimal_noise: Option<DensityMatrix>,
    /// Per-cut components of the mixture decomposition of `(1+s) sigma`.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub components: Vec<HermitianMatrix>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessOptions {
    /// Options of the first attempt.
    pub solver: SolverOptions,
    /// Options of the retry when the first attempt is not optimal.
    pub fallback: SolverOptions,
}

impl Default for RobustnessOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions {
                tol: 1e-9,
                gap_tol: 1e-8,
                ..SolverOptions::default()
            },
            fallback: SolverOptions::default(),
        }
    }
}

pub fn random_robustness(rho: &DensityMatrix, m: &SeparabilityModel) -> Result<RobustnessResult> {
    robustness_with(rho, m, Quantifier::Random, &RobustnessOptions::default())
}

pub fn generalized_robustness(rho: &DensityMatrix, m: &SeparabilityModel) -> Result<RobustnessResult> {
    robustness_with(rho, m, Quantifier::Generalized, &RobustnessOptions::default())
}

pub fn robustness(rho: &DensityMatrix, m: &SeparabilityModel, q: Quantifier) -> Result<RobustnessResult> {
    robustness_with(rho, m, q, &RobustnessOptions::default())
}

fn solve_checked(
    prog: &crate::separability::ConeProgram,
    opts: &RobustnessOptions,
    what: &str,
) -> Result<crate::sdp::SdpSolution> {
    let sol = prog.solve(&opts.solver);
    if sol.status == SolveStatus::Optimal {
        return Ok(sol);
    }
    let retry = prog.solve(&opts.fallback);
    if retry.status == SolveStatus::Optimal {
        return Ok(retry);
    }
    Err(Error::Solver {
        status: retry.status,
        detail: format!("{what} program did not reach optimality"),
    })
}

/// Solves the primal and the witness program, cross-checks their optima and
/// assembles the result.
pub fn robustness_with(
    rho: &DensityMatrix,
    m: &SeparabilityModel,
    quantifier: Quantifier,
    opts: &RobustnessOptions,
) -> Result<RobustnessResult> {
    let (primal, dual) = match quantifier {
        Quantifier::Random => (rr_primal_program(rho, m)?, rr_dual_program(rho, m)?),
        Quantifier::Generalized => (gr_primal_program(rho, m)?, gr_dual_program(rho, m)?),
    };
    let psol = solve_checked(&primal, opts, "primal")?;
    let dsol = solve_checked(&dual, opts, "witness")?;
    let parts = primal.primal_parts(&psol)?;
    let value = parts.value.max(0.0);

    let witness = extract_witness(&dual, &dsol, quantifier.normalization())?;
    let dual_value = -witness.expectation(rho);
    let clamped = dual_value < 0.0;
    let dual_clamped = dual_value.max(0.0);
    if (value - dual_clamped).abs() > DUALITY_TOL * (1.0 + value.abs()) {
        return Err(Error::DualityGap {
            primal: value,
            dual: dual_value,
        });
    }

    let noise = match quantifier {
        Quantifier::Random => Some(DensityMatrix::maximally_mixed(rho.dims())),
        Quantifier::Generalized => match &parts.noise {
            Some(pi) if value > ZERO_VALUE_TOL => {
                let pi = psd_project(pi, true)?;
                Some(DensityMatrix::new(pi, rho.dims().to_vec())?)
            }
            _ => None,
        },
    };
    let boundary_state = match &noise {
        Some(pi) => boundary_state(rho, value, pi)?,
        None => rho.clone(),
    };
    Ok(RobustnessResult {
        quantifier,
        model: m.kind(),
        value,
        dual_value,
        clamped,
        gap: value - dual_clamped,
        status: SolveStatus::Optimal,
        witness,
        boundary_state,
        optimal_noise: noise,
        components: parts.components,
    })
}

/// `(rho + s pi) / (1 + s)`.
pub fn boundary_state(rho: &DensityMatrix, s: f64, pi: &DensityMatrix) -> Result<DensityMatrix> {
    if !(s >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise weight must be >= 0, got {s}")));
    }
    if rho.dims() != pi.dims() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: pi.dim(),
        });
    }
    rho.mix(1.0 / (1.0 + s), pi)
}

/// `lambda I - |psi><psi|`, nonnegative on every state whose overlap with
/// `psi` is at most `lambda`.
pub fn pure_state_witness(psi: &Ket, lambda: f64) -> Result<Witness> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must lie in (0, 1], got {lambda}"
        )));
    }
    let d = psi.dim();
    let w = HermitianMatrix::identity(d)
        .scale(lambda)
        .sub(&HermitianMatrix::projector(psi.amplitudes()));
    Ok(Witness {
        matrix: w,
        normalization: Normalization::BoundedByIdentity,
        certificate: None,
    })
}

/// Smallest `Tr(W sigma)` over `samples` random pure members of the model.
pub fn audit_witness(w: &Witness, m: &SeparabilityModel, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let k = m.sample_member(&mut rng);
        worst = worst.min(w.matrix.expectation(k.amplitudes()));
    }
    worst
}

/// Seesaw estimate of `max |<psi|phi>|^2` over products `phi` across the
/// given groups of parties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureLambda {
    pub lambda: f64,
    pub groups: Vec<Vec<usize>>,
    /// One normalized ket per group.
    pub maximizer: Vec<Vec<C64>>,
    pub restarts_used: usize,
    /// Overlap after every single-factor update of the winning restart.
    #[serde(skip)]
    pub history: Vec<f64>,
}

impl PureLambda {
    /// Tensor product of the maximizer factors in the original party order.
    pub fn product_ket(&self, dims: &[usize]) -> Ket {
        let layout = GroupLayout::new(dims, &self.groups);
        let d: usize = dims.iter().product();
        let amps: Vec<C64> = (0..d)
            .map(|i| {
                (0..self.groups.len())
                    .map(|g| self.maximizer[g][layout.local[i * layout.groups + g]])
                    .product()
            })
            .collect();
        Ket::new(amps, dims.to_vec()).expect("product of unit vectors is normalized")
    }
}

struct GroupLayout {
    groups: usize,
    group_dims: Vec<usize>,
    /// local[i * groups + g] = index of basis state i inside group g
    local: Vec<usize>,
}

impl GroupLayout {
    fn new(dims: &[usize], groups: &[Vec<usize>]) -> Self {
        let d: usize = dims.iter().product();
        let group_dims: Vec<usize> = groups.iter().map(|g| g.iter().map(|&p| dims[p]).product()).collect();
        let mut local = vec![0; d * groups.len()];
        for i in 0..d {
            let mut rest = i;
            let mut digits = vec![0; dims.len()];
            for k in (0..dims.len()).rev() {
                digits[k] = rest % dims[k];
                rest /= dims[k];
            }
            for (g, members) in groups.iter().enumerate() {
                local[i * groups.len() + g] = members.iter().fold(0, |acc, &p| acc * dims[p] + digits[p]);
            }
        }
        Self {
            groups: groups.len(),
            group_dims,
            local,
        }
    }
}

fn validate_groups(n: usize, groups: &[Vec<usize>]) -> Result<()> {
    let mut seen = vec![false; n];
    for g in groups {
        if g.is_empty() {
            return Err(Error::InvalidArgument("empty party group".into()));
        }
        for &p in g {
            if p >= n || seen[p] {
                return Err(Error::InvalidArgument(format!("invalid party grouping {groups:?}")));
            }
            seen[p] = true;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidArgument(format!(
            "grouping {groups:?} does not cover all parties"
        )));
    }
    Ok(())
}

/// Alternating maximization from one random start. Returns the overlap
/// history and the final factors.
fn seesaw_run(psi: &[C64], layout: &GroupLayout, seed: u64) -> (Vec<f64>, Vec<Vec<C64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ng = layout.groups;
    let mut factors: Vec<Vec<C64>> = layout
        .group_dims
        .iter()
        .map(|&dg| random_unit_vector(dg, &mut rng))
        .collect();
    let mut history = Vec::new();
    let mut last = -1.0;
    for _ in 0..SEESAW_MAX_SWEEPS {
        for g in 0..ng {
            let mut v = vec![C64::new(0.0, 0.0); layout.group_dims[g]];
            for (i, &amp) in psi.iter().enumerate() {
                if amp == C64::new(0.0, 0.0) {
                    continue;
                }
                let mut c = amp;
                for h in (0..ng).filter(|&h| h != g) {
                    c *= factors[h][layout.local[i * ng + h]].conj();
                }
                v[layout.local[i * ng + g]] += c;
            }
            let norm_sq: f64 = v.iter().map(|x| x.norm_sqr()).sum();
            if norm_sq > 0.0 {
                let norm = norm_sq.sqrt();
                factors[g] = v.into_iter().map(|x| x / norm).collect();
            }
            history.push(norm_sq);
        }
        let cur = *history.last().expect("at least one group");
        if (cur - last).abs() < SEESAW_TOL {
            break;
        }
        last = cur;
    }
    (history, factors)
}

/// Best overlap of `psi` with products over `groups`, taken over `restarts`
/// seeded random starts (restart `r` uses seed `seed + r`).
pub fn pure_lambda_seesaw(psi: &Ket, groups: &[Vec<usize>], restarts: usize, seed: u64) -> Result<PureLambda> {
    let norm: f64 = psi.amplitudes().iter().map(|a| a.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidState(format!("ket norm^2 {norm} is not 1")));
    }
    if restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be >= 1".into()));
    }
    validate_groups(psi.dims().len(), groups)?;
    let layout = GroupLayout::new(psi.dims(), groups);
    let runs: Vec<(Vec<f64>, Vec<Vec<C64>>)> = (0..restarts as u64)
        .into_par_iter()
        .map(|r| seesaw_run(psi.amplitudes(), &layout, seed.wrapping_add(r)))
        .collect();
    let (best_idx, _) = runs
        .iter()
        .enumerate()
        .map(|(i, (h, _))| (i, *h.last().expect("nonempty history")))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let (history, factors) = runs.into_iter().nth(best_idx).expect("index in range");
    let mut out = PureLambda {
        lambda: 0.0,
        groups: groups.to_vec(),
        maximizer: factors,
        restarts_used: restarts,
        history,
    };
    // report the overlap of the assembled product itself
    let phi = out.product_ket(psi.dims());
    out.lambda = psi.inner(&phi).norm_sqr();
    Ok(out)
}

/// All ways to split `n` parties into exactly `k` nonempty groups, in a
/// fixed order.
pub fn set_partitions(n: usize, k: usize) -> Vec<Vec<Vec<usize>>> {
    fn rec(i: usize, n: usize, k: usize, cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n {
            if cur.len() == k {
                out.push(cur.clone());
            }
            return;
        }
        if cur.len() + (n - i) < k {
            return;
        }
        for g in 0..cur.len() {
            cur[g].push(i);
            rec(i + 1, n, k, cur, out);
            cur[g].pop();
        }
        if cur.len() < k {
            cur.push(vec![i]);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k >= 1 && k <= n {
        rec(0, n, k, &mut Vec::new(), &mut out);
    }
    out
}

/// `lambda` for k-separability: the seesaw maximum over every grouping of
/// the parties into k factors.
pub fn pure_lambda_k(psi: &Ket, k: usize, restarts: usize, seed: u64) -> Result<PureLambda> {
    let n = psi.dims().len();
    let parts = set_partitions(n, k);
    if parts.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "cannot split {n} parties into {k} groups"
        )));
    }
    let mut best: Option<PureLambda> = None;
    for groups in parts {
        let r = pure_lambda_seesaw(psi, &groups, restarts, seed)?;
        if best.as_ref().is_none_or(|b| r.lambda > b.lambda) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one grouping"))
}

/// Runs the seesaw for k-separability, builds `lambda I - |psi><psi|` and
/// audits it on `samples` random members of `m`; an audit failure (which
/// signals an underestimated `lambda`) is an error.
pub fn audited_pure_witness(
    psi: &Ket,
    k: usize,
    m: &SeparabilityModel,
    samples: usize,
    seed: u64,
) -> Result<(Witness, PureLambda)> {
    let lam = pure_lambda_k(psi, k, SEESAW_RESTARTS, seed)?;
    let w = pure_state_witness(psi, lam.lambda.min(1.0))?;
    let worst = audit_witness(&w, m, samples, seed ^ 0x5eed);
    if worst < -AUDIT_TOL {
        return Err(Error::Certificate(format!(
            "pure-state witness fails the audit: Tr(W sigma) = {worst:e} on a model member"
        )));
    }
    Ok((w, lam))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{ket_bell, ket_ghz, ket_w};

    #[test]
    fn set_partition_counts() {
        assert_eq!(set_partitions(3, 3).len(), 1);
        assert_eq!(set_partitions(3, 2).len(), 3);
        assert_eq!(set_partitions(4, 2).len(), 7);
        assert_eq!(set_partitions(4, 3).len(), 6);
    }

    #[test]
    fn seesaw_values() {
        let full = vec![vec![0], vec![1], vec![2]];
        let ghz = pure_lambda_seesaw(&ket_ghz(), &full, 16, 1).unwrap();
        assert!((ghz.lambda - 0.5).abs() < 1e-9);
        let w = pure_lambda_seesaw(&ket_w(), &full, 16, 1).unwrap();
        assert!((w.lambda - 4.0 / 9.0).abs() < 1e-6);
        let bi = pure_lambda_k(&ket_w(), 2, 16, 1).unwrap();
        assert!((bi.lambda - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn seesaw_history_is_monotone() {
        let full = vec![vec![0], vec![1], vec![2]];
        let r = pure_lambda_seesaw(&ket_w(), &full, 4, 9).unwrap();
        for pair in r.history.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-14);
        }
    }

    #[test]
    fn pure_witness_on_its_state() {
        let w = pure_state_witness(&ket_bell(), 0.5).unwrap();
        assert!((w.expectation(&ket_bell().density()) + 0.5).abs() < 1e-12);
        assert!(pure_state_witness(&ket_bell(), 0.0).is_err());
        assert!(pure_state_witness(&ket_bell(), 1.5).is_err());
    }

    #[test]
    fn boundary_state_rejects_negative_weight() {
        let rho = ket_bell().density();
        let mm = DensityMatrix::maximally_mixed(&[2, 2]);
        assert!(boundary_state(&rho, -0.1, &mm).is_err());
        assert_eq!(boundary_state(&rho, 0.0, &mm).unwrap(), rho);
    }
}
