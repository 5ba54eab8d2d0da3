use serde::{Deserialize, Serialize};

use super::linalg::SymMatrix;
use super::problem::SdpProblem;
use super::solver::SdpSolution;

pub const FEASIBILITY_TOL: f64 = 1e-8;
pub const EIGENVALUE_TOL: f64 = 1e-9;
pub const GAP_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub checks: Vec<CertificateCheck>,
}

impl CertificateReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&CertificateCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl std::fmt::Display for CertificateReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{:<18} {:>12.3e}  limit {:>9.1e}  {}",
                c.name,
                c.value,
                c.threshold,
                if c.pass { "ok" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

/// Recomputes feasibility, conic membership and the duality gap from the
/// raw `X` and `y`; the solver's own residuals and slack are not used.
pub fn validate_certificates(p: &SdpProblem, s: &SdpSolution) -> CertificateReport {
    let b = p.rhs();
    let y: Vec<f64> = p
        .kept_constraints()
        .iter()
        .map(|&i| s.y.get(i).copied().unwrap_or(f64::NAN))
        .collect();

    let shape_ok = s.x.len() == p.block_sizes().len() && s.x.iter().zip(p.block_sizes()).all(|(x, &n)| x.n() == n);
    if !shape_ok {
        return CertificateReport {
            checks: vec![CertificateCheck {
                name: "shape".into(),
                value: f64::NAN,
                threshold: 0.0,
                pass: false,
            }],
        };
    }

    let ax: Vec<f64> = p.constraints().iter().map(|c| c.apply(&s.x)).collect();
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let res = ax.iter().zip(&b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let primal_res = res / (1.0 + b_norm);

    let mut slack: Vec<SymMatrix> = p.objective().to_vec();
    for (c, &yi) in p.constraints().iter().zip(&y) {
        c.accumulate(-yi, &mut slack);
    }
    let min_eig_x = s.x.iter().map(|x| x.min_eigenvalue()).fold(f64::INFINITY, f64::min);
    let min_eig_s = slack.iter().map(|m| m.min_eigenvalue()).fold(f64::INFINITY, f64::min);
    let asym =
        s.x.iter()
            .map(|x| x.sub(&x.symmetrized()).frobenius())
            .fold(0.0, f64::max);

    let pobj: f64 = p.objective().iter().zip(&s.x).map(|(c, x)| c.inner(x)).sum();
    let dobj: f64 = b.iter().zip(&y).map(|(b, y)| b * y).sum();
    let gap = (pobj - dobj).abs() / (1.0 + pobj.abs());

    let check = |name: &str, value: f64, threshold: f64, pass: bool| CertificateCheck {
        name: name.into(),
        value,
        threshold,
        pass,
    };
    CertificateReport {
        checks: vec![
            check("symmetry", asym, 1e-12, asym <= 1e-12),
            check(
                "primal_residual",
                primal_res,
                FEASIBILITY_TOL,
                primal_res <= FEASIBILITY_TOL,
            ),
            check("min_eig_x", min_eig_x, -EIGENVALUE_TOL, min_eig_x >= -EIGENVALUE_TOL),
            check("min_eig_s", min_eig_s, -EIGENVALUE_TOL, min_eig_s >= -EIGENVALUE_TOL),
            check("relative_gap", gap, GAP_TOL, gap <= GAP_TOL),
        ],
    }
}
