//! Primal-dual interior-point solver for small dense block-diagonal
//! semidefinite programs, plus the real embedding used to pose complex
//! Hermitian programs.

mod certificates;
mod embedding;
mod hermitian;
pub mod linalg;
mod problem;
mod solver;

use serde::{Deserialize, Serialize};

pub use certificates::{validate_certificates, CertificateCheck, CertificateReport};
pub use embedding::{hermitian_embedding, hermitian_from_embedding};
pub use hermitian::{EquationId, Functional, HermitianProgram, MatrixTerm, Term, VarId};
pub use linalg::SymMatrix;
pub use problem::{Constraint, Entry, SdpProblem, RANK_TOL};
pub use solver::{
    solve, solve_with, SdpSolution, SolverOptions, DEFAULT_DIVERGENCE, DEFAULT_GAP_TOL, DEFAULT_MAX_ITER, DEFAULT_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    SlowProgress,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::PrimalInfeasible => "primal-infeasible",
            SolveStatus::DualInfeasible => "dual-infeasible",
            SolveStatus::SlowProgress => "slow-progress",
        };
        f.write_str(s)
    }
}
