//! PPT relaxations of the k-separable sets and the cone programs built on
//! them.
//!
//! All programs are posed as minimizations. For the witness-side programs
//! the objective is `Tr(W rho)`, so the robustness is minus the optimum.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{hs_inner, HermitianMatrix, C64};
use crate::sdp::{
    solve_with, Functional, HermitianProgram, MatrixTerm, SdpProblem, SdpSolution, SolveStatus, SolverOptions, Term,
    VarId,
};
use crate::states::{
    enumerate_bipartitions, partial_transpose_matrix, pt_index_map, random_product_ket, random_unit_vector,
    Bipartition, DensityMatrix, Ket,
};

/// Reconstruction tolerance for witness certificates (Frobenius).
pub const CERTIFICATE_TOL: f64 = 1e-7;
/// PSD tolerance for certificate components.
pub const COMPONENT_TOL: f64 = 1e-9;
pub const TRACE_NORM_TOL: f64 = 1e-8;
pub const IDENTITY_BOUND_TOL: f64 = 1e-9;
/// Default tolerance for membership decisions.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    IntersectPpt,
    MixturePpt,
    ExactTwoQubit,
}

impl ModelKind {
    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::IntersectPpt => "ppt-intersect",
            ModelKind::MixturePpt => "ppt-mixture",
            ModelKind::ExactTwoQubit => "exact2q",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "ppt-intersect" => Some(ModelKind::IntersectPpt),
            "ppt-mixture" => Some(ModelKind::MixturePpt),
            "exact2q" => Some(ModelKind::ExactTwoQubit),
            _ => None,
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantifier {
    Random,
    Generalized,
}

impl Quantifier {
    pub fn tag(self) -> &'static str {
        match self {
            Quantifier::Random => "rr",
            Quantifier::Generalized => "gr",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "rr" => Some(Quantifier::Random),
            "gr" => Some(Quantifier::Generalized),
            _ => None,
        }
    }

    pub fn normalization(self) -> Normalization {
        match self {
            Quantifier::Random => Normalization::TraceD,
            Quantifier::Generalized => Normalization::BoundedByIdentity,
        }
    }
}

impl std::fmt::Display for Quantifier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Outer relaxation of a separable set over an explicit list of cuts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityModel {
    kind: ModelKind,
    dims: Vec<usize>,
    bipartitions: Vec<Bipartition>,
}

impl SeparabilityModel {
    /// All partial transposes PSD: relaxation of full separability.
    pub fn intersect_ppt(dims: &[usize]) -> Result<Self> {
        Self::with_bipartitions(ModelKind::IntersectPpt, dims, enumerate_bipartitions(dims.len())?)
    }

    /// Mixtures of states that are PPT across some cut: relaxation of
    /// biseparability.
    pub fn mixture_ppt(dims: &[usize]) -> Result<Self> {
        Self::with_bipartitions(ModelKind::MixturePpt, dims, enumerate_bipartitions(dims.len())?)
    }

    /// Two qubits or a qubit and a qutrit, where PPT is exact.
    pub fn exact_two_qubit(dims: &[usize]) -> Result<Self> {
        let ok = matches!(dims, [2, 2] | [2, 3] | [3, 2]);
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "exact PPT model needs 2x2 or 2x3 dims, got {dims:?}"
            )));
        }
        Self::with_bipartitions(ModelKind::ExactTwoQubit, dims, enumerate_bipartitions(2)?)
    }

    pub fn new(kind: ModelKind, dims: &[usize]) -> Result<Self> {
        match kind {
            ModelKind::IntersectPpt => Self::intersect_ppt(dims),
            ModelKind::MixturePpt => Self::mixture_ppt(dims),
            ModelKind::ExactTwoQubit => Self::exact_two_qubit(dims),
        }
    }

    /// Model for k-separability of an n-party system: exact PPT for two
    /// parties of small dimension, the intersection for k = n, the mixture
    /// for k = 2.
    pub fn for_k(dims: &[usize], k: usize) -> Result<Self> {
        let n = dims.len();
        if n == 2 && k == 2 {
            return Self::exact_two_qubit(dims).or_else(|_| Self::intersect_ppt(dims));
        }
        if k == n {
            Self::intersect_ppt(dims)
        } else if k == 2 {
            Self::mixture_ppt(dims)
        } else {
            Err(Error::InvalidArgument(format!(
                "no relaxation for k = {k} on {n} parties (supported: k = 2, k = n)"
            )))
        }
    }

    pub fn with_bipartitions(kind: ModelKind, dims: &[usize], bipartitions: Vec<Bipartition>) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidArgument("a model needs at least two parties".into()));
        }
        if bipartitions.is_empty() {
            return Err(Error::InvalidArgument("a model needs at least one bipartition".into()));
        }
        if let Some(b) = bipartitions.iter().find(|b| b.party_count() != dims.len()) {
            return Err(Error::DimensionMismatch {
                expected: dims.len(),
                found: b.party_count(),
            });
        }
        Ok(Self {
            kind,
            dims: dims.to_vec(),
            bipartitions,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn party_count(&self) -> usize {
        self.dims.len()
    }

    pub fn bipartitions(&self) -> &[Bipartition] {
        &self.bipartitions
    }

    pub fn tag(&self) -> &'static str {
        self.kind.tag()
    }

    fn is_mixture(&self) -> bool {
        self.kind == ModelKind::MixturePpt
    }

    fn check_state(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.dims() != self.dims.as_slice() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: rho.dim(),
            });
        }
        Ok(())
    }

    fn pt(&self, m: &HermitianMatrix, cut: &Bipartition) -> HermitianMatrix {
        partial_transpose_matrix(m, &self.dims, cut.members()).expect("dims validated by the model")
    }

    fn maps(&self) -> Vec<Vec<(usize, usize)>> {
        self.bipartitions
            .iter()
            .map(|b| pt_index_map(&self.dims, b.members()))
            .collect()
    }

    /// Draws a random pure state in the model: a product ket for the
    /// intersection models, a ket factorizing across a random cut for the
    /// mixture model.
    pub fn sample_member<R: Rng>(&self, rng: &mut R) -> Ket {
        if !self.is_mixture() {
            return random_product_ket(&self.dims, rng);
        }
        let cut = &self.bipartitions[rng.random_range(0..self.bipartitions.len())];
        let inside: Vec<usize> = cut.members().to_vec();
        let outside = cut.complement();
        let da: usize = inside.iter().map(|&p| self.dims[p]).product();
        let db: usize = outside.iter().map(|&p| self.dims[p]).product();
        let a = random_unit_vector(da, rng);
        let b = random_unit_vector(db, rng);
        // place the two factors back into the original party order
        let d = self.dim();
        let mut amps = vec![C64::new(0.0, 0.0); d];
        for (idx, amp) in amps.iter_mut().enumerate() {
            let digits = digits_of(idx, &self.dims);
            let ia = inside.iter().fold(0, |acc, &p| acc * self.dims[p] + digits[p]);
            let ib = outside.iter().fold(0, |acc, &p| acc * self.dims[p] + digits[p]);
            *amp = a[ia] * b[ib];
        }
        Ket::normalized(amps, self.dims.clone()).expect("product of unit vectors")
    }
}

fn digits_of(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateMode {
    /// `W = P_M + Q_M^{T_M}` for every cut.
    PerPartition,
    /// `W = P + sum_M Q_M^{T_M}`.
    Summed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    TraceD,
    BoundedByIdentity,
}

/// Proof that a witness is nonnegative on the model: PSD components whose
/// partial-transpose combination reproduces it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessCertificate {
    pub mode: CertificateMode,
    pub dims: Vec<usize>,
    pub bipartitions: Vec<Bipartition>,
    /// One entry in Summed mode, one per cut in PerPartition mode.
    pub p: Vec<HermitianMatrix>,
    pub q: Vec<HermitianMatrix>,
}

impl WitnessCertificate {
    fn pt(&self, m: &HermitianMatrix, cut: &Bipartition) -> HermitianMatrix {
        partial_transpose_matrix(m, &self.dims, cut.members()).expect("certificate dims are consistent")
    }

    /// The matrices the certificate claims equal the witness (one in Summed
    /// mode, one per cut otherwise).
    pub fn reconstructions(&self) -> Vec<HermitianMatrix> {
        match self.mode {
            CertificateMode::Summed => {
                let mut w = self.p[0].clone();
                for (q, cut) in self.q.iter().zip(&self.bipartitions) {
                    w = w.add(&self.pt(q, cut));
                }
                vec![w]
            }
            CertificateMode::PerPartition => self
                .p
                .iter()
                .zip(&self.q)
                .zip(&self.bipartitions)
                .map(|((p, q), cut)| p.add(&self.pt(q, cut)))
                .collect(),
        }
    }

    fn scaled(&self, s: f64) -> Self {
        Self {
            p: self.p.iter().map(|m| m.scale(s)).collect(),
            q: self.q.iter().map(|m| m.scale(s)).collect(),
            ..self.clone()
        }
    }

    /// Largest reconstruction residual against `w` and smallest component
    /// eigenvalue.
    pub fn residuals(&self, w: &HermitianMatrix) -> (f64, f64) {
        let recon = self
            .reconstructions()
            .iter()
            .map(|r| r.sub(w).frobenius_norm())
            .fold(0.0, f64::max);
        let min_eig = self
            .p
            .iter()
            .chain(&self.q)
            .map(|m| m.min_eigenvalue())
            .fold(f64::INFINITY, f64::min);
        (recon, min_eig)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub matrix: HermitianMatrix,
    pub normalization: Normalization,
    pub certificate: Option<WitnessCertificate>,
}

impl Witness {
    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    /// Tr(W rho)
    pub fn expectation(&self, rho: &DensityMatrix) -> f64 {
        hs_inner(&self.matrix, rho.matrix()).expect("witness and state dims agree")
    }

    /// Re-checks the normalization and, when present, the certificate.
    pub fn verify(&self) -> Result<()> {
        let d = self.matrix.dim() as f64;
        match self.normalization {
            Normalization::TraceD => {
                let t = self.matrix.trace();
                if (t - d).abs() > TRACE_NORM_TOL {
                    return Err(Error::Certificate(format!("trace {t} differs from {d}")));
                }
            }
            Normalization::BoundedByIdentity => {
                let top = self.matrix.max_eigenvalue();
                if top - 1.0 > IDENTITY_BOUND_TOL {
                    return Err(Error::Certificate(format!("max eigenvalue {top} exceeds 1")));
                }
            }
        }
        if let Some(cert) = &self.certificate {
            let (recon, min_eig) = cert.residuals(&self.matrix);
            if recon > CERTIFICATE_TOL {
                return Err(Error::Certificate(format!("reconstruction residual {recon:e}")));
            }
            if min_eig < -COMPONENT_TOL {
                return Err(Error::Certificate(format!("component eigenvalue {min_eig:e}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Layout {
    Primal {
        /// `s` for the random quantifier, `Pi` for the generalized one.
        noise: VarId,
        x: Vec<VarId>,
    },
    Dual {
        p: Vec<VarId>,
        q: Vec<VarId>,
    },
}

/// A built cone program together with the handles needed to read its
/// solution back in terms of Hermitian matrices.
#[derive(Debug, Clone)]
pub struct ConeProgram {
    quantifier: Quantifier,
    model: SeparabilityModel,
    program: HermitianProgram,
    problem: SdpProblem,
    layout: Layout,
}

/// Components of an optimal primal solution.
#[derive(Debug, Clone)]
pub struct PrimalParts {
    /// s (random) or Tr Pi (generalized).
    pub value: f64,
    /// Pi for the generalized quantifier.
    pub noise: Option<HermitianMatrix>,
    /// Per-cut components of the mixture decomposition.
    pub components: Vec<HermitianMatrix>,
}

impl ConeProgram {
    pub fn problem(&self) -> &SdpProblem {
        &self.problem
    }

    pub fn quantifier(&self) -> Quantifier {
        self.quantifier
    }

    pub fn model(&self) -> &SeparabilityModel {
        &self.model
    }

    pub fn is_dual(&self) -> bool {
        matches!(self.layout, Layout::Dual { .. })
    }

    pub fn solve(&self, opts: &SolverOptions) -> SdpSolution {
        solve_with(&self.problem, opts)
    }

    pub fn primal_parts(&self, sol: &SdpSolution) -> Result<PrimalParts> {
        let Layout::Primal { noise, x, .. } = &self.layout else {
            return Err(Error::InvalidArgument("not a primal program".into()));
        };
        let components = x.iter().map(|&v| self.program.hermitian_value(sol, v)).collect();
        Ok(match self.quantifier {
            Quantifier::Random => PrimalParts {
                value: self.program.scalar_value(sol, *noise),
                noise: None,
                components,
            },
            Quantifier::Generalized => {
                let pi = self.program.hermitian_value(sol, *noise);
                PrimalParts {
                    value: pi.trace(),
                    noise: Some(pi),
                    components,
                }
            }
        })
    }

    /// Raw witness and certificate read from a dual solution, before any
    /// normalization.
    fn raw_witness(&self, sol: &SdpSolution) -> Result<(HermitianMatrix, WitnessCertificate)> {
        let Layout::Dual { p, q } = &self.layout else {
            return Err(Error::InvalidArgument("not a witness program".into()));
        };
        let ps: Vec<HermitianMatrix> = p.iter().map(|&v| self.program.hermitian_value(sol, v)).collect();
        let qs: Vec<HermitianMatrix> = q.iter().map(|&v| self.program.hermitian_value(sol, v)).collect();
        let mode = if self.model.is_mixture() {
            CertificateMode::PerPartition
        } else {
            CertificateMode::Summed
        };
        let cert = WitnessCertificate {
            mode,
            dims: self.model.dims.clone(),
            bipartitions: self.model.bipartitions.clone(),
            p: ps,
            q: qs,
        };
        let recon = cert.reconstructions();
        let n = recon.len() as f64;
        let mut w = HermitianMatrix::zeros(self.model.dim());
        for r in &recon {
            w = w.add(r);
        }
        Ok((w.scale(1.0 / n), cert))
    }
}

fn herm_term(var: VarId, h: &HermitianMatrix) -> Term {
    Term::Matrix {
        var,
        functional: Functional::from_matrix(h),
    }
}

fn trace_term(var: VarId, d: usize) -> Term {
    Term::Matrix {
        var,
        functional: Functional::identity(d),
    }
}

fn build_primal(rho: &DensityMatrix, m: &SeparabilityModel, quantifier: Quantifier) -> Result<ConeProgram> {
    m.check_state(rho)?;
    let d = m.dim();
    let maps = m.maps();
    let mut prog = HermitianProgram::new();
    let noise = match quantifier {
        Quantifier::Random => prog.scalar(),
        Quantifier::Generalized => prog.hermitian(d),
    };
    let noise_term = |map: Option<Vec<(usize, usize)>>| match quantifier {
        Quantifier::Random => MatrixTerm::ScalarTimes {
            var: noise,
            matrix: HermitianMatrix::identity(d).scale(-1.0 / d as f64),
        },
        Quantifier::Generalized => MatrixTerm::Var {
            var: noise,
            coeff: -1.0,
            map,
        },
    };
    let mut x = Vec::new();
    let mut y = Vec::new();
    if m.is_mixture() {
        // sum_M X_M - noise = rho, Y_M = X_M^{T_M}
        for _ in m.bipartitions() {
            x.push(prog.hermitian(d));
        }
        for _ in m.bipartitions() {
            y.push(prog.hermitian(d));
        }
        let mut terms: Vec<MatrixTerm> = x
            .iter()
            .map(|&v| MatrixTerm::Var {
                var: v,
                coeff: 1.0,
                map: None,
            })
            .collect();
        terms.push(noise_term(None));
        prog.add_matrix_equation(terms, rho.matrix());
        for (k, map) in maps.iter().enumerate() {
            prog.add_matrix_equation(
                vec![
                    MatrixTerm::Var {
                        var: y[k],
                        coeff: 1.0,
                        map: None,
                    },
                    MatrixTerm::Var {
                        var: x[k],
                        coeff: -1.0,
                        map: Some(map.clone()),
                    },
                ],
                &HermitianMatrix::zeros(d),
            );
        }
    } else {
        // Y_M - noise^{T_M} = rho^{T_M}
        for (cut, map) in m.bipartitions().iter().zip(&maps) {
            let yv = prog.hermitian(d);
            y.push(yv);
            prog.add_matrix_equation(
                vec![
                    MatrixTerm::Var {
                        var: yv,
                        coeff: 1.0,
                        map: None,
                    },
                    noise_term(Some(map.clone())),
                ],
                &m.pt(rho.matrix(), cut),
            );
        }
    }
    match quantifier {
        Quantifier::Random => prog.minimize(vec![Term::Scalar { var: noise, coeff: 1.0 }]),
        Quantifier::Generalized => prog.minimize(vec![trace_term(noise, d)]),
    }
    let problem = prog.build()?;
    Ok(ConeProgram {
        quantifier,
        model: m.clone(),
        program: prog,
        problem,
        layout: Layout::Primal { noise, x },
    })
}

fn build_dual(rho: &DensityMatrix, m: &SeparabilityModel, quantifier: Quantifier) -> Result<ConeProgram> {
    m.check_state(rho)?;
    let d = m.dim();
    let maps = m.maps();
    let cuts = m.bipartitions();
    let rho_pt: Vec<HermitianMatrix> = cuts.iter().map(|c| m.pt(rho.matrix(), c)).collect();
    let mut prog = HermitianProgram::new();
    let z = match quantifier {
        Quantifier::Random => None,
        Quantifier::Generalized => Some(prog.hermitian(d)),
    };
    let p_count = if m.is_mixture() { cuts.len() } else { 1 };
    let p: Vec<VarId> = (0..p_count).map(|_| prog.hermitian(d)).collect();
    let q: Vec<VarId> = cuts.iter().map(|_| prog.hermitian(d)).collect();
    let var = |v: VarId, coeff: f64, map: Option<&Vec<(usize, usize)>>| MatrixTerm::Var {
        var: v,
        coeff,
        map: map.cloned(),
    };

    if m.is_mixture() {
        // W = P_1 + Q_1^{T_1} = P_M + Q_M^{T_M}
        prog.minimize(vec![herm_term(p[0], rho.matrix()), herm_term(q[0], &rho_pt[0])]);
        match z {
            None => {
                for k in 1..cuts.len() {
                    prog.add_matrix_equation(
                        vec![
                            var(p[k], 1.0, None),
                            var(q[k], 1.0, Some(&maps[k])),
                            var(p[0], -1.0, None),
                            var(q[0], -1.0, Some(&maps[0])),
                        ],
                        &HermitianMatrix::zeros(d),
                    );
                }
                prog.add_row(vec![trace_term(p[0], d), trace_term(q[0], d)], d as f64);
            }
            Some(z) => {
                for k in 0..cuts.len() {
                    prog.add_matrix_equation(
                        vec![var(z, 1.0, None), var(p[k], 1.0, None), var(q[k], 1.0, Some(&maps[k]))],
                        &HermitianMatrix::identity(d),
                    );
                }
            }
        }
    } else {
        // W = P + sum_M Q_M^{T_M}
        let mut objective = vec![herm_term(p[0], rho.matrix())];
        objective.extend(q.iter().zip(&rho_pt).map(|(&v, r)| herm_term(v, r)));
        prog.minimize(objective);
        match z {
            None => {
                let mut row = vec![trace_term(p[0], d)];
                row.extend(q.iter().map(|&v| trace_term(v, d)));
                prog.add_row(row, d as f64);
            }
            Some(z) => {
                let mut terms = vec![var(z, 1.0, None), var(p[0], 1.0, None)];
                terms.extend(q.iter().zip(&maps).map(|(&v, map)| var(v, 1.0, Some(map))));
                prog.add_matrix_equation(terms, &HermitianMatrix::identity(d));
            }
        }
    }
    let problem = prog.build()?;
    Ok(ConeProgram {
        quantifier,
        model: m.clone(),
        program: prog,
        problem,
        layout: Layout::Dual { p, q },
    })
}

/// minimize s such that rho + s I/d lies in the model's cone.
pub fn rr_primal_program(rho: &DensityMatrix, m: &SeparabilityModel) -> Result<ConeProgram> {
    build_primal(rho, m, Quantifier::Random)
}

/// minimize Tr Pi over Pi >= 0 such that rho + Pi lies in the model's cone.
pub fn gr_primal_program(rho: &DensityMatrix, m: &SeparabilityModel) -> Result<ConeProgram> {
    build_primal(rho, m, Quantifier::Generalized)
}

/// minimize Tr(W rho) over W in the dual cone with Tr W = d.
pub fn rr_dual_program(rho: &DensityMatrix, m: &SeparabilityModel) -> Result<ConeProgram> {
    build_dual(rho, m, Quantifier::Random)
}

/// minimize Tr(W rho) over W in the dual cone with W <= I.
pub fn gr_dual_program(rho: &DensityMatrix, m: &SeparabilityModel) -> Result<ConeProgram> {
    build_dual(rho, m, Quantifier::Generalized)
}

pub fn build_rr_primal(rho: &DensityMatrix, m: &SeparabilityModel) -> Result<SdpProblem> {
    Ok(rr_primal_program(rho, m)?.problem)
}

pub fn build_gr_primal(rho: &DensityMatrix, m: &SeparabilityModel) -> Result<SdpProblem> {
    Ok(gr_primal_program(rho, m)?.problem)
}

pub fn build_rr_dual(rho: &DensityMatrix, m: &SeparabilityModel) -> Result<SdpProblem> {
    Ok(rr_dual_program(rho, m)?.problem)
}

pub fn build_gr_dual(rho: &DensityMatrix, m: &SeparabilityModel) -> Result<SdpProblem> {
    Ok(gr_dual_program(rho, m)?.problem)
}

/// Reads the witness off an optimal solution of a witness-side program,
/// applies the requested normalization (rescaling the certificate along
/// with it) and re-verifies the result.
pub fn extract_witness(program: &ConeProgram, sol: &SdpSolution, normalization: Normalization) -> Result<Witness> {
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Solver {
            status: sol.status,
            detail: "witness extraction needs an optimal dual solution".into(),
        });
    }
    let (w, cert) = program.raw_witness(sol)?;
    let (recon, _) = cert.residuals(&w);
    if recon > CERTIFICATE_TOL {
        return Err(Error::Certificate(format!(
            "certificate reconstruction residual {recon:e} exceeds {CERTIFICATE_TOL:e}"
        )));
    }
    let d = w.dim() as f64;
    let scale = match normalization {
        Normalization::TraceD => {
            let t = w.trace();
            if t.abs() < 1e-300 {
                return Err(Error::Certificate("witness has zero trace".into()));
            }
            d / t
        }
        Normalization::BoundedByIdentity => {
            let top = w.max_eigenvalue();
            if top > 1.0 {
                1.0 / top
            } else {
                1.0
            }
        }
    };
    let witness = Witness {
        matrix: w.scale(scale),
        normalization,
        certificate: Some(cert.scaled(scale)),
    };
    witness.verify()?;
    Ok(witness)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Membership {
    Inside,
    /// Most negative violation measure.
    Outside(f64),
}

impl Membership {
    pub fn is_inside(&self) -> bool {
        matches!(self, Membership::Inside)
    }
}

/// Violation measure of `sigma` with respect to the model: the smallest
/// eigenvalue over `sigma` and its partial transposes for the intersection
/// models, and `-R_r/d` from a random-robustness solve for the mixture model.
/// Nonnegative values mean membership.
pub fn membership_violation(sigma: &DensityMatrix, m: &SeparabilityModel) -> Result<f64> {
    m.check_state(sigma)?;
    if m.is_mixture() {
        let prog = rr_primal_program(sigma, m)?;
        let opts = SolverOptions {
            tol: 1e-9,
            gap_tol: 1e-9,
            ..SolverOptions::default()
        };
        let sol = prog.solve(&opts);
        if sol.status != SolveStatus::Optimal {
            return Err(Error::Solver {
                status: sol.status,
                detail: "membership feasibility program".into(),
            });
        }
        let s = prog.primal_parts(&sol)?.value;
        return Ok(-s.max(0.0) / m.dim() as f64);
    }
    let mut worst = sigma.matrix().min_eigenvalue();
    for cut in m.bipartitions() {
        worst = worst.min(m.pt(sigma.matrix(), cut).min_eigenvalue());
    }
    Ok(worst)
}

pub fn membership_check(sigma: &DensityMatrix, m: &SeparabilityModel) -> Result<Membership> {
    membership_check_with(sigma, m, MEMBERSHIP_TOL)
}

pub fn membership_check_with(sigma: &DensityMatrix, m: &SeparabilityModel, tol: f64) -> Result<Membership> {
    let v = membership_violation(sigma, m)?;
    Ok(if v >= -tol {
        Membership::Inside
    } else {
        Membership::Outside(v)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{ket_bell, ket_ghz};

    fn opts() -> SolverOptions {
        SolverOptions {
            tol: 1e-9,
            gap_tol: 1e-9,
            ..SolverOptions::default()
        }
    }

    #[test]
    fn program_sizes() {
        let rho = DensityMatrix::maximally_mixed(&[2, 2, 2]);
        let inter = SeparabilityModel::intersect_ppt(&[2, 2, 2]).unwrap();
        let mix = SeparabilityModel::mixture_ppt(&[2, 2, 2]).unwrap();
        assert_eq!(build_rr_primal(&rho, &inter).unwrap().constraints().len(), 192);
        assert_eq!(build_rr_primal(&rho, &mix).unwrap().constraints().len(), 256);
        assert_eq!(build_rr_dual(&rho, &inter).unwrap().constraints().len(), 1);
        assert_eq!(build_rr_dual(&rho, &mix).unwrap().constraints().len(), 129);
        assert_eq!(build_gr_dual(&rho, &inter).unwrap().constraints().len(), 64);
        assert_eq!(build_gr_dual(&rho, &mix).unwrap().constraints().len(), 192);
    }

    #[test]
    fn exact_model_dims() {
        assert!(SeparabilityModel::exact_two_qubit(&[2, 2]).is_ok());
        assert!(SeparabilityModel::exact_two_qubit(&[3, 2]).is_ok());
        assert!(SeparabilityModel::exact_two_qubit(&[2, 2, 2]).is_err());
        assert!(SeparabilityModel::exact_two_qubit(&[3, 3]).is_err());
    }

    #[test]
    fn bell_random_programs() {
        let rho = ket_bell().density();
        let m = SeparabilityModel::exact_two_qubit(&[2, 2]).unwrap();
        let primal = rr_primal_program(&rho, &m).unwrap();
        let sol = primal.solve(&opts());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((primal.primal_parts(&sol).unwrap().value - 2.0).abs() < 1e-6);

        let dual = rr_dual_program(&rho, &m).unwrap();
        let sol = dual.solve(&opts());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.primal_obj + 2.0).abs() < 1e-6);
        let w = extract_witness(&dual, &sol, Normalization::TraceD).unwrap();
        assert!((w.matrix.trace() - 4.0).abs() < 1e-8);
        assert!((w.expectation(&rho) + 2.0).abs() < 1e-6);
    }

    #[test]
    fn ghz_intersect_random_primal() {
        let rho = ket_ghz().density();
        let m = SeparabilityModel::intersect_ppt(&[2, 2, 2]).unwrap();
        let prog = rr_primal_program(&rho, &m).unwrap();
        let sol = prog.solve(&opts());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((prog.primal_parts(&sol).unwrap().value - 4.0).abs() < 1e-6);
    }

    #[test]
    fn membership_examples() {
        let m = SeparabilityModel::exact_two_qubit(&[2, 2]).unwrap();
        assert!(membership_check(&DensityMatrix::maximally_mixed(&[2, 2]), &m)
            .unwrap()
            .is_inside());
        match membership_check(&ket_bell().density(), &m).unwrap() {
            Membership::Outside(v) => assert!((v + 0.5).abs() < 1e-12),
            Membership::Inside => panic!("Bell state reported separable"),
        }
    }

    #[test]
    fn mixture_members_factorize_across_a_cut() {
        use rand::SeedableRng;
        let m = SeparabilityModel::mixture_ppt(&[2, 2, 2]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let k = m.sample_member(&mut rng);
            let rho = k.density();
            let pure_cut = m
                .bipartitions()
                .iter()
                .any(|c| crate::states::partial_trace(&rho, c.members()).unwrap().purity() > 1.0 - 1e-10);
            assert!(pure_cut);
        }
    }
}
