//! Simulated local-Pauli tomography: shot-noise counts, Pauli expectation
//! estimates, linear-inversion reconstruction and witness estimates.
//!
//! Outcome bit 0 is the +1 eigenvector of the measured axis and party 0 is
//! the most significant bit of the outcome index.

use std::fmt::{self, Write as _};
use std::io::{BufRead, Write};

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{psd_project, tensor_product, ComplexMatrix, HermitianMatrix};
use crate::robustness::{robustness_with, RobustnessOptions};
use crate::separability::{Quantifier, SeparabilityModel, Witness};
use crate::states::{DensityMatrix, StateFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    /// Rows are the bras of the +1 and -1 eigenvectors.
    fn rotation(self) -> ComplexMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (one, i) = (C64::new(h, 0.0), C64::new(0.0, h));
        let data = match self {
            Axis::X => vec![one, one, one, -one],
            Axis::Y => vec![one, -i, one, i],
            Axis::Z => return ComplexMatrix::identity(2),
        };
        ComplexMatrix::from_vec(2, data).expect("2x2")
    }
}

/// One Pauli axis per qubit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MeasurementSetting(Vec<Axis>);

impl MeasurementSetting {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidArgument("a setting needs at least one qubit".into()));
        }
        Ok(Self(axes))
    }

    pub fn axes(&self) -> &[Axis] {
        &self.0
    }

    pub fn qubits(&self) -> usize {
        self.0.len()
    }

    /// Position in the base-3 ordering of [`all_settings`].
    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, a| acc * 3 + a.index())
    }

    fn rotation(&self) -> ComplexMatrix {
        self.0
            .iter()
            .map(|a| a.rotation())
            .reduce(|acc, u| tensor_product(&acc, &u))
            .expect("nonempty")
    }
}

impl fmt::Display for MeasurementSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.0 {
            write!(f, "{a:?}")?;
        }
        Ok(())
    }
}

/// All `3^n` settings, first qubit slowest.
pub fn all_settings(n: usize) -> Vec<MeasurementSetting> {
    (0..3usize.pow(n as u32))
        .map(|mut idx| {
            let mut axes = vec![Axis::X; n];
            for slot in axes.iter_mut().rev() {
                *slot = Axis::ALL[idx % 3];
                idx /= 3;
            }
            MeasurementSetting(axes)
        })
        .collect()
}

/// Counts of one setting. With `shots == 0` (exact mode) `counts` is all
/// zero and `probabilities` carries the Born-rule distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsRecord {
    pub setting: MeasurementSetting,
    pub shots: u64,
    pub counts: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub probabilities: Option<Vec<f64>>,
}

impl CountsRecord {
    pub fn is_exact(&self) -> bool {
        self.shots == 0
    }

    fn validate(&self) -> Result<()> {
        let outcomes = 1usize << self.setting.qubits();
        if self.counts.len() != outcomes {
            return Err(Error::InvalidArgument(format!(
                "setting {} needs {outcomes} counts, got {}",
                self.setting,
                self.counts.len()
            )));
        }
        if self.counts.iter().sum::<u64>() != self.shots {
            return Err(Error::InvalidArgument(format!(
                "counts of setting {} do not sum to shots",
                self.setting
            )));
        }
        if self.is_exact() {
            match &self.probabilities {
                Some(p) if p.len() == outcomes => {}
                _ => return Err(Error::InvalidArgument("exact-mode record without probabilities".into())),
            }
        }
        Ok(())
    }

    /// Outcome frequencies (probabilities in exact mode).
    fn frequencies(&self) -> Vec<f64> {
        match (&self.probabilities, self.shots) {
            (Some(p), 0) => p.clone(),
            _ => self.counts.iter().map(|&c| c as f64 / self.shots as f64).collect(),
        }
    }
}

fn qubit_count(dims: &[usize]) -> Result<usize> {
    if dims.iter().any(|&d| d != 2) {
        return Err(Error::InvalidArgument(format!(
            "tomography needs qubits, got dims {dims:?}"
        )));
    }
    Ok(dims.len())
}

/// Born-rule outcome probabilities of `setting` on `rho`.
pub fn outcome_probabilities(rho: &DensityMatrix, setting: &MeasurementSetting) -> Result<Vec<f64>> {
    let n = qubit_count(rho.dims())?;
    if setting.qubits() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: setting.qubits(),
        });
    }
    let rotated = rho.matrix().conjugate_by(&setting.rotation());
    Ok((0..rotated.dim()).map(|k| rotated.get(k, k).re.max(0.0)).collect())
}

/// Draws `shots` outcomes of `setting`. Each setting uses its own ChaCha
/// stream of `seed`, so records of different settings are independent and
/// do not depend on the order they are simulated in. `shots == 0` returns
/// the exact distribution instead.
pub fn simulate_counts(
    rho: &DensityMatrix,
    setting: &MeasurementSetting,
    shots: u64,
    seed: u64,
) -> Result<CountsRecord> {
    let probs = outcome_probabilities(rho, setting)?;
    if shots == 0 {
        return Ok(CountsRecord {
            setting: setting.clone(),
            shots: 0,
            counts: vec![0; probs.len()],
            probabilities: Some(probs),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(setting.index() as u64);
    let total: f64 = probs.iter().sum();
    let mut counts = vec![0u64; probs.len()];
    let mut left = shots;
    let mut mass = total;
    for (k, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == probs.len() || mass <= 0.0 {
            counts[k] = left;
            break;
        }
        let frac = (p / mass).clamp(0.0, 1.0);
        let draw = Binomial::new(left, frac)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .sample(&mut rng);
        counts[k] = draw;
        left -= draw;
        mass -= p;
    }
    Ok(CountsRecord {
        setting: setting.clone(),
        shots,
        counts,
        probabilities: None,
    })
}

/// Records for all `3^n` settings with `shots` each.
pub fn simulate_tomography(rho: &DensityMatrix, shots: u64, seed: u64) -> Result<Vec<CountsRecord>> {
    let n = qubit_count(rho.dims())?;
    all_settings(n)
        .iter()
        .map(|s| simulate_counts(rho, s, shots, seed))
        .collect()
}

pub fn write_counts_jsonl<W: Write>(records: &[CountsRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    Ok(())
}

pub fn read_counts_jsonl<R: BufRead>(input: R) -> Result<Vec<CountsRecord>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line.map_err(|e| Error::InvalidArgument(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let r: CountsRecord = serde_json::from_str(&line)?;
        r.validate()?;
        out.push(r);
    }
    Ok(out)
}

/// Pauli string, one of `I X Y Z` (codes 0..4) per qubit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString(Vec<u8>);

impl PauliString {
    pub fn new(codes: Vec<u8>) -> Result<Self> {
        if codes.is_empty() || codes.iter().any(|&c| c > 3) {
            return Err(Error::InvalidArgument(format!("bad pauli codes {codes:?}")));
        }
        Ok(Self(codes))
    }

    pub fn parse(s: &str) -> Result<Self> {
        let codes = s
            .chars()
            .map(|c| match c {
                'I' => Ok(0),
                'X' => Ok(1),
                'Y' => Ok(2),
                'Z' => Ok(3),
                _ => Err(Error::InvalidArgument(format!("bad pauli label {s:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(codes)
    }

    /// Base-4 index, first qubit slowest.
    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &c| acc * 4 + c as usize)
    }

    pub fn from_index(mut idx: usize, n: usize) -> Self {
        let mut codes = vec![0u8; n];
        for slot in codes.iter_mut().rev() {
            *slot = (idx % 4) as u8;
            idx /= 4;
        }
        Self(codes)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn matrix(&self) -> ComplexMatrix {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        self.0
            .iter()
            .map(|&c| {
                let data = match c {
                    0 => vec![l, o, o, l],
                    1 => vec![o, l, l, o],
                    2 => vec![o, -i, i, o],
                    _ => vec![l, o, o, -l],
                };
                ComplexMatrix::from_vec(2, data).expect("2x2")
            })
            .reduce(|acc, p| tensor_product(&acc, &p))
            .expect("nonempty")
    }

    fn compatible(&self, setting: &MeasurementSetting) -> bool {
        self.0
            .iter()
            .zip(setting.axes())
            .all(|(&c, a)| c == 0 || c as usize == a.index() + 1)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &c in &self.0 {
            f.write_char(['I', 'X', 'Y', 'Z'][c as usize])?;
        }
        Ok(())
    }
}

/// `Re Tr(A P)` for Hermitian `A`.
fn trace_with_pauli(a: &HermitianMatrix, p: &ComplexMatrix) -> f64 {
    let d = a.dim();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            acc += (a.get(i, j) * p.get(j, i)).re;
        }
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliEstimate {
    pub value: f64,
    pub stderr: f64,
    /// Shots pooled into the estimate; 0 in exact mode.
    pub shots: u64,
}

/// Pauli expectations indexed by [`PauliString::index`]; `None` where no
/// record was compatible.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTable {
    qubits: usize,
    entries: Vec<Option<PauliEstimate>>,
}

impl PauliTable {
    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn get(&self, p: &PauliString) -> Option<PauliEstimate> {
        self.entries.get(p.index()).copied().flatten()
    }

    pub fn is_complete(&self) -> bool {
        self.entries.iter().all(Option::is_some)
    }

    pub fn iter(&self) -> impl Iterator<Item = (PauliString, Option<PauliEstimate>)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, e)| (PauliString::from_index(i, self.qubits), *e))
    }

    /// Exact table `Tr(rho P)`.
    pub fn exact(rho: &DensityMatrix) -> Result<Self> {
        let n = qubit_count(rho.dims())?;
        let entries = (0..4usize.pow(n as u32))
            .map(|i| {
                let p = PauliString::from_index(i, n);
                Some(PauliEstimate {
                    value: trace_with_pauli(rho.matrix(), &p.matrix()),
                    stderr: 0.0,
                    shots: 0,
                })
            })
            .collect();
        Ok(Self { qubits: n, entries })
    }

    fn require(&self, p: &PauliString) -> Result<PauliEstimate> {
        self.get(p)
            .ok_or_else(|| Error::InvalidArgument(format!("no measured expectation for {p}")))
    }
}

/// Pools every compatible record into each Pauli-string estimate.
/// Standard error is `sqrt((1 - e^2) / N)` with `N` the pooled shots, zero
/// in exact mode. Covariances between strings sharing a setting are ignored.
pub fn estimate_pauli_expectations(records: &[CountsRecord]) -> Result<PauliTable> {
    let n = records
        .first()
        .map(|r| r.setting.qubits())
        .ok_or_else(|| Error::InvalidArgument("no counts records".into()))?;
    for r in records {
        if r.setting.qubits() != n {
            return Err(Error::InvalidArgument("records with different qubit counts".into()));
        }
        r.validate()?;
    }
    if records.iter().any(|r| r.is_exact()) && records.iter().any(|r| !r.is_exact()) {
        return Err(Error::InvalidArgument("cannot pool exact and sampled records".into()));
    }
    let freqs: Vec<Vec<f64>> = records.iter().map(|r| r.frequencies()).collect();

    let mut entries = Vec::with_capacity(4usize.pow(n as u32));
    for idx in 0..4usize.pow(n as u32) {
        let p = PauliString::from_index(idx, n);
        if p.is_identity() {
            entries.push(Some(PauliEstimate {
                value: 1.0,
                stderr: 0.0,
                shots: 0,
            }));
            continue;
        }
        let mut weighted = 0.0;
        let mut weight = 0.0;
        let mut shots = 0u64;
        for (r, f) in records.iter().zip(&freqs) {
            if !p.compatible(&r.setting) {
                continue;
            }
            let parity: f64 = f
                .iter()
                .enumerate()
                .map(|(k, fk)| {
                    let flips =
                        p.0.iter()
                            .enumerate()
                            .filter(|&(q, &c)| c != 0 && (k >> (n - 1 - q)) & 1 == 1)
                            .count();
                    if flips % 2 == 0 {
                        *fk
                    } else {
                        -*fk
                    }
                })
                .sum();
            // exact records all carry the same distribution; weight them equally
            let w = if r.is_exact() { 1.0 } else { r.shots as f64 };
            weighted += w * parity;
            weight += w;
            shots += r.shots;
        }
        if weight == 0.0 {
            entries.push(None);
            continue;
        }
        let value = weighted / weight;
        let stderr = if shots == 0 {
            0.0
        } else {
            ((1.0 - value * value).max(0.0) / shots as f64).sqrt()
        };
        entries.push(Some(PauliEstimate { value, stderr, shots }));
    }
    Ok(PauliTable { qubits: n, entries })
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(a) b sqrt(a)))^2`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let sqrt_a = a.matrix().eig().reconstruct_with(|l| l.max(0.0).sqrt());
    let inner = (&(sqrt_a.matrix() * b.matrix().matrix()) * sqrt_a.matrix()).hermitian_part();
    let s: f64 = inner.eig().eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok(s * s)
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionResult {
    pub estimate: DensityMatrix,
    /// Linear-inversion matrix before projection; may be indefinite.
    pub raw: HermitianMatrix,
    pub fidelity: Option<f64>,
    pub total_shots: u64,
}

/// Linear inversion `rho = 2^-n sum_P e_P P`, then eigenvalue clipping
/// with trace renormalization.
pub fn reconstruct(table: &PauliTable, target: Option<&DensityMatrix>) -> Result<ReconstructionResult> {
    if !table.is_complete() {
        let missing = table.iter().find(|(_, e)| e.is_none()).map(|(p, _)| p.to_string());
        return Err(Error::InvalidArgument(format!(
            "incomplete pauli table, missing {}",
            missing.unwrap_or_default()
        )));
    }
    let n = table.qubits;
    let d = 1usize << n;
    let mut acc = ComplexMatrix::zeros(d);
    for (p, e) in table.iter() {
        let e = e.expect("complete");
        acc = &acc + &p.matrix().scale_real(e.value / d as f64);
    }
    let raw = acc.hermitian_part();
    let projected = psd_project(&raw, true)?;
    let estimate = DensityMatrix::new(projected, vec![2; n])?;
    let fidelity = target.map(|t| fidelity(t, &estimate)).transpose()?;
    // each setting contributes once to the full-weight strings
    let total_shots = table
        .iter()
        .filter(|(p, _)| p.0.iter().all(|&c| c != 0))
        .filter_map(|(_, e)| e.map(|e| e.shots))
        .sum();
    Ok(ReconstructionResult {
        estimate,
        raw,
        fidelity,
        total_shots,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessEstimate {
    /// Estimated `<W>`.
    pub estimate: f64,
    pub stderr: f64,
    /// `-<W> - stderr > 0`.
    pub detected: bool,
}

/// `<W>` from measured Pauli expectations, `W = sum_P w_P P` with
/// `w_P = Tr(W P) / 2^n`; errors propagated as if uncorrelated.
pub fn witness_expectation(table: &PauliTable, w: &Witness) -> Result<WitnessEstimate> {
    let n = table.qubits;
    let d = 1usize << n;
    if w.matrix().dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: w.matrix().dim(),
        });
    }
    let mut estimate = 0.0;
    let mut var = 0.0;
    for idx in 0..4usize.pow(n as u32) {
        let p = PauliString::from_index(idx, n);
        let coeff = trace_with_pauli(w.matrix(), &p.matrix()) / d as f64;
        if coeff.abs() < 1e-15 {
            continue;
        }
        let e = table.require(&p)?;
        estimate += coeff * e.value;
        var += coeff * coeff * e.stderr * e.stderr;
    }
    let stderr = var.sqrt();
    Ok(WitnessEstimate {
        estimate,
        stderr,
        detected: -estimate - stderr > 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub q: f64,
    /// `-<W>` measured with the witness optimal for the reconstruction.
    pub estimate: f64,
    pub stderr: f64,
    /// Noiseless `-Tr(W rho(q))` with `W` optimal for `rho(q)`; equals the
    /// robustness up to the solver's duality gap.
    pub truth: f64,
    pub shots: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTable {
    pub family: String,
    pub quantifier: Quantifier,
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentTable {
    pub fn grid(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.q).collect()
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.estimate).collect()
    }

    pub fn truths(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.truth).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("q,estimate,stderr,truth,N,seed\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:.10},{:.10},{:.10},{},{}",
                r.q, r.estimate, r.stderr, r.truth, r.shots, r.seed
            );
        }
        s
    }
}

/// One simulated experiment at `q`: tomography of `rho(q)`, the optimal
/// witness of the reconstruction, and its measured expectation.
pub fn experiment_point(
    rho: &DensityMatrix,
    quantifier: Quantifier,
    m: &SeparabilityModel,
    shots: u64,
    seed: u64,
    opts: &RobustnessOptions,
) -> Result<(WitnessEstimate, ReconstructionResult)> {
    let records = simulate_tomography(rho, shots, seed)?;
    let table = estimate_pauli_expectations(&records)?;
    let rec = reconstruct(&table, Some(rho))?;
    let fit = robustness_with(&rec.estimate, m, quantifier, opts)?;
    let est = witness_expectation(&table, &fit.witness)?;
    Ok((est, rec))
}

/// Runs [`experiment_point`] on `grid_points` uniform values of q; point
/// `i` uses seed `seed + i`.
pub fn end_to_end_experiment(
    f: &StateFamily,
    quantifier: Quantifier,
    m: &SeparabilityModel,
    grid_points: usize,
    shots: u64,
    seed: u64,
    opts: &RobustnessOptions,
) -> Result<ExperimentTable> {
    if grid_points < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 grid points, got {grid_points}"
        )));
    }
    qubit_count(f.dims())?;
    let grid: Vec<f64> = (0..grid_points).map(|i| i as f64 / (grid_points - 1) as f64).collect();
    let rows = grid
        .par_iter()
        .enumerate()
        .map(|(i, &q)| {
            let rho = f.at(q)?;
            let point_seed = seed.wrapping_add(i as u64);
            let (est, _) = experiment_point(&rho, quantifier, m, shots, point_seed, opts)?;
            let truth = robustness_with(&rho, m, quantifier, opts)?.dual_value;
            Ok(ExperimentRow {
                q,
                estimate: -est.estimate,
                stderr: est.stderr,
                truth,
                shots,
                seed: point_seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentTable {
        family: f.name().to_string(),
        quantifier,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{ket_bell, Ket};

    fn setting(s: &str) -> MeasurementSetting {
        MeasurementSetting::new(
            s.chars()
                .map(|c| match c {
                    'X' => Axis::X,
                    'Y' => Axis::Y,
                    _ => Axis::Z,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn eigenstate_counts() {
        let zero = Ket::basis(0, vec![2]).unwrap().density();
        let r = simulate_counts(&zero, &setting("Z"), 500, 3).unwrap();
        assert_eq!(r.counts, vec![500, 0]);
    }

    #[test]
    fn bell_zz_exact() {
        let bell = ket_bell().density();
        let r = simulate_counts(&bell, &setting("ZZ"), 0, 0).unwrap();
        let p = r.probabilities.unwrap();
        for (a, b) in p.iter().zip([0.5, 0.0, 0.0, 0.5]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn y_plus_eigenstate() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let ket = Ket::new(vec![C64::new(h, 0.0), C64::new(0.0, h)], vec![2]).unwrap();
        let p = outcome_probabilities(&ket.density(), &setting("Y")).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12);
    }

    #[test]
    fn bell_pauli_signs() {
        let bell = ket_bell().density();
        let t = estimate_pauli_expectations(&simulate_tomography(&bell, 0, 0).unwrap()).unwrap();
        let v = |s: &str| t.get(&PauliString::parse(s).unwrap()).unwrap().value;
        assert!((v("ZZ") - 1.0).abs() < 1e-12);
        assert!((v("XX") - 1.0).abs() < 1e-12);
        assert!((v("YY") + 1.0).abs() < 1e-12);
        assert!(v("ZI").abs() < 1e-12);
    }

    #[test]
    fn pooled_shots() {
        let rho = DensityMatrix::maximally_mixed(&[2, 2]);
        let t = estimate_pauli_expectations(&simulate_tomography(&rho, 100, 1).unwrap()).unwrap();
        assert_eq!(t.get(&PauliString::parse("ZI").unwrap()).unwrap().shots, 300);
        assert_eq!(t.get(&PauliString::parse("XY").unwrap()).unwrap().shots, 100);
    }

    #[test]
    fn exact_reconstruction() {
        let rho = crate::states::random_density(&[2, 2, 2], 3, 11).unwrap();
        let t = estimate_pauli_expectations(&simulate_tomography(&rho, 0, 0).unwrap()).unwrap();
        let rec = reconstruct(&t, Some(&rho)).unwrap();
        assert!(rec.estimate.trace_distance(&rho) < 1e-10);
        assert!((rec.fidelity.unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn incomplete_table_rejected() {
        let bell = ket_bell().density();
        let recs = vec![simulate_counts(&bell, &setting("ZZ"), 0, 0).unwrap()];
        let t = estimate_pauli_expectations(&recs).unwrap();
        assert!(reconstruct(&t, None).is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let bell = ket_bell().density();
        let recs = simulate_tomography(&bell, 50, 9).unwrap();
        let mut buf = Vec::new();
        write_counts_jsonl(&recs, &mut buf).unwrap();
        let back = read_counts_jsonl(buf.as_slice()).unwrap();
        assert_eq!(recs, back);
    }

    #[test]
    fn non_qubit_rejected() {
        let rho = DensityMatrix::maximally_mixed(&[3]);
        assert!(simulate_counts(&rho, &setting("Z"), 10, 0).is_err());
    }
}
