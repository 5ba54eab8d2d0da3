//! Multi-party states, the named three-qubit states, bipartitions and the
//! partial operations on them.
//!
//! Index convention: party 0 is the most significant digit of the
//! computational-basis index, so `|abc>` has index `a*d1*d2 + b*d2 + c`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, HermitianMatrix, C64};

pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;
pub const NORM_TOL: f64 = 1e-12;

/// Unit-trace positive semidefinite matrix on a tensor product of
/// subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: HermitianMatrix,
    dims: Vec<usize>,
}

impl DensityMatrix {
    pub fn new(matrix: HermitianMatrix, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, matrix.dim())?;
        let tr = matrix.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min = matrix.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("minimum eigenvalue {min:e} is negative")));
        }
        Ok(Self { matrix, dims })
    }

    /// Wraps a matrix known to be a state by construction, skipping the
    /// eigenvalue check.
    pub(crate) fn new_unchecked(matrix: HermitianMatrix, dims: Vec<usize>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), matrix.dim());
        Self { matrix, dims }
    }

    pub fn maximally_mixed(dims: &[usize]) -> Self {
        let d: usize = dims.iter().product();
        Self::new_unchecked(HermitianMatrix::identity(d).scale(1.0 / d as f64), dims.to_vec())
    }

    pub fn from_ket(ket: &Ket) -> Self {
        Self::new_unchecked(HermitianMatrix::projector(&ket.amplitudes), ket.dims.clone())
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn party_count(&self) -> usize {
        self.dims.len()
    }

    pub fn purity(&self) -> f64 {
        crate::numerics::hs_inner(&self.matrix, &self.matrix).unwrap()
    }

    /// Convex combination `a*self + (1-a)*other`.
    pub fn mix(&self, a: f64, other: &DensityMatrix) -> Result<DensityMatrix> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::InvalidArgument(format!("mixing weight {a} outside [0,1]")));
        }
        Ok(Self::new_unchecked(
            self.matrix.lincomb(a, &other.matrix, 1.0 - a),
            self.dims.clone(),
        ))
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let diff = self.matrix.sub(&other.matrix);
        0.5 * diff.eig().eigenvalues.iter().map(|l| l.abs()).sum::<f64>()
    }

    /// <psi|rho|psi>
    pub fn fidelity_with_ket(&self, ket: &Ket) -> f64 {
        self.matrix.expectation(&ket.amplitudes)
    }
}

fn check_dims(dims: &[usize], total: usize) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidArgument("subsystem dimensions must be positive".into()));
    }
    let prod: usize = dims.iter().product();
    if prod != total {
        return Err(Error::DimensionMismatch {
            expected: total,
            found: prod,
        });
    }
    Ok(())
}

/// Normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amplitudes: Vec<C64>,
    dims: Vec<usize>,
}

impl Ket {
    pub fn new(amplitudes: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, amplitudes.len())?;
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("ket has squared norm {norm}")));
        }
        Ok(Self { amplitudes, dims })
    }

    /// Normalizes the input first.
    pub fn normalized(amplitudes: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Self::new(amplitudes.into_iter().map(|z| z / norm).collect(), dims)
    }

    pub fn basis(index: usize, dims: Vec<usize>) -> Result<Self> {
        let d: usize = dims.iter().product();
        if index >= d {
            return Err(Error::InvalidArgument(format!("basis index {index} >= {d}")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); d];
        amps[index] = C64::new(1.0, 0.0);
        Self::new(amps, dims)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn inner(&self, other: &Ket) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_ket(self)
    }
}

fn real_ket(entries: &[(usize, f64)], dims: Vec<usize>) -> Ket {
    let d: usize = dims.iter().product();
    let mut amps = vec![C64::new(0.0, 0.0); d];
    for &(i, a) in entries {
        amps[i] = C64::new(a, 0.0);
    }
    Ket { amplitudes: amps, dims }
}

/// (|000> + |111>)/sqrt(2)
pub fn ket_ghz() -> Ket {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    real_ket(&[(0, a), (7, a)], vec![2, 2, 2])
}

/// (|001> + |010> + |100>)/sqrt(3)
pub fn ket_w() -> Ket {
    let a = 1.0 / 3f64.sqrt();
    real_ket(&[(1, a), (2, a), (4, a)], vec![2, 2, 2])
}

/// (|00> + |11>)/sqrt(2)
pub fn ket_bell() -> Ket {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    real_ket(&[(0, a), (3, a)], vec![2, 2])
}

/// `q |GHZ><GHZ| + (1-q) |W><W|`
pub fn ghz_w_family(q: f64) -> Result<DensityMatrix> {
    check_unit_interval("q", q)?;
    let ghz = HermitianMatrix::projector(ket_ghz().amplitudes());
    let w = HermitianMatrix::projector(ket_w().amplitudes());
    Ok(DensityMatrix::new_unchecked(ghz.lincomb(q, &w, 1.0 - q), vec![2, 2, 2]))
}

/// `p rho + (1-p) I/d`
pub fn white_noise_mix(rho: &DensityMatrix, p: f64) -> Result<DensityMatrix> {
    check_unit_interval("p", p)?;
    rho.mix(p, &DensityMatrix::maximally_mixed(rho.dims()))
}

fn check_unit_interval(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidArgument(format!("{name} = {v} outside [0,1]")));
    }
    Ok(())
}

/// A cut of `n` parties into `members` and its complement. The canonical
/// representative always contains party 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bipartition {
    party_count: usize,
    members: Vec<usize>,
}

impl Bipartition {
    /// Builds the canonical form of the cut `members | rest`.
    pub fn new(party_count: usize, members: &[usize]) -> Result<Self> {
        let mut m: Vec<usize> = members.to_vec();
        m.sort_unstable();
        m.dedup();
        if m.is_empty() || m.len() >= party_count || m.iter().any(|&p| p >= party_count) {
            return Err(Error::InvalidArgument(format!(
                "{members:?} is not a nonempty proper subset of {party_count} parties"
            )));
        }
        if m[0] != 0 {
            m = (0..party_count).filter(|p| !m.contains(p)).collect();
        }
        Ok(Self {
            party_count,
            members: m,
        })
    }

    pub fn party_count(&self) -> usize {
        self.party_count
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn complement(&self) -> Vec<usize> {
        (0..self.party_count).filter(|p| !self.members.contains(p)).collect()
    }
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = |ps: &[usize]| -> String { ps.iter().map(|&p| (b'A' + p as u8) as char).collect() };
        write!(f, "{}|{}", label(&self.members), label(&self.complement()))
    }
}

/// All `2^(n-1) - 1` canonical bipartitions, ordered lexicographically on
/// their member sets.
pub fn enumerate_bipartitions(n: usize) -> Result<Vec<Bipartition>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 parties, got {n}")));
    }
    let mut cuts = Vec::new();
    // subsets of {1..n-1} joined with party 0, excluding the full set
    for mask in 0u64..(1u64 << (n - 1)) {
        let mut members = vec![0];
        for p in 1..n {
            if mask & (1 << (p - 1)) != 0 {
                members.push(p);
            }
        }
        if members.len() < n {
            cuts.push(Bipartition {
                party_count: n,
                members,
            });
        }
    }
    cuts.sort();
    Ok(cuts)
}

fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
    out
}

fn undigits(ds: &[usize], dims: &[usize]) -> usize {
    ds.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// Index map (i, j) -> (i', j') of the partial transpose on `parties`.
pub(crate) fn pt_index_map(dims: &[usize], parties: &[usize]) -> Vec<(usize, usize)> {
    let d: usize = dims.iter().product();
    let all: Vec<Vec<usize>> = (0..d).map(|i| digits(i, dims)).collect();
    let mut map = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let mut di = all[i].clone();
            let mut dj = all[j].clone();
            for &p in parties {
                std::mem::swap(&mut di[p], &mut dj[p]);
            }
            map.push((undigits(&di, dims), undigits(&dj, dims)));
        }
    }
    map
}

/// Partial transpose of an arbitrary Hermitian matrix on the given parties.
pub fn partial_transpose_matrix(m: &HermitianMatrix, dims: &[usize], parties: &[usize]) -> Result<HermitianMatrix> {
    check_dims(dims, m.dim())?;
    if parties.iter().any(|&p| p >= dims.len()) {
        return Err(Error::InvalidArgument(format!(
            "parties {parties:?} out of range for {} subsystems",
            dims.len()
        )));
    }
    let d = m.dim();
    let map = pt_index_map(dims, parties);
    let mut out = ComplexMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            let (a, b) = map[i * d + j];
            out.set(a, b, m.get(i, j));
        }
    }
    Ok(out.hermitian_part())
}

/// Partial transpose of a state on the parties of `cut`.
pub fn partial_transpose(rho: &DensityMatrix, cut: &Bipartition) -> Result<HermitianMatrix> {
    if cut.party_count() != rho.party_count() {
        return Err(Error::DimensionMismatch {
            expected: rho.party_count(),
            found: cut.party_count(),
        });
    }
    partial_transpose_matrix(rho.matrix(), rho.dims(), cut.members())
}

/// Reduced state on the parties in `keep` (order of `keep` is ignored; the
/// result keeps the original party order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let dims = rho.dims();
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.is_empty() {
        return Err(Error::InvalidArgument("keep set is empty".into()));
    }
    if keep.iter().any(|&p| p >= dims.len()) {
        return Err(Error::InvalidArgument(format!("keep set {keep:?} out of range")));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|p| !keep.contains(p)).collect();
    let kdims: Vec<usize> = keep.iter().map(|&p| dims[p]).collect();
    let tdims: Vec<usize> = traced.iter().map(|&p| dims[p]).collect();
    let dk: usize = kdims.iter().product();
    let dt: usize = tdims.iter().product();
    let full_index = |k: usize, t: usize| {
        let kd = digits(k, &kdims);
        let td = digits(t, &tdims);
        let mut all = vec![0; dims.len()];
        for (slot, &p) in keep.iter().enumerate() {
            all[p] = kd[slot];
        }
        for (slot, &p) in traced.iter().enumerate() {
            all[p] = td[slot];
        }
        undigits(&all, dims)
    };
    let m = ComplexMatrix::from_fn(dk, |a, b| {
        (0..dt)
            .map(|t| rho.matrix().get(full_index(a, t), full_index(b, t)))
            .sum()
    });
    Ok(DensityMatrix::new_unchecked(m.hermitian_part(), kdims))
}

/// Standard complex Gaussian sample (independent N(0,1) real and imaginary parts).
pub(crate) fn complex_gaussian<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random unit vector of length `d`.
pub fn random_unit_vector<R: Rng>(d: usize, rng: &mut R) -> Vec<C64> {
    let v: Vec<C64> = (0..d).map(|_| complex_gaussian(rng)).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// Haar-random product ket over the given subsystems.
pub fn random_product_ket<R: Rng>(dims: &[usize], rng: &mut R) -> Ket {
    let mut amps = vec![C64::new(1.0, 0.0)];
    for &d in dims {
        amps = crate::numerics::kron_vec(&amps, &random_unit_vector(d, rng));
    }
    Ket {
        amplitudes: amps,
        dims: dims.to_vec(),
    }
}

/// Hilbert-Schmidt style random state `G G^dagger / Tr(G G^dagger)` with `G`
/// a `dim x rank` complex Gaussian matrix drawn from a seeded generator.
pub fn random_density(dims: &[usize], rank: usize, seed: u64) -> Result<DensityMatrix> {
    let d: usize = dims.iter().product();
    check_dims(dims, d)?;
    if rank == 0 || rank > d {
        return Err(Error::InvalidArgument(format!("rank {rank} outside 1..={d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g: Vec<C64> = (0..d * rank).map(|_| complex_gaussian(&mut rng)).collect();
    let m = ComplexMatrix::from_fn(d, |i, j| {
        (0..rank).map(|k| g[i * rank + k] * g[j * rank + k].conj()).sum()
    });
    let h = m.hermitian_part();
    let tr = h.trace();
    Ok(DensityMatrix::new_unchecked(h.scale(1.0 / tr), dims.to_vec()))
}

/// Random local unitary `U_1 (x) ... (x) U_n`, each factor Haar-distributed.
pub fn random_local_unitary<R: Rng>(dims: &[usize], rng: &mut R) -> ComplexMatrix {
    let mut u = ComplexMatrix::identity(1);
    for &d in dims {
        u = crate::numerics::tensor_product(&u, &haar_unitary(d, rng));
    }
    u
}

/// Haar unitary via Gram-Schmidt on a complex Gaussian matrix.
pub fn haar_unitary<R: Rng>(d: usize, rng: &mut R) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<C64> = (0..d).map(|_| complex_gaussian(rng)).collect();
        for c in &cols {
            let ip: C64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(c) {
                *x -= ip * y;
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-8 {
            cols.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    ComplexMatrix::from_fn(d, |i, j| cols[j][i])
}

type Generator = dyn Fn(f64) -> Result<DensityMatrix> + Send + Sync;

/// One-parameter family `q -> rho(q)` on `q in [0, 1]`.
#[derive(Clone)]
pub struct StateFamily {
    name: String,
    dims: Vec<usize>,
    generator: Arc<Generator>,
}

impl fmt::Debug for StateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StateFamily")
            .field("name", &self.name)
            .field("dims", &self.dims)
            .finish()
    }
}

impl StateFamily {
    pub fn new(
        name: impl Into<String>,
        dims: Vec<usize>,
        generator: impl Fn(f64) -> Result<DensityMatrix> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dims,
            generator: Arc::new(generator),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn at(&self, q: f64) -> Result<DensityMatrix> {
        check_unit_interval("q", q)?;
        let rho = (self.generator)(q)?;
        if rho.dims() != self.dims.as_slice() {
            return Err(Error::DimensionMismatch {
                expected: self.dims.iter().product(),
                found: rho.dim(),
            });
        }
        Ok(rho)
    }

    /// `q |GHZ><GHZ| + (1-q) |W><W|`
    pub fn ghz_w() -> Self {
        Self::new("ghz-w", vec![2, 2, 2], ghz_w_family)
    }

    /// Bell state with white noise, `q |Phi+><Phi+| + (1-q) I/4`.
    pub fn werner() -> Self {
        let bell = ket_bell().density();
        Self::new("werner", vec![2, 2], move |q| white_noise_mix(&bell, q))
    }

    /// `I/d` for every q.
    pub fn constant_mixed(dims: Vec<usize>) -> Self {
        let rho = DensityMatrix::maximally_mixed(&dims);
        Self::new("constant-mixed", dims, move |_| Ok(rho.clone()))
    }

    /// Family given by states at sorted sample points, linearly
    /// interpolated in between (a convex combination, so always a state).
    pub fn tabulated(name: impl Into<String>, mut points: Vec<(f64, DensityMatrix)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument(
                "a tabulated family needs at least 2 states".into(),
            ));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let dims = points[0].1.dims().to_vec();
        if points.iter().any(|(_, r)| r.dims() != dims.as_slice()) {
            return Err(Error::InvalidArgument("tabulated states have mixed dimensions".into()));
        }
        if points[0].0 > 0.0 || points.last().unwrap().0 < 1.0 {
            return Err(Error::InvalidArgument("tabulated family must cover [0, 1]".into()));
        }
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("duplicate sample points".into()));
        }
        Ok(Self::new(name, dims, move |q| {
            let k = points.partition_point(|(x, _)| *x <= q).clamp(1, points.len() - 1);
            let (q0, r0) = &points[k - 1];
            let (q1, r1) = &points[k];
            let t = ((q - q0) / (q1 - q0)).clamp(0.0, 1.0);
            r1.mix(t, r0)
        }))
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "ghz-w" => Some(Self::ghz_w()),
            "werner" => Some(Self::werner()),
            "constant-mixed" => Some(Self::constant_mixed(vec![2, 2, 2])),
            _ => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct StateRepr {
    dim: usize,
    re: Vec<f64>,
    im: Vec<f64>,
    dims: Vec<usize>,
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m = self.matrix.matrix();
        StateRepr {
            dim: m.dim(),
            re: m.as_slice().iter().map(|z| z.re).collect(),
            im: m.as_slice().iter().map(|z| z.im).collect(),
            dims: self.dims.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = StateRepr::deserialize(d)?;
        if r.re.len() != r.dim * r.dim || r.im.len() != r.re.len() {
            return Err(D::Error::custom("re/im length does not match dim"));
        }
        let m = ComplexMatrix::from_vec(r.dim, r.re.iter().zip(&r.im).map(|(&a, &b)| C64::new(a, b)).collect())
            .map_err(D::Error::custom)?;
        let h = HermitianMatrix::new(m).map_err(D::Error::custom)?;
        DensityMatrix::new(h, r.dims).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct KetRepr {
    dims: Vec<usize>,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for Ket {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        KetRepr {
            dims: self.dims.clone(),
            re: self.amplitudes.iter().map(|z| z.re).collect(),
            im: self.amplitudes.iter().map(|z| z.im).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Ket {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = KetRepr::deserialize(d)?;
        if r.re.len() != r.im.len() {
            return Err(D::Error::custom("re/im length mismatch"));
        }
        let amps = r.re.iter().zip(&r.im).map(|(&a, &b)| C64::new(a, b)).collect();
        Ket::new(amps, r.dims).map_err(D::Error::custom)
    }
}
