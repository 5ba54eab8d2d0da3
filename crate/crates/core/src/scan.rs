//! Robustness curves along one-parameter families, kink detection and
//! refinement, witness jumps and phase labels.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::frobenius_distance;
use crate::robustness::{robustness_with, RobustnessOptions, RobustnessResult};
use crate::separability::{ModelKind, Quantifier, SeparabilityModel, Witness};
use crate::states::StateFamily;

pub const DEFAULT_KINK_THRESHOLD: f64 = 10.0;
pub const DEFAULT_JUMP_THRESHOLD: f64 = 5.0;
pub const DEFAULT_SEPARABLE_TOL: f64 = 1e-6;
/// Stretches of the curve below this value never carry a kink.
pub const KINK_VALUE_FLOOR: f64 = 1e-7;
/// Raw second differences below this are rounding, not curvature.
pub const SECOND_DIFF_FLOOR: f64 = 1e-6;
/// Witness distances below this are never flagged as jumps.
pub const JUMP_FLOOR: f64 = 1e-6;
/// Refinement stops once the bracket is this narrow.
pub const REFINE_WIDTH: f64 = 2e-3;
/// A refined kink whose slope-jump estimate falls below this fraction of
/// the initial estimate is withdrawn.
pub const WITHDRAW_RATIO: f64 = 0.25;
/// Largest tolerated fraction of failed grid points.
pub const MAX_FAILED_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub kink_threshold: f64,
    pub jump_threshold: f64,
    pub separable_tol: f64,
    pub refine: bool,
    pub robustness: RobustnessOptions,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            kink_threshold: DEFAULT_KINK_THRESHOLD,
            jump_threshold: DEFAULT_JUMP_THRESHOLD,
            separable_tol: DEFAULT_SEPARABLE_TOL,
            refine: false,
            robustness: RobustnessOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinkReport {
    pub location: f64,
    pub left_slope: f64,
    pub right_slope: f64,
    /// |second difference| / h^2 at the reported point.
    pub score: f64,
    pub refined: bool,
    /// Bracket containing the kink.
    pub interval: (f64, f64),
    /// Whether a witness jump interval contains the kink; `None` when the
    /// curve carries no witnesses.
    pub corroborated: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Refinement {
    Refined(KinkReport),
    Withdrawn { interval: (f64, f64), diagnostic: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessJump {
    pub interval: (f64, f64),
    pub jump: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseLabel {
    Separable,
    Entangled(usize),
}

impl std::fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PhaseLabel::Separable => f.write_str("Separable"),
            PhaseLabel::Entangled(i) => write!(f, "Entangled-{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub label: PhaseLabel,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanResult {
    pub family: String,
    pub quantifier: Quantifier,
    pub model: ModelKind,
    pub grid: Vec<f64>,
    /// `None` at points whose solve failed.
    pub curve: Vec<Option<RobustnessResult>>,
    pub failures: Vec<(usize, String)>,
    pub kinks: Vec<KinkReport>,
    pub withdrawn: Vec<Refinement>,
    pub witness_jumps: Vec<WitnessJump>,
    /// Distance from the previous point's witness, per grid point.
    pub witness_distances: Vec<Option<f64>>,
    pub phases: Vec<Phase>,
    /// max |f_{i+1} - f_i| / h over the curve.
    pub lipschitz: f64,
}

impl ScanResult {
    /// Curve values, NaN at failed points.
    pub fn values(&self) -> Vec<f64> {
        self.curve
            .iter()
            .map(|r| r.as_ref().map_or(f64::NAN, |r| r.value))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("q,quantifier,model,value,dual_value,gap,status,witness_jump\n");
        for (i, (q, r)) in self.grid.iter().zip(&self.curve).enumerate() {
            let jump = self.witness_distances[i].map_or(String::new(), |d| format!("{d:.6e}"));
            match r {
                Some(r) => writeln!(
                    out,
                    "{:.6},{},{},{:.10},{:.10},{:.3e},{},{}",
                    q, self.quantifier, self.model, r.value, r.dual_value, r.gap, r.status, jump
                ),
                None => writeln!(out, "{:.6},{},{},,,,failed,", q, self.quantifier, self.model),
            }
            .expect("writing to a String cannot fail");
        }
        out
    }
}

/// Uniform grid of `n` points on [0, 1].
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

pub fn scan_family(
    f: &StateFamily,
    quantifier: Quantifier,
    m: &SeparabilityModel,
    grid_points: usize,
) -> Result<ScanResult> {
    scan_family_with(f, quantifier, m, grid_points, &ScanOptions::default())
}

/// Solves each of `qs` independently (in parallel); the output order follows
/// `qs`.
pub fn solve_points(
    f: &StateFamily,
    quantifier: Quantifier,
    m: &SeparabilityModel,
    qs: &[f64],
    opts: &RobustnessOptions,
) -> Vec<Result<RobustnessResult>> {
    qs.par_iter()
        .map(|&q| {
            let rho = f.at(q)?;
            robustness_with(&rho, m, quantifier, opts)
        })
        .collect()
}

pub fn scan_family_with(
    f: &StateFamily,
    quantifier: Quantifier,
    m: &SeparabilityModel,
    grid_points: usize,
    opts: &ScanOptions,
) -> Result<ScanResult> {
    if grid_points < 5 {
        return Err(Error::InvalidArgument(format!(
            "need at least 5 grid points, got {grid_points}"
        )));
    }
    if f.dims() != m.dims() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: f.dims().iter().product(),
        });
    }
    let grid = uniform_grid(grid_points);
    let solved = solve_points(f, quantifier, m, &grid, &opts.robustness);
    let mut curve = Vec::with_capacity(grid_points);
    let mut failures = Vec::new();
    for (i, r) in solved.into_iter().enumerate() {
        match r {
            Ok(r) => curve.push(Some(r)),
            Err(e) => {
                failures.push((i, e.to_string()));
                curve.push(None);
            }
        }
    }
    if failures.len() as f64 > MAX_FAILED_FRACTION * grid_points as f64 {
        return Err(Error::Scan(format!(
            "{} of {} grid points failed; first failure at q = {}: {}",
            failures.len(),
            grid_points,
            grid[failures[0].0],
            failures[0].1
        )));
    }

    let values: Vec<f64> = curve.iter().map(|r| r.as_ref().map_or(f64::NAN, |r| r.value)).collect();
    let witnesses: Vec<Option<&Witness>> = curve.iter().map(|r| r.as_ref().map(|r| &r.witness)).collect();
    let witness_distances = witness_distances(&witnesses);
    let jumps = flag_jumps(&grid, &witness_distances, opts.jump_threshold);

    let mut kinks = detect_kinks(&grid, &values, opts.kink_threshold)?;
    let mut withdrawn = Vec::new();
    if opts.refine {
        let mut refined = Vec::new();
        for k in kinks {
            match refine_kink(f, quantifier, m, k.interval, &opts.robustness)? {
                Refinement::Refined(r) => refined.push(r),
                w @ Refinement::Withdrawn { .. } => withdrawn.push(w),
            }
        }
        kinks = refined;
    }
    for k in kinks.iter_mut() {
        k.corroborated = Some(corroborated(k, &jumps, grid[1] - grid[0]));
    }
    let phases = phase_labels(&grid, &values, &kinks, opts.separable_tol);
    let lipschitz = lipschitz_estimate(&grid, &values);
    Ok(ScanResult {
        family: f.name().to_string(),
        quantifier,
        model: m.kind(),
        grid,
        curve,
        failures,
        kinks,
        withdrawn,
        witness_jumps: jumps,
        witness_distances,
        phases,
        lipschitz,
    })
}

fn uniform_spacing(grid: &[f64]) -> Result<f64> {
    if grid.len() < 2 {
        return Err(Error::InvalidArgument("grid needs at least two points".into()));
    }
    let h = grid[1] - grid[0];
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("grid must be strictly increasing".into()));
    }
    for w in grid.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0) {
            return Err(Error::InvalidArgument("grid is not uniform".into()));
        }
    }
    Ok(h)
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares slope through the given points.
fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<&(f64, f64)> = points.iter().filter(|p| p.1.is_finite()).collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Number of samples on each side used for the slope fits.
const SLOPE_WINDOW: usize = 5;

/// Second-difference outliers of a uniformly sampled curve. NaN samples
/// (failed points) never take part in a second difference.
pub fn detect_kinks(grid: &[f64], values: &[f64], threshold: f64) -> Result<Vec<KinkReport>> {
    if grid.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: values.len(),
        });
    }
    if grid.len() < 5 {
        return Err(Error::InvalidArgument("kink detection needs at least 5 samples".into()));
    }
    let h = uniform_spacing(grid)?;
    let n = grid.len();
    let raw: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 || i == n - 1 {
                return f64::NAN;
            }
            (values[i + 1] - 2.0 * values[i] + values[i - 1]).abs()
        })
        .collect();
    let scores: Vec<f64> = raw.iter().map(|r| r / (h * h)).collect();
    let med = median(scores.iter().copied().filter(|s| s.is_finite()).collect());
    // a region is a run of at least two samples below the floor; an isolated
    // zero sample is a touching point and may still carry a kink
    let below: Vec<bool> = values.iter().map(|&v| v < KINK_VALUE_FLOOR).collect();
    let in_region: Vec<bool> = (0..n)
        .map(|j| below[j] && ((j > 0 && below[j - 1]) || (j + 1 < n && below[j + 1])))
        .collect();
    let flagged: Vec<bool> = (0..n)
        .map(|i| {
            scores[i].is_finite()
                && scores[i] > threshold * med
                && raw[i] > SECOND_DIFF_FLOOR
                && !(in_region[i - 1] || in_region[i] || in_region[i + 1])
        })
        .collect();

    let mut reports = Vec::new();
    let mut i = 0;
    while i < n {
        if !flagged[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < n && flagged[i + 1] {
            i += 1;
        }
        let end = i;
        let peak = (start..=end)
            .max_by(|&a, &b| scores[a].total_cmp(&scores[b]))
            .expect("nonempty cluster");
        let left: Vec<(f64, f64)> = (start.saturating_sub(SLOPE_WINDOW)..start)
            .map(|j| (grid[j], values[j]))
            .collect();
        let right: Vec<(f64, f64)> = ((end + 1)..(end + 1 + SLOPE_WINDOW).min(n))
            .map(|j| (grid[j], values[j]))
            .collect();
        reports.push(KinkReport {
            location: grid[peak],
            left_slope: fit_slope(&left),
            right_slope: fit_slope(&right),
            score: scores[peak],
            refined: false,
            interval: (grid[start - 1], grid[end + 1]),
            corroborated: None,
        });
        i += 1;
    }
    Ok(reports)
}

/// Default z threshold of [`detect_kinks_noisy`].
pub const DEFAULT_NOISY_Z: f64 = 6.0;

/// Kink detection for measured curves with per-point standard errors.
/// At each interior point lines are fitted to the `SLOPE_WINDOW + 1`
/// samples on either side; a point is flagged when the slope change
/// exceeds `z_threshold` standard errors (propagated from `stderr`,
/// covariance ignored). Adjacent flags merge at the largest z, which is
/// reported as `score`.
pub fn detect_kinks_noisy(grid: &[f64], values: &[f64], stderr: &[f64], z_threshold: f64) -> Result<Vec<KinkReport>> {
    if grid.len() != values.len() || grid.len() != stderr.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: values.len().min(stderr.len()),
        });
    }
    let w = SLOPE_WINDOW;
    if grid.len() < 2 * w + 1 {
        return Err(Error::InvalidArgument(format!(
            "noisy kink detection needs at least {} samples",
            2 * w + 1
        )));
    }
    uniform_spacing(grid)?;
    let n = grid.len();
    let fit = |range: std::ops::RangeInclusive<usize>| -> (f64, f64) {
        let idx: Vec<usize> = range.collect();
        let m = idx.len() as f64;
        let mx = idx.iter().map(|&j| grid[j]).sum::<f64>() / m;
        let sxx: f64 = idx.iter().map(|&j| (grid[j] - mx).powi(2)).sum();
        let slope = idx.iter().map(|&j| (grid[j] - mx) * values[j]).sum::<f64>() / sxx;
        let var = idx.iter().map(|&j| ((grid[j] - mx) * stderr[j]).powi(2)).sum::<f64>() / (sxx * sxx);
        (slope, var)
    };
    let mut z = vec![0.0; n];
    let mut slopes = vec![(f64::NAN, f64::NAN); n];
    for i in w..n - w {
        let (l, vl) = fit(i - w..=i);
        let (r, vr) = fit(i..=i + w);
        let se = (vl + vr).sqrt().max(f64::MIN_POSITIVE);
        z[i] = (r - l).abs() / se;
        slopes[i] = (l, r);
    }
    let flagged: Vec<bool> = z.iter().map(|&v| v.is_finite() && v > z_threshold).collect();

    let mut reports = Vec::new();
    let mut i = 0;
    while i < n {
        if !flagged[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < n && flagged[i + 1] {
            i += 1;
        }
        let end = i;
        let peak = (start..=end)
            .max_by(|&a, &b| z[a].total_cmp(&z[b]))
            .expect("nonempty cluster");
        reports.push(KinkReport {
            location: grid[peak],
            left_slope: slopes[peak].0,
            right_slope: slopes[peak].1,
            score: z[peak],
            refined: false,
            interval: (grid[start - 1], grid[end + 1]),
            corroborated: None,
        });
        i += 1;
    }
    Ok(reports)
}

/// Bracket refinement of a kink of `eval` inside `interval`. Each round
/// evaluates the quarter points, keeps the half-width bracket centred on the
/// largest second difference, and stops at width [`REFINE_WIDTH`].
pub fn refine_kink_with<F>(eval: F, interval: (f64, f64)) -> Result<Refinement>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let (mut a, mut b) = interval;
    if !(a < b) {
        return Err(Error::InvalidArgument(format!(
            "empty refinement interval {interval:?}"
        )));
    }
    let mut cache: HashMap<u64, f64> = HashMap::new();
    let mut value_at = |qs: &[f64]| -> Result<Vec<f64>> {
        let missing: Vec<f64> = qs
            .iter()
            .copied()
            .filter(|q| !cache.contains_key(&q.to_bits()))
            .collect();
        let fresh: Vec<Result<f64>> = missing.par_iter().map(|&q| eval(q)).collect();
        for (q, v) in missing.iter().zip(fresh) {
            cache.insert(q.to_bits(), v?);
        }
        Ok(qs.iter().map(|q| cache[&q.to_bits()]).collect())
    };
    let mut initial_jump = None;
    loop {
        let w = b - a;
        let step = w / 4.0;
        let qs = [a, a + step, a + 2.0 * step, a + 3.0 * step, b];
        let f = value_at(&qs)?;
        let d = [
            (f[0] - 2.0 * f[1] + f[2]).abs(),
            (f[1] - 2.0 * f[2] + f[3]).abs(),
            (f[2] - 2.0 * f[3] + f[4]).abs(),
        ];
        let best = (0..3).max_by(|&x, &y| d[x].total_cmp(&d[y])).expect("three candidates");
        let jump = d[best] / step;
        let initial = *initial_jump.get_or_insert(jump);
        if w <= REFINE_WIDTH {
            if jump < WITHDRAW_RATIO * initial || jump == 0.0 {
                return Ok(Refinement::Withdrawn {
                    interval,
                    diagnostic: format!(
                        "slope jump shrank from {initial:.3e} to {jump:.3e} at bracket width {w:.1e}; \
                         curvature rather than a kink"
                    ),
                });
            }
            return Ok(Refinement::Refined(KinkReport {
                location: qs[best + 1],
                left_slope: (f[1] - f[0]) / step,
                right_slope: (f[4] - f[3]) / step,
                score: d[best] / (step * step),
                refined: true,
                interval: (a, b),
                corroborated: None,
            }));
        }
        let (na, nb) = match best {
            0 => (qs[0], qs[2]),
            1 => (qs[1], qs[3]),
            _ => (qs[2], qs[4]),
        };
        a = na;
        b = nb;
    }
}

/// Refines a kink of the robustness curve of `f` inside `interval`.
pub fn refine_kink(
    f: &StateFamily,
    quantifier: Quantifier,
    m: &SeparabilityModel,
    interval: (f64, f64),
    opts: &RobustnessOptions,
) -> Result<Refinement> {
    let lo = interval.0.max(0.0);
    let hi = interval.1.min(1.0);
    refine_kink_with(
        |q| {
            let rho = f.at(q)?;
            Ok(robustness_with(&rho, m, quantifier, opts)?.value)
        },
        (lo, hi),
    )
}

/// Frobenius distance of each witness from its predecessor.
pub fn witness_distances(witnesses: &[Option<&Witness>]) -> Vec<Option<f64>> {
    (0..witnesses.len())
        .map(|i| {
            if i == 0 {
                return None;
            }
            match (witnesses[i - 1], witnesses[i]) {
                (Some(a), Some(b)) => Some(frobenius_distance(&a.matrix, &b.matrix)),
                _ => None,
            }
        })
        .collect()
}

fn flag_jumps(grid: &[f64], distances: &[Option<f64>], threshold: f64) -> Vec<WitnessJump> {
    let med = median(distances.iter().flatten().copied().collect());
    distances
        .iter()
        .enumerate()
        .filter_map(|(i, d)| {
            let d = (*d)?;
            (d > threshold * med && d > JUMP_FLOOR).then(|| WitnessJump {
                interval: (grid[i - 1], grid[i]),
                jump: d,
            })
        })
        .collect()
}

/// Intervals between consecutive grid points where the optimal witness
/// moves by more than `threshold` times the median step.
pub fn witness_jumps(grid: &[f64], witnesses: &[Option<&Witness>], threshold: f64) -> Vec<WitnessJump> {
    flag_jumps(grid, &witness_distances(witnesses), threshold)
}

fn corroborated(k: &KinkReport, jumps: &[WitnessJump], h: f64) -> bool {
    let slack = 0.5 * h;
    jumps.iter().any(|j| {
        let (lo, hi) = (j.interval.0 - slack, j.interval.1 + slack);
        (k.location >= lo && k.location <= hi) || (k.interval.0 <= j.interval.1 && j.interval.0 <= k.interval.1)
    })
}

/// Splits the curve into separable stretches (value <= tol) and entangled
/// stretches, the latter further cut at kink locations and numbered in
/// order.
pub fn phase_labels(grid: &[f64], values: &[f64], kinks: &[KinkReport], tol: f64) -> Vec<Phase> {
    let mut cuts: Vec<f64> = kinks.iter().map(|k| k.location).collect();
    cuts.sort_by(f64::total_cmp);
    let mut phases: Vec<Phase> = Vec::new();
    let mut entangled = 0;
    let mut i = 0;
    let n = grid.len();
    while i < n {
        if !values[i].is_finite() {
            i += 1;
            continue;
        }
        let sep = values[i] <= tol;
        let start = i;
        while i + 1 < n && values[i + 1].is_finite() && (values[i + 1] <= tol) == sep {
            i += 1;
        }
        let (lo, hi) = (grid[start], grid[i]);
        if sep {
            phases.push(Phase {
                label: PhaseLabel::Separable,
                start: lo,
                end: hi,
            });
        } else {
            let mut from = lo;
            for &c in cuts.iter().filter(|&&c| c > lo && c < hi) {
                entangled += 1;
                phases.push(Phase {
                    label: PhaseLabel::Entangled(entangled),
                    start: from,
                    end: c,
                });
                from = c;
            }
            entangled += 1;
            phases.push(Phase {
                label: PhaseLabel::Entangled(entangled),
                start: from,
                end: hi,
            });
        }
        i += 1;
    }
    phases
}

pub fn lipschitz_estimate(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(q, v)| ((v[1] - v[0]) / (q[1] - q[0])).abs())
        .filter(|x| x.is_finite())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedWitnessTable {
    pub grid: Vec<f64>,
    /// values[i][w] = Tr(W_w rho(q_i))
    pub values: Vec<Vec<f64>>,
    /// min over witnesses per grid point.
    pub envelope: Vec<f64>,
    /// Points where the minimizing witness changes, located by linear
    /// interpolation of the two expectations.
    pub crossings: Vec<f64>,
}

pub fn fixed_witness_scan(f: &StateFamily, witnesses: &[Witness], grid_points: usize) -> Result<FixedWitnessTable> {
    if witnesses.is_empty() {
        return Err(Error::InvalidArgument("need at least one witness".into()));
    }
    if grid_points < 2 {
        return Err(Error::InvalidArgument("need at least two grid points".into()));
    }
    let d: usize = f.dims().iter().product();
    if let Some(w) = witnesses.iter().find(|w| w.matrix.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: w.matrix.dim(),
        });
    }
    let grid = uniform_grid(grid_points);
    let values: Vec<Vec<f64>> = grid
        .iter()
        .map(|&q| {
            let rho = f.at(q)?;
            Ok(witnesses.iter().map(|w| w.expectation(&rho)).collect())
        })
        .collect::<Result<_>>()?;
    let argmin = |row: &Vec<f64>| {
        (0..row.len())
            .min_by(|&a, &b| row[a].total_cmp(&row[b]))
            .expect("at least one witness")
    };
    let envelope: Vec<f64> = values.iter().map(|r| r[argmin(r)]).collect();
    let mut crossings = Vec::new();
    for i in 1..grid.len() {
        let (a, b) = (argmin(&values[i - 1]), argmin(&values[i]));
        if a != b {
            let g0 = values[i - 1][a] - values[i - 1][b];
            let g1 = values[i][a] - values[i][b];
            let t = g0 / (g0 - g1);
            crossings.push(grid[i - 1] + t * (grid[i] - grid[i - 1]));
        }
    }
    Ok(FixedWitnessTable {
        grid,
        values,
        envelope,
        crossings,
    })
}

pub const RELAXATION_GAP: &str = "RELAXATION_GAP";

/// Comparison of a detected kink with a reference location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinkComparison {
    pub reference: f64,
    pub location: Option<f64>,
    pub deviation: Option<f64>,
    pub tolerance: f64,
    pub within: bool,
    pub diagnostic: Option<String>,
}

/// Compares the kink closest to `reference`; emits the relaxation-gap
/// diagnostic when it lies outside `tolerance` or no kink exists.
pub fn compare_kink(kinks: &[KinkReport], reference: f64, tolerance: f64) -> KinkComparison {
    let nearest = kinks.iter().min_by(|a, b| {
        (a.location - reference)
            .abs()
            .total_cmp(&(b.location - reference).abs())
    });
    match nearest {
        Some(k) => {
            let dev = k.location - reference;
            let within = dev.abs() <= tolerance;
            KinkComparison {
                reference,
                location: Some(k.location),
                deviation: Some(dev),
                tolerance,
                within,
                diagnostic: (!within).then(|| {
                    format!(
                        "{RELAXATION_GAP}: kink at q = {:.3} deviates from {reference} by {dev:+.3} (tolerance {tolerance})",
                        k.location
                    )
                }),
            }
        }
        None => KinkComparison {
            reference,
            location: None,
            deviation: None,
            tolerance,
            within: false,
            diagnostic: Some(format!(
                "{RELAXATION_GAP}: no kink detected (reference q = {reference})"
            )),
        },
    }
}
