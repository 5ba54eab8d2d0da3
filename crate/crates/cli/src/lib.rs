//! Command-line front end of `enrob`.
//!
//! Exit codes: 0 success, 1 input or validation error, 2 numerical failure.

pub mod io;
pub mod svg;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use enrob_core::robustness::{audit_witness, audited_pure_witness};
use enrob_core::scan::{
    compare_kink, detect_kinks_noisy, scan_family_with, KinkComparison, Refinement, DEFAULT_JUMP_THRESHOLD,
    DEFAULT_KINK_THRESHOLD, DEFAULT_NOISY_Z, DEFAULT_SEPARABLE_TOL,
};
use enrob_core::tomo::end_to_end_experiment;
use enrob_core::{
    robustness_with, Error, Ket, ModelKind, Quantifier, Result, RobustnessOptions, ScanOptions, SeparabilityModel,
    SolveStatus,
};
use serde_json::json;

use crate::svg::Series;

// stdout/stderr writes that tolerate a closed pipe
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

macro_rules! say_err {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stderr(), $($t)*);
    }};
}

/// Published kink locations of the GHZ/W family, used as the default
/// comparison reference.
const GHZ_W_KINK_RANDOM_FULL: f64 = 0.47;
const GHZ_W_KINK_GENERALIZED_BISEP: f64 = 0.33;
const DEFAULT_REFERENCE_TOL: f64 = 0.05;
const DEFAULT_AUDIT_SAMPLES: u64 = 10_000;

#[derive(Debug, Parser)]
#[command(name = "enrob", version, about = "Robustness of entanglement over PPT relaxations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Robustness of a single state.
    Robustness(RobustnessArgs),
    /// Robustness curve of a one-parameter family with kink analysis.
    Scan(ScanArgs),
    /// Optimal entanglement witness of a state.
    Witness(WitnessArgs),
    /// Simulated tomography experiment along a family.
    Tomo(TomoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QuantifierArg {
    Rr,
    Gr,
}

impl From<QuantifierArg> for Quantifier {
    fn from(q: QuantifierArg) -> Self {
        match q {
            QuantifierArg::Rr => Quantifier::Random,
            QuantifierArg::Gr => Quantifier::Generalized,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    #[value(name = "exact2q")]
    Exact2q,
    #[value(name = "ppt-intersect")]
    PptIntersect,
    #[value(name = "ppt-mixture")]
    PptMixture,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Exact2q => ModelKind::ExactTwoQubit,
            ModelArg::PptIntersect => ModelKind::IntersectPpt,
            ModelArg::PptMixture => ModelKind::MixturePpt,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "rr")]
    pub quantifier: QuantifierArg,
    /// Separability order; defaults to the number of parties.
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
    pub k: Option<u32>,
    /// Overrides --k.
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Interior-point iteration cap per solve.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u32).range(1..))]
    pub max_iter: u32,
}

impl ModelArgs {
    fn options(&self) -> RobustnessOptions {
        let mut o = RobustnessOptions::default();
        o.solver.max_iter = self.max_iter as usize;
        o.fallback.max_iter = self.max_iter as usize;
        o
    }
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    #[arg(long)]
    pub state: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// JSON output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Built-in family (ghz-w, werner, constant-mixed) or a family JSON file.
    #[arg(long)]
    pub family: String,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u32).range(5..=100_001))]
    pub grid: u32,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Kink report JSON path.
    #[arg(long)]
    pub kinks: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_KINK_THRESHOLD, value_parser = positive_f64)]
    pub kink_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_JUMP_THRESHOLD, value_parser = positive_f64)]
    pub jump_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_SEPARABLE_TOL, value_parser = positive_f64)]
    pub separable_tol: f64,
    /// Re-solve inside each detected kink until it is bracketed.
    #[arg(long)]
    pub refine: bool,
    /// Kink location to compare against.
    #[arg(long, value_parser = unit_f64)]
    pub reference: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_REFERENCE_TOL, value_parser = positive_f64)]
    pub reference_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WitnessMode {
    /// Seesaw overlap maximization, `lambda I - |psi><psi|`.
    Pure,
    /// Dual optimum of the robustness program.
    Sdp,
}

#[derive(Debug, Args)]
pub struct WitnessArgs {
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long, value_enum, default_value = "sdp")]
    pub mode: WitnessMode,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Model members sampled in the nonnegativity audit.
    #[arg(long, default_value_t = DEFAULT_AUDIT_SAMPLES, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TomoArgs {
    #[arg(long)]
    pub family: String,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u32).range(2..=100_001))]
    pub grid: u32,
    /// Shots per measurement setting; 0 is exact mode.
    #[arg(long, default_value_t = 10_000, allow_negative_numbers = true, value_parser = shots)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

fn positive_f64(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be a positive number, got {s}"))
    }
}

fn unit_f64(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("must lie in [0, 1], got {s}"))
    }
}

fn shots(s: &str) -> std::result::Result<u64, String> {
    let v: i64 = s.parse().map_err(|e| format!("{e}"))?;
    u64::try_from(v).map_err(|_| format!("shots must be a nonnegative integer (0 = exact mode), got {v}"))
}

/// Exit code of a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_)
        | Error::InvalidState(_)
        | Error::DimensionMismatch { .. }
        | Error::NotHermitian(_)
        | Error::Json(_) => 1,
        Error::Solver { .. }
        | Error::DualityGap { .. }
        | Error::EigenNoConvergence(_)
        | Error::Certificate(_)
        | Error::Scan(_) => 2,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Robustness(a) => cmd_robustness(&a),
        Command::Scan(a) => cmd_scan(&a),
        Command::Witness(a) => cmd_witness(&a),
        Command::Tomo(a) => cmd_tomo(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            say_err!("error: {e}");
            exit_code(&e)
        }
    }
}

fn describe(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::ExactTwoQubit => "exact PPT criterion (two parties, 2x2 or 2x3)",
        ModelKind::IntersectPpt => "PPT across every bipartition (relaxation of full separability)",
        ModelKind::MixturePpt => "mixtures of states PPT across one bipartition (relaxation of biseparability)",
    }
}

/// Resolves `--model` / `--k` and the header line stating the mapping.
fn resolve_model(args: &ModelArgs, dims: &[usize]) -> Result<(SeparabilityModel, String)> {
    let n = dims.len();
    let (model, source) = match args.model {
        Some(m) => (SeparabilityModel::new(m.into(), dims)?, "--model".to_string()),
        None => {
            let k = args.k.map_or(n, |k| k as usize);
            if k > n {
                return Err(Error::InvalidArgument(format!("--k {k} exceeds the {n} parties")));
            }
            (SeparabilityModel::for_k(dims, k)?, format!("k = {k}"))
        }
    };
    let header = format!(
        "# model: {} from {source} [{}]; mapping k = n -> ppt-intersect, k = 2 -> ppt-mixture, two qubits -> exact2q",
        model.tag(),
        describe(model.kind())
    );
    Ok((model, header))
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn check_outputs(paths: &[&Option<PathBuf>]) -> Result<()> {
    for p in paths.iter().filter_map(|p| p.as_ref()) {
        io::check_writable(p)?;
    }
    Ok(())
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => io::write_atomic(p, text.as_bytes()),
        None => {
            use std::io::Write as _;
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn cmd_robustness(a: &RobustnessArgs) -> Result<i32> {
    check_outputs(&[&a.out])?;
    let state = io::load_state(&a.state)?;
    let (model, header) = resolve_model(&a.model, state.rho.dims())?;
    let quantifier: Quantifier = a.model.quantifier.into();
    say!("{header}");
    let r = robustness_with(&state.rho, &model, quantifier, &a.model.options())?;
    say!(
        "{} = {:.9}  (dual {:.9}, gap {:.2e}, status {})",
        quantifier.tag(),
        r.value,
        r.dual_value,
        r.gap,
        r.status
    );
    let body = to_json(&r)?;
    if let Some(p) = &a.out {
        io::write_atomic(p, body.as_bytes())?;
    } else {
        emit(None, &body)?;
    }
    Ok(if r.status == SolveStatus::Optimal { 0 } else { 2 })
}

fn reference_for(a: &ScanArgs, quantifier: Quantifier, kind: ModelKind) -> Option<f64> {
    a.reference.or(match (a.family.as_str(), quantifier, kind) {
        ("ghz-w", Quantifier::Random, ModelKind::IntersectPpt) => Some(GHZ_W_KINK_RANDOM_FULL),
        ("ghz-w", Quantifier::Generalized, ModelKind::MixturePpt) => Some(GHZ_W_KINK_GENERALIZED_BISEP),
        _ => None,
    })
}

fn cmd_scan(a: &ScanArgs) -> Result<i32> {
    check_outputs(&[&a.out, &a.kinks, &a.svg])?;
    let family = io::load_family(&a.family)?;
    let (model, header) = resolve_model(&a.model, family.dims())?;
    let quantifier: Quantifier = a.model.quantifier.into();
    let opts = ScanOptions {
        kink_threshold: a.kink_threshold,
        jump_threshold: a.jump_threshold,
        separable_tol: a.separable_tol,
        refine: a.refine,
        robustness: a.model.options(),
    };
    let result = scan_family_with(&family, quantifier, &model, a.grid as usize, &opts)?;
    let reference = reference_for(a, quantifier, model.kind());
    let comparison: Option<KinkComparison> = reference.map(|r| compare_kink(&result.kinks, r, a.reference_tol));

    let mut summary = vec![
        format!(
            "# family: {} | quantifier: {} | grid: {}",
            family.name(),
            quantifier.tag(),
            a.grid
        ),
        header,
    ];
    if !result.failures.is_empty() {
        summary.push(format!("# failed points: {}", result.failures.len()));
    }
    if result.kinks.is_empty() {
        summary.push("no kinks".into());
    }
    for k in &result.kinks {
        let corr = match k.corroborated {
            Some(true) => "witness jump corroborates",
            Some(false) => "no witness corroboration",
            None => "corroboration not checked",
        };
        summary.push(format!(
            "kink at q = {:.3} in [{:.4}, {:.4}], slopes {:.4} -> {:.4}, score {:.3e}{}, {corr}",
            k.location,
            k.interval.0,
            k.interval.1,
            k.left_slope,
            k.right_slope,
            k.score,
            if k.refined { ", refined" } else { "" }
        ));
    }
    for w in &result.withdrawn {
        if let Refinement::Withdrawn { interval, diagnostic } = w {
            summary.push(format!(
                "withdrawn candidate in [{:.3}, {:.3}]: {diagnostic}",
                interval.0, interval.1
            ));
        }
    }
    if let Some(c) = &comparison {
        match (&c.diagnostic, c.location, c.deviation) {
            (Some(d), _, _) => summary.push(d.clone()),
            (None, Some(loc), Some(dev)) => summary.push(format!(
                "kink at q = {loc:.3} vs reference {}: deviation {dev:+.3} (within {})",
                c.reference, c.tolerance
            )),
            _ => {}
        }
    }
    let kink_json = json!({
        "family": family.name(),
        "quantifier": quantifier.tag(),
        "model": model.tag(),
        "grid_points": a.grid,
        "kinks": result.kinks,
        "withdrawn": result.withdrawn,
        "witness_jumps": result.witness_jumps,
        "phases": result.phases,
        "lipschitz": result.lipschitz,
        "comparison": comparison,
    });
    if let Some(p) = &a.kinks {
        io::write_atomic(p, to_json(&kink_json)?.as_bytes())?;
    }
    if let Some(p) = &a.svg {
        let pts: Vec<(f64, f64)> = result.grid.iter().copied().zip(result.values()).collect();
        let title = format!("{} {} {}", family.name(), quantifier.tag(), model.tag());
        let locs: Vec<f64> = result.kinks.iter().map(|k| k.location).collect();
        let doc =
            svg::render(&title, &[Series::new("robustness", pts, "#1f4e9c")], &locs).map_err(Error::InvalidArgument)?;
        io::write_atomic(p, doc.as_bytes())?;
    }
    let csv = result.to_csv();
    if a.out.is_some() {
        for line in &summary {
            say!("{line}");
        }
    } else {
        for line in &summary {
            say_err!("{line}");
        }
    }
    emit(a.out.as_deref(), &csv)?;
    Ok(0)
}

fn pure_ket(state: &io::LoadedState) -> Result<Ket> {
    if let Some(k) = &state.ket {
        return Ok(k.clone());
    }
    let spec = state.rho.matrix().eig();
    let top = *spec.eigenvalues.last().expect("nonempty");
    if (top - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidState(format!(
            "pure mode needs a pure state (largest eigenvalue {top})"
        )));
    }
    Ket::normalized(spec.eigenvector(spec.eigenvalues.len() - 1), state.rho.dims().to_vec())
}

fn cmd_witness(a: &WitnessArgs) -> Result<i32> {
    check_outputs(&[&a.out])?;
    let state = io::load_state(&a.state)?;
    let dims = state.rho.dims().to_vec();
    let (model, header) = resolve_model(&a.model, &dims)?;
    say!("{header}");
    let body = match a.mode {
        WitnessMode::Pure => {
            let psi = pure_ket(&state)?;
            let k = a.model.k.map_or(dims.len(), |k| k as usize);
            let (w, lam) = audited_pure_witness(&psi, k, &model, a.samples as usize, a.seed)?;
            say!("lambda = {:.9} over {}-separable products", lam.lambda, k);
            let detected = lam.lambda < 1.0 - 1e-9;
            if !detected {
                say!("warning: state not detected as entangled (lambda = 1, witness is positive semidefinite)");
            }
            json!({
                "mode": "pure",
                "k": k,
                "lambda": lam.lambda,
                "groups": lam.groups,
                "restarts": lam.restarts_used,
                "detected": detected,
                "trace": w.matrix().trace(),
                "witness": w,
            })
        }
        WitnessMode::Sdp => {
            let quantifier: Quantifier = a.model.quantifier.into();
            let r = robustness_with(&state.rho, &model, quantifier, &a.model.options())?;
            let worst = audit_witness(&r.witness, &model, a.samples as usize, a.seed);
            say!(
                "{} = {:.9}, Tr W = {:.9}, Tr(W rho) = {:.9}, audit min {:.3e}",
                quantifier.tag(),
                r.value,
                r.witness.matrix().trace(),
                -r.dual_value,
                worst
            );
            if worst < -1e-8 {
                return Err(Error::Certificate(format!(
                    "witness audit failed: Tr(W sigma) = {worst:e}"
                )));
            }
            if r.value <= DEFAULT_SEPARABLE_TOL {
                say!("warning: state not detected as entangled");
            }
            json!({
                "mode": "sdp",
                "quantifier": quantifier.tag(),
                "value": r.value,
                "expectation": -r.dual_value,
                "trace": r.witness.matrix().trace(),
                "audit_min": worst,
                "witness": r.witness,
            })
        }
    };
    let text = to_json(&body)?;
    emit(a.out.as_deref(), &text)?;
    Ok(0)
}

fn cmd_tomo(a: &TomoArgs) -> Result<i32> {
    check_outputs(&[&a.out, &a.svg])?;
    let family = io::load_family(&a.family)?;
    let (model, header) = resolve_model(&a.model, family.dims())?;
    let quantifier: Quantifier = a.model.quantifier.into();
    let table = end_to_end_experiment(
        &family,
        quantifier,
        &model,
        a.grid as usize,
        a.shots,
        a.seed,
        &a.model.options(),
    )?;
    let mode = if a.shots == 0 {
        "exact mode".to_string()
    } else {
        format!("{} shots per setting", a.shots)
    };
    let summary = [
        format!(
            "# family: {} | quantifier: {} | {mode} | seed {}",
            family.name(),
            quantifier.tag(),
            a.seed
        ),
        header,
        "# reconstruction: linear inversion, eigenvalue clipping with trace renormalization".to_string(),
        "# stderr: uncorrelated propagation, covariance of Pauli estimates from shared settings ignored".to_string(),
    ];
    let se: Vec<f64> = table.rows.iter().map(|r| r.stderr).collect();
    let kinks = if a.shots > 0 && table.rows.len() >= 11 {
        detect_kinks_noisy(&table.grid(), &table.estimates(), &se, DEFAULT_NOISY_Z)?
    } else {
        Vec::new()
    };
    let print = |s: &str| {
        if a.out.is_some() {
            say!("{s}");
        } else {
            say_err!("{s}");
        }
    };
    for line in &summary {
        print(line);
    }
    for k in &kinks {
        print(&format!(
            "kink in measured curve at q = {:.3} in [{:.3}, {:.3}], z = {:.1}",
            k.location, k.interval.0, k.interval.1, k.score
        ));
    }
    if let Some(p) = &a.svg {
        let est: Vec<(f64, f64)> = table.rows.iter().map(|r| (r.q, r.estimate)).collect();
        let truth: Vec<(f64, f64)> = table.rows.iter().map(|r| (r.q, r.truth)).collect();
        let title = format!("{} {} {} ({mode})", family.name(), quantifier.tag(), model.tag());
        let locs: Vec<f64> = kinks.iter().map(|k| k.location).collect();
        let doc = svg::render(
            &title,
            &[
                Series::new("noiseless", truth, "#444444"),
                Series::new("measured -<W>", est, "#c0392b").with_band(se.clone()),
            ],
            &locs,
        )
        .map_err(Error::InvalidArgument)?;
        io::write_atomic(p, doc.as_bytes())?;
    }
    emit(a.out.as_deref(), &table.to_csv())?;
    Ok(0)
}
