//! Orchestration shared by the CLI binary and the runnable examples: the
//! canonical run configuration, the staged end-to-end reproduction, and the
//! implementations each subcommand delegates to. Everything here returns
//! plain JSON values so callers only decide where bytes go.

use crate::bisep::{self, CertifierConfig, Verdict, WeightStrategy};
use crate::io::{self, MatrixJson, ShotTableJson, TraceJson, WitnessJson};
use crate::pauli;
use crate::sdp::SolverOptions;
use crate::sim::{self, NoiseModel};
use crate::states;
use crate::witness::{self, Witness};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Two-copy witness optimum for the noiseless constituent mixture.
pub const OPTIMUM_Q0: f64 = -1.042e-2;
/// Reference-witness value on the two-copy state at the nominal noise
/// weight.
pub const VALUE_NOMINAL: f64 = -0.887e-2;
/// Nominal single-copy noise weight.
pub const NOMINAL_Q: f64 = 0.06;

/// Environment variable naming a default config file for the CLI.
pub const CONFIG_ENV_VAR: &str = "GMEKIT_CONFIG";

// ---------------------------------------------------------------------------
// errors: usage mistakes exit 2, failed computations exit 1

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Compute(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Usage(_) => 2,
            PipelineError::Compute(_) => 1,
        }
    }

    /// Structured form for stderr.
    pub fn to_json(&self) -> Value {
        let kind = match self {
            PipelineError::Usage(_) => "usage",
            PipelineError::Compute(_) => "compute",
        };
        json!({ "error": { "kind": kind, "message": self.to_string() } })
    }
}

impl From<io::IoError> for PipelineError {
    fn from(e: io::IoError) -> Self {
        match &e {
            // unreadable or malformed inputs are caller mistakes
            io::IoError::File(f) if f.kind() == std::io::ErrorKind::NotFound => {
                PipelineError::Usage(e.to_string())
            }
            io::IoError::Json(_) | io::IoError::BadShape(_) => PipelineError::Usage(e.to_string()),
            _ => PipelineError::Compute(e.to_string()),
        }
    }
}

macro_rules! compute_error {
    ($($ty:ty),*) => {$(
        impl From<$ty> for PipelineError {
            fn from(e: $ty) -> Self { PipelineError::Compute(e.to_string()) }
        }
    )*};
}
compute_error!(
    crate::states::StateError,
    crate::witness::WitnessError,
    crate::bisep::BisepError,
    crate::sim::SimError,
    crate::sdp::SdpError,
    crate::linalg::LinalgError,
    crate::pauli::PauliError,
    serde_json::Error
);

// ---------------------------------------------------------------------------
// run configuration

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    /// Witness JSON to use instead of the built-in reference witness.
    pub witness: Option<PathBuf>,
    /// Single-copy state JSON to certify instead of the built-in mixture.
    pub state: Option<PathBuf>,
    /// Where to copy the reproduction report.
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StrategyConfig {
    /// "proportional" or "lp_vertex" mixture weights in the certifier.
    pub weight_strategy: String,
    /// Seesaw restarts per constituent.
    pub restarts: usize,
    /// Subtraction iteration budget.
    pub j_max: usize,
    /// Bootstrap resamples in the statistics stage.
    pub resamples: usize,
    /// First-order solver iteration budget.
    pub sdp_max_iter: usize,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            weight_strategy: "proportional".into(),
            restarts: 8,
            j_max: 1000,
            resamples: 1000,
            sdp_max_iter: 50_000,
        }
    }
}

fn default_tolerances() -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("sdp_tol".to_string(), 1e-7),
        ("objective_q0".to_string(), 5e-5),
        ("value_nominal".to_string(), 1e-4),
        ("sigma_ratio".to_string(), 0.2),
    ])
}

/// Canonical configuration for the pipeline. Parsing a config and
/// serializing it back is the identity on the canonical JSON form; missing
/// fields take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub q: f64,
    pub copies: usize,
    pub shots: usize,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub paths: PathsConfig,
    pub strategy: StrategyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            q: NOMINAL_Q,
            copies: 2,
            shots: 50,
            seed: 11,
            tolerances: default_tolerances(),
            paths: PathsConfig::default(),
            strategy: StrategyConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn tol(&self, key: &str, fallback: f64) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(fallback)
    }

    pub fn canonical_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol("sdp_tol", 1e-7),
            max_iter: self.strategy.sdp_max_iter,
            seed: self.seed,
        }
    }

    pub fn weight_strategy(&self) -> Result<WeightStrategy, PipelineError> {
        match self.strategy.weight_strategy.as_str() {
            "proportional" => Ok(WeightStrategy::Proportional),
            "lp_vertex" => Ok(WeightStrategy::LpVertex),
            other => Err(PipelineError::Usage(format!(
                "unknown weight strategy {other:?}; expected \"proportional\" or \"lp_vertex\""
            ))),
        }
    }

    pub fn certifier_config(&self) -> Result<CertifierConfig, PipelineError> {
        Ok(CertifierConfig {
            j_max: self.strategy.j_max,
            restarts: self.strategy.restarts,
            weight_strategy: self.weight_strategy()?,
            seed: self.seed,
            ..CertifierConfig::default()
        })
    }
}

/// Resolve the active config: explicit path, then the `GMEKIT_CONFIG`
/// environment variable, then built-in defaults.
pub fn load_config(explicit: Option<&Path>) -> Result<RunConfig, PipelineError> {
    let path = explicit
        .map(PathBuf::from)
        .or_else(|| std::env::var_os(CONFIG_ENV_VAR).map(PathBuf::from));
    match path {
        Some(p) => Ok(io::read_json(&p)?),
        None => Ok(RunConfig::default()),
    }
}

// ---------------------------------------------------------------------------
// structured progress log (one JSON object per line on stderr)

pub struct JsonLog {
    enabled: bool,
}

impl JsonLog {
    pub fn new(enabled: bool) -> Self {
        Self { enabled }
    }

    pub fn event(&self, kind: &str, data: Value) {
        if self.enabled {
            eprintln!("{}", json!({ "event": kind, "data": data }));
        }
    }
}

// ---------------------------------------------------------------------------
// staged reproduction

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageStatus {
    Pass,
    Fail,
    SkippedAssert,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub status: StageStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReproduceReport {
    pub stages: Vec<StageReport>,
    pub passed: bool,
    pub config: RunConfig,
}

pub const STAGE_NAMES: [&str; 6] = [
    "sdp-witness-q0",
    "witness-validation",
    "pauli-decomposition",
    "two-copy-witness-value",
    "biseparability-certification",
    "shot-noise-statistics",
];

fn pass_fail(ok: bool) -> StageStatus {
    if ok {
        StageStatus::Pass
    } else {
        StageStatus::Fail
    }
}

fn fail_stage(name: &str, err: impl std::fmt::Display) -> StageReport {
    StageReport {
        name: name.into(),
        status: StageStatus::Fail,
        value: None,
        expected: None,
        detail: err.to_string(),
    }
}

fn stage_sdp(cfg: &RunConfig) -> StageReport {
    let name = STAGE_NAMES[0];
    let run = || -> Result<(f64, usize), PipelineError> {
        let rho = states::n_copy_state(0.0, cfg.copies)?;
        let (_, report) = witness::find_witness(&rho, &cfg.solver_options())?;
        Ok((report.objective, report.iterations))
    };
    match run() {
        Ok((v, iters)) => {
            let tol = cfg.tol("objective_q0", 5e-5);
            StageReport {
                name: name.into(),
                status: pass_fail((v - OPTIMUM_Q0).abs() <= tol),
                value: Some(v),
                expected: Some(OPTIMUM_Q0),
                detail: format!("objective {v:.6e} after {iters} iterations (tol {tol:.1e})"),
            }
        }
        Err(e) => fail_stage(name, e),
    }
}

fn stage_validation(w: &Witness) -> StageReport {
    let name = STAGE_NAMES[1];
    let report = witness::validate_certificate(w);
    let failed: Vec<&str> =
        report.checks.iter().filter(|ch| !ch.pass).map(|ch| ch.name.as_str()).collect();
    StageReport {
        name: name.into(),
        status: pass_fail(report.all_pass()),
        value: None,
        expected: None,
        detail: if failed.is_empty() {
            format!("{} checks passed", report.checks.len())
        } else {
            format!("failed checks: {}", failed.join(", "))
        },
    }
}

fn stage_pauli(w: &Witness) -> StageReport {
    let name = STAGE_NAMES[2];
    let run = || -> Result<StageReport, PipelineError> {
        let rows = pauli::pauli_coefficients(&w.w)?;
        let expected = witness::reference_pauli_rows();
        let rows_ok = rows.len() == expected.len()
            && rows
                .iter()
                .zip(expected.iter())
                .all(|(r, (word, m))| r.word == *word && (r.weight - m).abs() <= 1e-9);
        let words: Vec<String> = rows.iter().map(|r| r.word.clone()).collect();
        let settings = pauli::group_settings(&words)?;
        let zcover = settings.first().map(|s| s.members.len()).unwrap_or(0);
        let settings_ok = settings.len() == 17 && zcover == 16;
        Ok(StageReport {
            name: name.into(),
            status: pass_fail(rows_ok && settings_ok),
            value: Some(settings.len() as f64),
            expected: Some(17.0),
            detail: format!(
                "{} rows ({}), {} settings, all-Z reads {} rows",
                rows.len(),
                if rows_ok { "match tabulated coefficients" } else { "MISMATCH" },
                settings.len(),
                zcover
            ),
        })
    };
    run().unwrap_or_else(|e| fail_stage(name, e))
}

fn stage_two_copy_value(cfg: &RunConfig, w: &Witness) -> StageReport {
    let name = STAGE_NAMES[3];
    let run = || -> Result<f64, PipelineError> {
        let rho = states::n_copy_state(cfg.q, cfg.copies)?;
        Ok(witness::evaluate(w, &rho)?)
    };
    match run() {
        Ok(v) => {
            if (cfg.q - NOMINAL_Q).abs() < 1e-9 {
                let tol = cfg.tol("value_nominal", 1e-4);
                StageReport {
                    name: name.into(),
                    status: pass_fail((v - VALUE_NOMINAL).abs() <= tol),
                    value: Some(v),
                    expected: Some(VALUE_NOMINAL),
                    detail: format!("witness value {v:.6e} (tol {tol:.1e})"),
                }
            } else {
                StageReport {
                    name: name.into(),
                    status: StageStatus::SkippedAssert,
                    value: Some(v),
                    expected: Some(VALUE_NOMINAL),
                    detail: format!(
                        "q = {} is off-nominal; value {v:.6e} is expected to differ from the \
                         nominal {VALUE_NOMINAL:.3e}, assertion skipped",
                        cfg.q
                    ),
                }
            }
        }
        Err(e) => fail_stage(name, e),
    }
}

fn stage_certification(cfg: &RunConfig) -> StageReport {
    let name = STAGE_NAMES[4];
    let run = || -> Result<StageReport, PipelineError> {
        let rho = match &cfg.paths.state {
            Some(p) => io::read_json::<MatrixJson>(p)?.to_density()?,
            None => states::single_copy_state(cfg.q)?,
        };
        let trace = bisep::certify(&rho, &cfg.certifier_config()?)?;
        let verdict = match trace.verdict {
            Verdict::Biseparable => "biseparable",
            Verdict::Inconclusive => "inconclusive",
        };
        Ok(StageReport {
            name: name.into(),
            status: pass_fail(trace.verdict == Verdict::Biseparable),
            value: Some(trace.final_purity),
            expected: Some(trace.purity_threshold),
            detail: format!(
                "{verdict} after {} iterations, final purity {:.6}",
                trace.records.len(),
                trace.final_purity
            ),
        })
    };
    run().unwrap_or_else(|e| fail_stage(name, e))
}

fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn stage_statistics(cfg: &RunConfig) -> StageReport {
    let name = STAGE_NAMES[5];
    let run = || -> Result<StageReport, PipelineError> {
        let table = sim::sample_shot_table(cfg.q, &NoiseModel::ideal(), cfg.shots, cfg.seed)?;
        let weights = sim::estimator_weights(cfg.q)?;
        let est = sim::estimate_witness(&table, &weights)?;
        let sigma = sim::propagate_variance(&table, &weights)?.sqrt();
        let resamples =
            sim::resample_witness(&table, &weights, cfg.strategy.resamples, cfg.seed)?;
        let sigma_boot = sample_std(&resamples);
        let ratio = sigma / sigma_boot;
        let ratio_tol = cfg.tol("sigma_ratio", 0.2);
        let ratio_ok = (ratio - 1.0).abs() <= ratio_tol;
        // order-of-magnitude window around the expected few-1e-4 spread
        let order_ok = (1e-4..5e-3).contains(&sigma);
        let mean_ok = if (cfg.q - NOMINAL_Q).abs() < 1e-9 {
            (est - VALUE_NOMINAL).abs() <= 6.0 * sigma
        } else {
            true
        };
        Ok(StageReport {
            name: name.into(),
            status: pass_fail(ratio_ok && order_ok && mean_ok),
            value: Some(est),
            expected: None,
            detail: format!(
                "estimate {est:.6e}, propagated sigma {sigma:.3e}, bootstrap sigma \
                 {sigma_boot:.3e} over {} resamples (ratio {ratio:.3})",
                cfg.strategy.resamples
            ),
        })
    };
    run().unwrap_or_else(|e| fail_stage(name, e))
}

/// Run the six reproduction stages in order. Stage assertion failures do
/// not stop later stages; only configuration-level usage errors (an
/// unreadable witness file, a bad strategy name) abort up front.
pub fn run_reproduce(
    cfg: &RunConfig,
    mut on_stage: impl FnMut(&StageReport),
) -> Result<ReproduceReport, PipelineError> {
    cfg.weight_strategy()?;
    let w = match &cfg.paths.witness {
        Some(p) => io::read_json::<WitnessJson>(p)?.to_witness()?,
        None => witness::reference_witness(),
    };
    let mut stages = Vec::with_capacity(6);
    for stage in [
        stage_sdp(cfg),
        stage_validation(&w),
        stage_pauli(&w),
        stage_two_copy_value(cfg, &w),
        stage_certification(cfg),
        stage_statistics(cfg),
    ] {
        on_stage(&stage);
        stages.push(stage);
    }
    let passed = stages.iter().all(|s| s.status != StageStatus::Fail);
    let report = ReproduceReport { stages, passed, config: cfg.clone() };
    if let Some(p) = &cfg.paths.report {
        io::write_json(p, &report)?;
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// subcommand implementations

pub fn cmd_build_state(
    q: f64,
    copies: usize,
    out: Option<&Path>,
) -> Result<Value, PipelineError> {
    let rho = states::n_copy_state(q, copies)?;
    let j = MatrixJson::from_density(&rho);
    if let Some(p) = out {
        io::write_json(p, &j)?;
    }
    Ok(serde_json::to_value(j)?)
}

pub fn cmd_find_witness(cfg: &RunConfig, out: Option<&Path>) -> Result<Value, PipelineError> {
    let rho = states::n_copy_state(cfg.q, cfg.copies)?;
    let (w, report) = witness::find_witness(&rho, &cfg.solver_options())?;
    let j = WitnessJson::from_witness(&w)?;
    if let Some(p) = out {
        io::write_json(p, &j)?;
    }
    Ok(json!({
        "objective": report.objective,
        "iterations": report.iterations,
        "witness": serde_json::to_value(j)?,
    }))
}

pub fn cmd_validate_witness(
    builtin: bool,
    witness_path: Option<&Path>,
) -> Result<Value, PipelineError> {
    let w = if builtin {
        witness::reference_witness()
    } else {
        let p = witness_path.ok_or_else(|| {
            PipelineError::Usage("pass --builtin or --witness <path>".into())
        })?;
        io::read_json::<WitnessJson>(p)?.to_witness()?
    };
    let report = witness::validate_certificate(&w);
    Ok(json!({
        "all_pass": report.all_pass(),
        "checks": report
            .checks
            .iter()
            .map(|c| json!({ "name": c.name, "pass": c.pass, "detail": c.detail }))
            .collect::<Vec<_>>(),
    }))
}

pub fn cmd_certify_bisep(
    cfg: &RunConfig,
    state_path: Option<&Path>,
    out: Option<&Path>,
) -> Result<Value, PipelineError> {
    let rho = match state_path {
        Some(p) => io::read_json::<MatrixJson>(p)?.to_density()?,
        None => states::single_copy_state(cfg.q)?,
    };
    let trace = bisep::certify(&rho, &cfg.certifier_config()?)?;
    let j = TraceJson::from_trace(&trace);
    if let Some(p) = out {
        io::write_json(p, &j)?;
    }
    Ok(serde_json::to_value(j)?)
}

/// `shots = 0` emits the analytic-limit table.
pub fn cmd_simulate(
    q: f64,
    shots: usize,
    seed: u64,
    noise: &NoiseModel,
    out: Option<&Path>,
) -> Result<Value, PipelineError> {
    let table = if shots == 0 {
        sim::exact_shot_table(q, noise)?
    } else {
        sim::sample_shot_table(q, noise, shots, seed)?
    };
    let j = ShotTableJson::from_table(&table);
    if let Some(p) = out {
        io::write_json(p, &j)?;
    }
    Ok(serde_json::to_value(j)?)
}

pub struct EstimateArgs<'a> {
    pub q: f64,
    pub table: Option<&'a Path>,
    pub shots: usize,
    pub seed: u64,
    pub resample: usize,
    pub hist: Option<&'a Path>,
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<Value, PipelineError> {
    let table = match args.table {
        Some(p) => io::read_json::<ShotTableJson>(p)?.to_table()?,
        None if args.shots == 0 => sim::exact_shot_table(args.q, &NoiseModel::ideal())?,
        None => sim::sample_shot_table(args.q, &NoiseModel::ideal(), args.shots, args.seed)?,
    };
    let weights = sim::estimator_weights(args.q)?;
    let est = sim::estimate_witness(&table, &weights)?;
    let var = sim::propagate_variance(&table, &weights)?;
    let mut out = json!({
        "estimate": est,
        "variance": var,
        "sigma_propagated": var.sqrt(),
    });
    if args.hist.is_some() && args.resample < 2 {
        return Err(PipelineError::Usage(
            "--hist needs --resample of at least 2".into(),
        ));
    }
    if args.resample >= 2 {
        if table.n == 0 {
            return Err(PipelineError::Usage(
                "cannot bootstrap an analytic-limit table; simulate with --shots first".into(),
            ));
        }
        let estimates = sim::resample_witness(&table, &weights, args.resample, args.seed)?;
        out["sigma_bootstrap"] = json!(sample_std(&estimates));
        out["resamples"] = json!(estimates.len());
        if let Some(p) = args.hist {
            std::fs::write(p, sim::estimates_to_csv(&estimates))
                .map_err(|e| PipelineError::Compute(format!("writing {}: {e}", p.display())))?;
        }
    }
    Ok(out)
}
