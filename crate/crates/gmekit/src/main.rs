use clap::{Parser, Subcommand};
use gmekit::pipeline::{self, EstimateArgs, JsonLog, PipelineError};
use gmekit::sim::NoiseModel;
use serde_json::{json, Value};
use std::path::PathBuf;

/// Two-copy GME activation toolkit: decomposable-witness SDPs,
/// biseparability certification, and shot-level witness statistics.
#[derive(Parser)]
#[command(name = "gmekit", version)]
struct Cli {
    /// Config file (falls back to $GMEKIT_CONFIG, then built-in defaults)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed override
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Emit one structured JSON progress line per step on stderr
    #[arg(long, global = true)]
    json_log: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the six-stage end-to-end reproduction and print the report
    Reproduce {
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        shots: Option<usize>,
        /// Also write the report JSON here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the n-copy constituent mixture as density-matrix JSON
    BuildState {
        #[arg(long, default_value_t = 0.0)]
        q: f64,
        #[arg(long, default_value_t = 2)]
        copies: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the fully-decomposable-witness SDP for the configured state
    FindWitness {
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        copies: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check Hermiticity, trace, certificate PSD-ness, and decompositions
    ValidateWitness {
        /// Validate the built-in reference witness
        #[arg(long, conflicts_with = "witness")]
        builtin: bool,
        /// Witness JSON to validate instead
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Iterative product-state subtraction on a single-copy state
    CertifyBisep {
        #[arg(long)]
        q: Option<f64>,
        /// Density-matrix JSON to certify instead of the built-in mixture
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a full shot table (--shots 0 emits the analytic limit)
    Simulate {
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        shots: Option<usize>,
        #[arg(long, default_value_t = 0.0)]
        depolarizing: f64,
        #[arg(long, default_value_t = 0.0)]
        dephasing: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Witness estimate with propagated and bootstrap errors
    Estimate {
        #[arg(long)]
        q: Option<f64>,
        /// Shot-table JSON (otherwise a table is simulated in place)
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        shots: Option<usize>,
        /// Bootstrap resample count (0 disables)
        #[arg(long, default_value_t = 0)]
        resample: usize,
        /// Write the resampled estimates as CSV
        #[arg(long)]
        hist: Option<PathBuf>,
    },
}

fn run(cli: &Cli, log: &JsonLog) -> Result<(Value, i32), PipelineError> {
    let mut cfg = pipeline::load_config(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match &cli.command {
        Command::Reproduce { q, shots, out } => {
            if let Some(q) = q {
                cfg.q = *q;
            }
            if let Some(s) = shots {
                cfg.shots = *s;
            }
            if let Some(o) = out {
                cfg.paths.report = Some(o.clone());
            }
            log.event("config", cfg.canonical_json());
            let report = pipeline::run_reproduce(&cfg, |stage| {
                log.event("stage", serde_json::to_value(stage).unwrap_or_default());
            })?;
            let code = i32::from(!report.passed);
            Ok((serde_json::to_value(&report)?, code))
        }
        Command::BuildState { q, copies, out } => {
            Ok((pipeline::cmd_build_state(*q, *copies, out.as_deref())?, 0))
        }
        Command::FindWitness { q, copies, out } => {
            if let Some(q) = q {
                cfg.q = *q;
            }
            if let Some(c) = copies {
                cfg.copies = *c;
            }
            log.event("solve", json!({ "q": cfg.q, "copies": cfg.copies }));
            Ok((pipeline::cmd_find_witness(&cfg, out.as_deref())?, 0))
        }
        Command::ValidateWitness { builtin, witness } => {
            Ok((pipeline::cmd_validate_witness(*builtin, witness.as_deref())?, 0))
        }
        Command::CertifyBisep { q, state, out } => {
            if let Some(q) = q {
                cfg.q = *q;
            }
            Ok((pipeline::cmd_certify_bisep(&cfg, state.as_deref(), out.as_deref())?, 0))
        }
        Command::Simulate { q, shots, depolarizing, dephasing, out } => {
            let noise = NoiseModel { depolarizing: *depolarizing, dephasing: *dephasing };
            let q = q.unwrap_or(cfg.q);
            let shots = shots.unwrap_or(cfg.shots);
            log.event("simulate", json!({ "q": q, "shots": shots, "seed": cfg.seed }));
            Ok((pipeline::cmd_simulate(q, shots, cfg.seed, &noise, out.as_deref())?, 0))
        }
        Command::Estimate { q, table, shots, resample, hist } => {
            let args = EstimateArgs {
                q: q.unwrap_or(cfg.q),
                table: table.as_deref(),
                shots: shots.unwrap_or(cfg.shots),
                seed: cfg.seed,
                resample: *resample,
                hist: hist.as_deref(),
            };
            Ok((pipeline::cmd_estimate(&args)?, 0))
        }
    }
}

fn main() {
    // clap exits 2 on its own for malformed arguments
    let cli = Cli::parse();
    let log = JsonLog::new(cli.json_log);
    match run(&cli, &log) {
        Ok((value, code)) => {
            println!("{}", serde_json::to_string_pretty(&value).expect("serializable output"));
            std::process::exit(code);
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            std::process::exit(e.exit_code());
        }
    }
}
