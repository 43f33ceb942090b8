//! Run the full six-stage reproduction pipeline with default settings and
//! print one line per stage. Exits nonzero if any stage fails, mirroring
//! the CLI's `reproduce` subcommand.

use gmekit::pipeline::{self, RunConfig, StageStatus};

fn main() -> anyhow::Result<()> {
    let cfg = RunConfig::default();
    println!("config: {}", serde_json::to_string(&cfg.canonical_json())?);
    let report = pipeline::run_reproduce(&cfg, |stage| {
        let tag = match stage.status {
            StageStatus::Pass => "PASS",
            StageStatus::Fail => "FAIL",
            StageStatus::SkippedAssert => "SKIP",
        };
        println!("[{tag}] {:<30} {}", stage.name, stage.detail);
    })?;
    println!("passed = {}", report.passed);
    if !report.passed {
        std::process::exit(1);
    }
    Ok(())
}
