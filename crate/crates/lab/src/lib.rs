//! Experiment harness around `kdv-core`: scenario files, field and table
//! formats, and the runners behind the `lab` binary.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod field;
pub mod runners;

use std::path::Path;
use std::time::Instant;

use serde_json::{json, Value};

pub use config::{Experiment, Scenario};
pub use error::{LabError, Result};

use artifacts::{num, OutputDir};

pub struct RunReport {
    pub summary: Value,
    pub lines: Vec<String>,
    pub artifacts: Vec<String>,
}

/// Validates and runs a scenario, writing the resolved `scenario.json`, the
/// kind-specific tables, `summary.json` and `manifest.json` into `out_dir`.
/// `lab run <out_dir>/scenario.json` repeats the run exactly.
///
/// All artifacts except the manifest's `wall_time_s` are a pure function of
/// the scenario (seed included).
pub fn run_scenario(sc: &Scenario, out_dir: &Path) -> Result<RunReport> {
    sc.validate()?;
    let start = Instant::now();
    let mut out = OutputDir::create(out_dir)?;
    out.write_json("scenario.json", &serde_json::to_value(sc).expect("scenario serializes"))?;
    let outcome = runners::run_experiment(sc, &mut out)?;
    let summary = json!({
        "name": sc.name,
        "kind": sc.experiment.kind(),
        "seed": sc.seed,
        "result": outcome.summary,
    });
    out.write_json("summary.json", &summary)?;
    let mut artifacts = out.written().to_vec();
    artifacts.push("manifest.json".into());
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "schema_version": config::SCHEMA_VERSION,
        "seed": sc.seed,
        "scenario": serde_json::to_value(sc).expect("scenario serializes"),
        "artifacts": artifacts,
        "wall_time_s": num(start.elapsed().as_secs_f64()),
    });
    out.write_json("manifest.json", &manifest)?;
    Ok(RunReport { summary, lines: outcome.lines, artifacts })
}
