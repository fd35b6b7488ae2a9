//! Experiment harness for `srip-core`: configs, sweeps, persistence.
//!
//! ```no_run
//! use srip_harness::{run, ExperimentConfig, Kind, RunOptions};
//!
//! let cfg = ExperimentConfig::new(Kind::Mu).with_param("trials", 10_000);
//! let outcome = run(&cfg, &RunOptions::default()).unwrap();
//! std::process::exit(outcome.exit_code());
//! ```

pub mod config;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod sweep;

use std::path::PathBuf;

pub use config::{ExperimentConfig, Kind, Resolved};
pub use error::{HarnessError, Result};
pub use experiments::{execute, Artifacts, Check};
pub use sweep::{sweep_phase_transition, PhaseTransitionCell};

use formats::{to_json_bytes, write_file, Record, SCHEMA_VERSION};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses rayon's global pool.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub record: Record,
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn failed_bounds(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.proved_bound && !c.passed)
    }

    /// 3 if a proved bound failed its statistical test, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.failed_bounds().next().is_some() {
            3
        } else {
            0
        }
    }
}

/// The file contents of a run, without writing anything.
pub fn render(resolved: &Resolved, artifacts: &Artifacts) -> (Record, Vec<u8>, Option<Vec<u8>>) {
    let config = resolved.echo();
    let mut results = artifacts.results.clone();
    if let serde_json::Value::Object(map) = &mut results {
        map.insert("checks".into(), serde_json::to_value(&artifacts.checks).expect("serialisable"));
    }
    let record =
        Record { schema_version: SCHEMA_VERSION, kind: resolved.kind.name().into(), config: config.clone(), results };
    let json = to_json_bytes(&record);
    let csv = artifacts.table.as_ref().map(|t| t.to_bytes(&config));
    (record, json, csv)
}

/// Validates, runs and writes `<kind>.json` (and `<kind>.csv` for tabular
/// kinds) into the config's output directory.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome> {
    let resolved = config.resolve()?;
    let dir = config.output_dir();
    std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    let artifacts = match opts.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| HarnessError::config(e.to_string()))?
            .install(|| execute(&resolved))?,
        None => execute(&resolved)?,
    };
    let (record, json, csv) = render(&resolved, &artifacts);
    let mut files = Vec::new();
    let base = dir.join(resolved.kind.name());
    let path = base.with_extension("json");
    write_file(&path, &json)?;
    files.push(path);
    if let Some(csv) = csv {
        let path = base.with_extension("csv");
        write_file(&path, &csv)?;
        files.push(path);
    }
    Ok(Outcome { record, checks: artifacts.checks, files })
}
