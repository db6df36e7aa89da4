//! Monte Carlo sweep harness with CSV emission.
//!
//! Each (swept value, trial, algorithm) triple yields one record. A trial's
//! channel seed derives from the master seed and trial index only, so the
//! same fading realizations recur across swept values and algorithms; the
//! comparisons in the trend suite are matched-seed by construction, and
//! records are bit-identical whatever the parallelism.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::channel::sample_channels;
use crate::config::{AlgorithmKind, ExperimentConfig};
use crate::error::{Error, Result};
use crate::exec;
use crate::rng::derive_seed;
use crate::sca::SurrogateBackend;

use super::{run_all, SolveContext};

/// Tag separating trial-seed derivation from other stream uses.
const TRIAL_SEED_TAG: u64 = 0x7472_6961_6c73; // "trials"

/// One solved (value, trial, algorithm) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub swept_value: f64,
    pub algorithm: AlgorithmKind,
    /// Weighted objective; infinity when the algorithm was infeasible.
    pub total_cost: f64,
    pub latency_sum: f64,
    pub energy_sum: f64,
    pub active_units_per_slot: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    /// Wall-clock solve time. Not serialized into the CSV: identical
    /// configurations must produce byte-identical files at any parallelism.
    pub wall_time_ms: f64,
}

/// Header of the emitted CSV (wall time deliberately excluded).
pub const CSV_HEADER: &str =
    "trial,seed,swept_value,algorithm,total_cost,latency_sum,energy_sum,active_units_per_slot,iterations,converged";

impl TrialRecord {
    pub fn csv_row(&self) -> String {
        let units = self
            .active_units_per_slot
            .iter()
            .map(|u| u.to_string())
            .collect::<Vec<_>>()
            .join(";");
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.trial,
            self.seed,
            self.swept_value,
            self.algorithm.id(),
            self.total_cost,
            self.latency_sum,
            self.energy_sum,
            units,
            self.iterations,
            self.converged
        )
    }
}

/// Completed sweep: records plus the rendered artifacts.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub records: Vec<TrialRecord>,
    pub csv: String,
    pub csv_filename: String,
    pub manifest: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    master_seed: u64,
    records: usize,
    csv_file: &'a str,
    config: &'a ExperimentConfig,
}

/// Run the configured sweep. `parallel` selects the rayon driver when the
/// `parallel` feature is compiled in; output bytes do not depend on it.
pub fn run_sweep(config: &ExperimentConfig, parallel: bool) -> Result<SweepOutput> {
    config.validate()?;
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("run_sweep needs a sweep section".into()))?;

    struct Job {
        value: f64,
        trial: usize,
        seed: u64,
        config: ExperimentConfig,
    }
    let mut jobs = Vec::with_capacity(sweep.values.len() * config.trials);
    for &value in &sweep.values {
        let swept = config.with_swept_value(sweep.parameter, value);
        swept.validate()?;
        for trial in 0..config.trials {
            jobs.push(Job {
                value,
                trial,
                seed: derive_seed(config.master_seed, &[TRIAL_SEED_TAG, trial as u64]),
                config: swept.clone(),
            });
        }
    }

    let results: Vec<Result<Vec<TrialRecord>>> = exec::map_jobs(jobs, parallel, |job| {
        let realization = sample_channels(
            &job.config.geometry,
            &job.config.path_loss,
            job.config.dims,
            job.seed,
            job.config.fading,
        )?;
        let backend = SurrogateBackend::default();
        let ctx = SolveContext::from_config(&job.config, &backend);
        let mut records = Vec::with_capacity(job.config.algorithms.len());
        for (kind, outcome) in run_all(&ctx, &realization, &job.config.algorithms) {
            let started = std::time::Instant::now();
            let record = match outcome {
                Ok(out) => TrialRecord {
                    trial: job.trial,
                    seed: job.seed,
                    swept_value: job.value,
                    algorithm: kind,
                    total_cost: out.cost.total_cost,
                    latency_sum: out.cost.latency_sum,
                    energy_sum: out.cost.energy_sum,
                    active_units_per_slot: out.active_units_per_slot(),
                    iterations: out.iterations,
                    converged: out.converged,
                    wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
                },
                Err(_) => TrialRecord {
                    trial: job.trial,
                    seed: job.seed,
                    swept_value: job.value,
                    algorithm: kind,
                    total_cost: f64::INFINITY,
                    latency_sum: f64::INFINITY,
                    energy_sum: f64::INFINITY,
                    active_units_per_slot: vec![],
                    iterations: 0,
                    converged: false,
                    wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
                },
            };
            records.push(record);
        }
        Ok(records)
    });

    let mut records = Vec::new();
    for r in results {
        records.extend(r?);
    }

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in &records {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    let csv_filename = format!("sweep_{}.csv", sweep.parameter.id());
    let manifest = serde_json::to_string_pretty(&Manifest {
        tool: "ris-mec",
        version: env!("CARGO_PKG_VERSION"),
        master_seed: config.master_seed,
        records: records.len(),
        csv_file: &csv_filename,
        config,
    })
    .map_err(|e| Error::Io(e.to_string()))?;

    Ok(SweepOutput { records, csv, csv_filename, manifest })
}

/// Write the CSV and run manifest into `dir`, returning the paths.
pub fn write_sweep(output: &SweepOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let csv_path = dir.join(&output.csv_filename);
    std::fs::write(&csv_path, &output.csv)
        .map_err(|e| Error::Io(format!("{}: {e}", csv_path.display())))?;
    let manifest_path = dir.join("run_manifest.json");
    std::fs::write(&manifest_path, &output.manifest)
        .map_err(|e| Error::Io(format!("{}: {e}", manifest_path.display())))?;
    Ok(vec![csv_path, manifest_path])
}

/// Median of a sample (infinite entries sort last).
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}
