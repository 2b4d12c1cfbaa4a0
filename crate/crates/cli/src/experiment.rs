//! Monte Carlo experiment runner: replicated detection runs with split
//! seeds, deterministic aggregation, and file outputs.

use crate::config::{ConfigError, ExperimentConfig};
use finrank_core::detect::{run_detection, DecisionTrajectory, DetectError};
use finrank_core::schedule::{prior_mass_bounds, DetectionSchedule, PriorMassReport, PriorSpec};
use finrank_core::seed::mix_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("every replicate failed; first error: {0}")]
    AllReplicatesFailed(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// A replicate that aborted, with the error it reported.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub error: String,
}

/// Decision frequencies and estimator error statistics at one update time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UpdateRow {
    pub j: usize,
    pub n: u64,
    pub k: usize,
    pub delta: f64,
    /// decision label -> fraction of completed replicates
    pub frequencies: BTreeMap<String, f64>,
    pub mean_sup_error: Option<f64>,
    pub max_sup_error: Option<f64>,
}

/// Aggregated outcome of a replicated experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub schema_version: u32,
    /// Unix seconds at generation time; the only nondeterministic field.
    pub generated_at: String,
    pub config: ExperimentConfig,
    pub oracle_cov: bool,
    pub schedule: DetectionSchedule,
    pub prior: PriorSpec,
    pub prior_bounds: PriorMassReport,
    pub replicates_completed: usize,
    pub failures: Vec<ReplicateFailure>,
    pub update_table: Vec<UpdateRow>,
    pub final_histogram: BTreeMap<String, f64>,
}

/// Runs the configured number of replicates (replicate i is seeded with
/// mix_seed(master_seed, i)) and aggregates their trajectories.
///
/// Replicates run concurrently on a private thread pool of `jobs` workers
/// (`FINRANK_JOBS`, else rayon's default); aggregation is a deterministic
/// fold in replicate order, so the summary does not depend on parallelism.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    oracle_cov: bool,
    jobs: Option<usize>,
) -> Result<(ExperimentSummary, Vec<Option<DecisionTrajectory>>), ExperimentError> {
    cfg.validate()?;
    let setup = cfg.detection_setup(oracle_cov)?;
    let schedule = setup.schedule.clone();
    let prior = cfg.prior();
    let prior_bounds =
        prior_mass_bounds(&prior, &schedule).map_err(|e| ConfigError::Invalid(e.to_string()))?;

    let jobs = jobs
        .or_else(|| {
            std::env::var("FINRANK_JOBS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0); // 0 = rayon default
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool");

    let results: Vec<Result<DecisionTrajectory, DetectError>> = pool.install(|| {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|i| run_detection(&setup, mix_seed(cfg.master_seed, i as u64)))
            .collect()
    });

    let mut trajectories: Vec<Option<DecisionTrajectory>> = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, res) in results.into_iter().enumerate() {
        match res {
            Ok(t) => trajectories.push(Some(t)),
            Err(e) => {
                failures.push(ReplicateFailure {
                    replicate: i,
                    error: e.to_string(),
                });
                trajectories.push(None);
            }
        }
    }
    let completed: Vec<&DecisionTrajectory> =
        trajectories.iter().flatten().collect();
    if completed.is_empty() {
        return Err(ExperimentError::AllReplicatesFailed(
            failures
                .first()
                .map(|f| f.error.clone())
                .unwrap_or_default(),
        ));
    }

    let n_done = completed.len() as f64;
    let mut update_table = Vec::with_capacity(schedule.update_times.len());
    for idx in 0..schedule.update_times.len() {
        let mut frequencies: BTreeMap<String, f64> = BTreeMap::new();
        let mut sup_sum = 0.0;
        let mut sup_max: Option<f64> = None;
        let mut sup_count = 0usize;
        for t in &completed {
            let e = &t.entries[idx];
            *frequencies
                .entry(t.decision_label(e.decision))
                .or_insert(0.0) += 1.0;
            if let Some(s) = e.sup_error {
                sup_sum += s;
                sup_max = Some(sup_max.map_or(s, |m: f64| m.max(s)));
                sup_count += 1;
            }
        }
        for v in frequencies.values_mut() {
            *v /= n_done;
        }
        update_table.push(UpdateRow {
            j: idx + 1,
            n: schedule.update_times[idx],
            k: schedule.thresholds[idx],
            delta: schedule.deltas[idx],
            frequencies,
            mean_sup_error: (sup_count > 0).then(|| sup_sum / sup_count as f64),
            max_sup_error: sup_max,
        });
    }

    let mut final_histogram: BTreeMap<String, f64> = BTreeMap::new();
    for t in &completed {
        *final_histogram
            .entry(t.decision_label(t.final_decision))
            .or_insert(0.0) += 1.0;
    }
    for v in final_histogram.values_mut() {
        *v /= n_done;
    }

    let generated_at = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs().to_string())
        .unwrap_or_default();

    let summary = ExperimentSummary {
        schema_version: crate::config::SCHEMA_VERSION,
        generated_at,
        config: cfg.clone(),
        oracle_cov,
        schedule,
        prior,
        prior_bounds,
        replicates_completed: completed.len(),
        failures,
        update_table,
        final_histogram,
    };
    Ok((summary, trajectories))
}

fn write(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| ExperimentError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Persists one trajectory CSV per replicate and the plot-ready
/// frequency/error curves, then the summary JSON as the single final write.
pub fn write_experiment_outputs(
    summary: &ExperimentSummary,
    trajectories: &[Option<DecisionTrajectory>],
    out_dir: &Path,
) -> Result<PathBuf, ExperimentError> {
    for (i, traj) in trajectories.iter().enumerate() {
        if let Some(t) = traj {
            write(
                &out_dir.join(format!("replicates/rep_{i:04}.csv")),
                &t.to_csv(),
            )?;
        }
    }

    let mut freq = String::from("n,decision,frequency\n");
    for row in &summary.update_table {
        for (label, f) in &row.frequencies {
            freq.push_str(&format!("{},{},{}\n", row.n, label, f));
        }
    }
    write(&out_dir.join("decision_frequency_vs_n.csv"), &freq)?;

    let mut err = String::from("n,mean_sup_error,max_sup_error\n");
    for row in &summary.update_table {
        if let (Some(mean), Some(max)) = (row.mean_sup_error, row.max_sup_error) {
            err.push_str(&format!("{},{},{}\n", row.n, mean, max));
        }
    }
    write(&out_dir.join("error_vs_n.csv"), &err)?;

    let summary_path = out_dir.join("summary.json");
    let json = serde_json::to_string_pretty(summary).expect("summary serializes");
    write(&summary_path, &json)?;
    Ok(summary_path)
}
