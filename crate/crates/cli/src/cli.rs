//! Command-line front end: simulate, estimate, spectrum, schedule, detect,
//! experiment. Exit codes: 0 success, 1 configuration/usage error, 2
//! runtime error.

use crate::config::{ConfigError, ExperimentConfig};
use crate::experiment::{run_experiment, write_experiment_outputs, ExperimentError};
use clap::{Args, Parser, Subcommand};
use finrank_core::detect::{run_detection, run_fixed_boundary};
use finrank_core::schedule::{
    build_schedule, prior_mass_bounds, Algorithm, LambdaRule, PriorSpec, RateConfig, Verdict,
};
use finrank_core::seed::mix_seed;
use finrank_core::simulate::{observe_with, simulate_paths, ObservationSet};
use finrank_core::smooth::{
    default_bandwidths_scaled, estimate_cov, estimate_mean, SmootherConfig,
};
use finrank_core::spectral::{eigendecompose, tail_hs};
use finrank_core::{BandwidthPolicy, GridKernel};
use std::path::{Path, PathBuf};

#[derive(Debug)]
enum CliError {
    /// Bad input: config files, flags, constraint violations.
    Config(String),
    /// Failures while executing a valid request.
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(c) => CliError::Config(c.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "finrank",
    version,
    about = "Detects whether a stochastic process is finitely expressed in a basis, \
             from noisy discretely observed sample paths"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Experiment configuration JSON (see configs/ for examples)
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate sample paths and write the noisy discrete observations
    Simulate {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Number of curves (default: the schedule's last update time)
        #[arg(long)]
        n: Option<usize>,
        /// Output path for the observation set JSON
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the mean function and covariance kernel from observations
    Estimate {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Observation set JSON (as written by `simulate`)
        #[arg(long)]
        obs: PathBuf,
        #[arg(long, value_name = "PATH")]
        out_mean: PathBuf,
        #[arg(long, value_name = "PATH")]
        out_cov: PathBuf,
    },
    /// Print the leading eigenvalues and residual tails of a kernel
    Spectrum {
        /// Grid kernel JSON (as written by `estimate`)
        #[arg(long)]
        kernel: PathBuf,
        /// How many leading eigenvalues to print
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Optional path for the full decomposition JSON
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Build an update-time/threshold schedule and certify its prior bounds
    Schedule {
        /// some-basis or given-basis
        #[arg(long)]
        alg: String,
        /// Update-time growth exponent: n(j) ~ c_n j^p
        #[arg(long)]
        p: f64,
        /// Threshold growth exponent k(j) = ceil(j^q) (given-basis only)
        #[arg(long)]
        q: Option<f64>,
        #[arg(long, default_value_t = 10.0)]
        c_n: f64,
        #[arg(long, default_value_t = 10)]
        j_max: usize,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long, default_value_t = 1.0)]
        c_r: f64,
        /// lambda_1 of the exponential-order-statistic prior (some-basis)
        #[arg(long, default_value_t = 1.0)]
        lambda1: f64,
        /// rho of the Gaussian square-ordered prior (given-basis)
        #[arg(long, default_value_t = 0.1)]
        rho: f64,
    },
    /// Run one detection replicate and write its decision trajectory
    Detect {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Replace the estimator with the exact process covariance
        #[arg(long)]
        oracle_cov: bool,
        /// Replicate index (seeds mix with the master seed)
        #[arg(long, default_value_t = 0)]
        replicate: usize,
        /// Constant-threshold variant: bundle every rank above the cap
        #[arg(long)]
        q_cap: Option<usize>,
        /// Trajectory CSV path (stdout when omitted)
        #[arg(long)]
        out_csv: Option<PathBuf>,
        /// Optional trajectory JSON path
        #[arg(long)]
        out_json: Option<PathBuf>,
    },
    /// Run replicated detections and aggregate decision frequencies
    Experiment {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        oracle_cov: bool,
        /// Worker threads (default: FINRANK_JOBS, then all cores)
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory (overrides the config's output_dir)
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("cannot parse {what} {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn run_command(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate { cfg, n, out } => {
            let config = ExperimentConfig::load(&cfg.config)?;
            let n = match n {
                Some(n) if n >= 1 => n,
                Some(n) => return Err(CliError::Config(format!("n must be >= 1, got {n}"))),
                None => *config.build_schedule()?.update_times.last().unwrap() as usize,
            };
            let paths = simulate_paths(&config.process, n, config.master_seed)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let obs = observe_with(&paths, &config.observation, config.master_seed)
                .map_err(|e| CliError::Config(e.to_string()))?;
            write_file(&out, &serde_json::to_string(&obs).expect("serializes"))?;
            println!(
                "wrote {} curves x {} points to {}",
                obs.n(),
                obs.r(),
                out.display()
            );
            Ok(())
        }
        Command::Estimate {
            cfg,
            obs,
            out_mean,
            out_cov,
        } => {
            let config = ExperimentConfig::load(&cfg.config)?;
            let observations: ObservationSet = read_json(&obs, "observation set")?;
            observations
                .validate()
                .map_err(|e| CliError::Config(e.to_string()))?;
            let (h_mu, h_g) = match config.smoother.bandwidths {
                BandwidthPolicy::Pinned { h_mu, h_g } => (h_mu, h_g),
                BandwidthPolicy::Default { c_h } => default_bandwidths_scaled(
                    observations.n().max(2),
                    observations.r().max(2),
                    c_h,
                ),
            };
            let smoother_cfg = SmootherConfig::new(
                config.smoother.kernel,
                h_mu,
                h_g,
                config.smoother.grid_size,
            );
            let mean = estimate_mean(&observations, &smoother_cfg)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            let cov = estimate_cov(&observations, &smoother_cfg)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            write_file(&out_mean, &serde_json::to_string(&mean).expect("serializes"))?;
            write_file(&out_cov, &serde_json::to_string(&cov).expect("serializes"))?;
            println!(
                "estimated on {} curves (h_mu={h_mu:.4}, h_G={h_g:.4}); mean -> {}, covariance -> {}",
                observations.n(),
                out_mean.display(),
                out_cov.display()
            );
            Ok(())
        }
        Command::Spectrum { kernel, top, json } => {
            let k: GridKernel = read_json(&kernel, "grid kernel")?;
            let d = eigendecompose(&k).map_err(|e| CliError::Runtime(e.to_string()))?;
            println!("{:>4} {:>14} {:>14}", "l", "eigenvalue", "tail_hs(l)");
            for l in 0..top.min(d.eigenvalues.len()) {
                println!(
                    "{:>4} {:>14.6e} {:>14.6e}",
                    l + 1,
                    d.eigenvalues[l],
                    tail_hs(&d, l + 1)
                );
            }
            println!("hs norm: {:.6e}", tail_hs(&d, 0));
            if let Some(path) = json {
                write_file(&path, &serde_json::to_string(&d).expect("serializes"))?;
            }
            Ok(())
        }
        Command::Schedule {
            alg,
            p,
            q,
            c_n,
            j_max,
            epsilon,
            c_r,
            lambda1,
            rho,
        } => {
            let algorithm = match alg.as_str() {
                "some-basis" => Algorithm::SomeBasis,
                "given-basis" => Algorithm::GivenBasis,
                other => {
                    return Err(CliError::Config(format!(
                        "unknown --alg {other} (expected some-basis or given-basis)"
                    )))
                }
            };
            let rate = RateConfig::dense(epsilon, c_r);
            let sched = build_schedule(algorithm, p, q, c_n, j_max, &rate)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let prior = match algorithm {
                Algorithm::SomeBasis => PriorSpec::ExpOrderstat {
                    lambda1,
                    rule: LambdaRule::PSeries { exponent: 2.0 },
                },
                Algorithm::GivenBasis => PriorSpec::GaussSquare { rho },
            };
            let report =
                prior_mass_bounds(&prior, &sched).map_err(|e| CliError::Config(e.to_string()))?;
            println!(
                "{:>6} {:>12} {:>8} {:>12} {:>12}",
                "j", "n(j)", "k(j)", "delta", "bound"
            );
            for i in 0..sched.update_times.len() {
                println!(
                    "{:>6} {:>12} {:>8} {:>12.6} {:>12.6e}",
                    i + 1,
                    sched.update_times[i],
                    sched.thresholds[i],
                    sched.deltas[i],
                    report.bounds[i]
                );
            }
            println!(
                "summability: {} (fitted tail exponent {:.3})",
                match report.verdict {
                    Verdict::Pass => "PASS",
                    Verdict::Fail => "FAIL",
                },
                report.fitted_exponent
            );
            Ok(())
        }
        Command::Detect {
            cfg,
            oracle_cov,
            replicate,
            q_cap,
            out_csv,
            out_json,
        } => {
            let config = ExperimentConfig::load(&cfg.config)?;
            let setup = config.detection_setup(oracle_cov)?;
            let seed = mix_seed(config.master_seed, replicate as u64);
            let traj = match q_cap {
                None => run_detection(&setup, seed),
                Some(cap) if cap >= 1 => run_fixed_boundary(&setup, cap, seed),
                Some(cap) => {
                    return Err(CliError::Config(format!("q_cap must be >= 1, got {cap}")))
                }
            }
            .map_err(|e| CliError::Runtime(e.to_string()))?;
            let csv = traj.to_csv();
            match out_csv {
                Some(path) => write_file(&path, &csv)?,
                None => print!("{csv}"),
            }
            if let Some(path) = out_json {
                write_file(&path, &serde_json::to_string_pretty(&traj).expect("serializes"))?;
            }
            eprintln!(
                "final decision: {}",
                traj.decision_label(traj.final_decision)
            );
            Ok(())
        }
        Command::Experiment {
            cfg,
            oracle_cov,
            jobs,
            out_dir,
        } => {
            let config = ExperimentConfig::load(&cfg.config)?;
            let out_dir = out_dir
                .or_else(|| config.output_dir.clone())
                .ok_or_else(|| {
                    CliError::Config(
                        "no output directory: set output_dir in the config or pass --out-dir"
                            .into(),
                    )
                })?;
            let (summary, trajectories) = run_experiment(&config, oracle_cov, jobs)?;
            let summary_path = write_experiment_outputs(&summary, &trajectories, &out_dir)?;
            println!(
                "{} replicates completed, {} failed",
                summary.replicates_completed,
                summary.failures.len()
            );
            for (label, f) in &summary.final_histogram {
                println!("final {label}: {f:.3}");
            }
            println!("summary: {}", summary_path.display());
            Ok(())
        }
    }
}

/// Parses argv and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap's help/version "errors" are successful exits
            if e.use_stderr() {
                eprint!("{e}");
                return 1;
            }
            print!("{e}");
            return 0;
        }
    };
    match run_command(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
