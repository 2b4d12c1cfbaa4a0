//! The single JSON experiment configuration consumed by every subcommand.

use finrank_core::detect::{BandwidthPolicy, CovSource, DetectionSetup};
use finrank_core::schedule::{
    build_schedule, Algorithm, DetectionSchedule, LambdaRule, PriorSpec, RateConfig,
};
use finrank_core::simulate::{BasisSpec, ObsConfig, ProcessSpec};
use finrank_core::smooth::KernelKind;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Config documents carry a schema version so stored files stay readable.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("unsupported schema_version {found} (this build reads {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Smoothing settings: kernel, output resolution, and the per-update
/// bandwidth policy.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SmootherSection {
    pub kernel: KernelKind,
    pub grid_size: usize,
    pub bandwidths: BandwidthPolicy,
}

impl Default for SmootherSection {
    fn default() -> Self {
        Self {
            kernel: KernelKind::Epanechnikov,
            grid_size: 101,
            bandwidths: BandwidthPolicy::Default { c_h: 1.0 },
        }
    }
}

/// Update-time/threshold schedule parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScheduleSection {
    pub algorithm: Algorithm,
    pub p: f64,
    #[serde(default)]
    pub q: Option<f64>,
    pub c_n: f64,
    pub j_max: usize,
}

fn default_l_max() -> usize {
    400
}

fn default_replicates() -> usize {
    1
}

/// The complete experiment description; see `configs/` for examples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub process: ProcessSpec,
    pub observation: ObsConfig,
    #[serde(default)]
    pub smoother: SmootherSection,
    pub rate: RateConfig,
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub basis: Option<BasisSpec>,
    #[serde(default = "default_l_max")]
    pub l_max: usize,
    #[serde(default)]
    pub prior: Option<PriorSpec>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
                path: path.to_path_buf(),
                source,
            })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::SchemaVersion {
                found: self.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        let bad = |msg: String| ConfigError::Invalid(msg);
        self.process.validate().map_err(|e| bad(e.to_string()))?;
        if self.observation.r < 2 {
            return Err(bad(format!(
                "observation.r must be at least 2, got {}",
                self.observation.r
            )));
        }
        if !(self.observation.noise_sd.is_finite() && self.observation.noise_sd >= 0.0) {
            return Err(bad("observation.noise_sd must be nonnegative".into()));
        }
        if self.smoother.grid_size < 3 {
            return Err(bad("smoother.grid_size must be at least 3".into()));
        }
        if let BandwidthPolicy::Pinned { h_mu, h_g } = self.smoother.bandwidths {
            if !(h_mu > 0.0 && h_mu <= 1.0 && h_g > 0.0 && h_g <= 1.0) {
                return Err(bad("pinned bandwidths must lie in (0, 1]".into()));
            }
        }
        self.rate.validate().map_err(|e| bad(e.to_string()))?;
        if self.replicates < 1 {
            return Err(bad("replicates must be at least 1".into()));
        }
        if self.schedule.algorithm == Algorithm::GivenBasis {
            let basis = self
                .basis
                .as_ref()
                .ok_or_else(|| bad("GIVEN_BASIS experiments need a basis".into()))?;
            let blocks = (self.l_max as f64).sqrt().ceil() as usize;
            if basis.size < blocks {
                return Err(bad(format!(
                    "basis.size = {} too small for l_max = {} (needs at least {blocks})",
                    basis.size, self.l_max
                )));
            }
        }
        if let Some(prior) = &self.prior {
            prior.validate().map_err(|e| bad(e.to_string()))?;
        }
        Ok(())
    }

    /// Builds the detection schedule this config describes.
    pub fn build_schedule(&self) -> Result<DetectionSchedule, ConfigError> {
        build_schedule(
            self.schedule.algorithm,
            self.schedule.p,
            self.schedule.q,
            self.schedule.c_n,
            self.schedule.j_max,
            &self.rate,
        )
        .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// The prior certifying this schedule: the configured one, or the
    /// standard construction for the algorithm.
    pub fn prior(&self) -> PriorSpec {
        self.prior.unwrap_or(match self.schedule.algorithm {
            Algorithm::SomeBasis => PriorSpec::ExpOrderstat {
                lambda1: 1.0,
                rule: LambdaRule::PSeries { exponent: 2.0 },
            },
            Algorithm::GivenBasis => PriorSpec::GaussSquare { rho: 0.1 },
        })
    }

    /// Assembles the per-replicate detection setup.
    pub fn detection_setup(&self, oracle_cov: bool) -> Result<DetectionSetup, ConfigError> {
        Ok(DetectionSetup {
            process: self.process.clone(),
            obs: self.observation,
            kernel: self.smoother.kernel,
            grid_size: self.smoother.grid_size,
            bandwidths: self.smoother.bandwidths,
            schedule: self.build_schedule()?,
            basis: self.basis.clone(),
            l_max: self.l_max,
            cov_source: if oracle_cov {
                CovSource::OracleTrue
            } else {
                CovSource::Estimate
            },
            record_sup_error: true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> serde_json::Value {
        serde_json::json!({
            "schema_version": 1,
            "process": {"kind": "BROWNIAN"},
            "observation": {"r": 50, "noise_sd": 0.1},
            "rate": {"regime": "DENSE", "epsilon": 0.5, "c_r": 0.46},
            "schedule": {"algorithm": "SOME_BASIS", "p": 3.0, "c_n": 25.0, "j_max": 5},
            "master_seed": 7
        })
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg: ExperimentConfig = serde_json::from_value(minimal_json()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.l_max, 400);
        assert_eq!(cfg.replicates, 1);
        assert_eq!(cfg.smoother.grid_size, 101);
        let sched = cfg.build_schedule().unwrap();
        assert_eq!(sched.update_times, vec![25, 200, 675, 1600, 3125]);
    }

    #[test]
    fn schema_version_checked() {
        let mut v = minimal_json();
        v["schema_version"] = serde_json::json!(2);
        let cfg: ExperimentConfig = serde_json::from_value(v).unwrap();
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::SchemaVersion { found: 2, .. })
        ));
    }

    #[test]
    fn given_basis_requires_big_enough_basis() {
        let mut v = minimal_json();
        v["schedule"] =
            serde_json::json!({"algorithm": "GIVEN_BASIS", "p": 4.0, "q": 1.0, "c_n": 25.0, "j_max": 4});
        v["basis"] = serde_json::json!({"family": "COSINE", "size": 5});
        let cfg: ExperimentConfig = serde_json::from_value(v.clone()).unwrap();
        assert!(cfg.validate().is_err());
        v["basis"] = serde_json::json!({"family": "COSINE", "size": 20});
        let cfg: ExperimentConfig = serde_json::from_value(v).unwrap();
        cfg.validate().unwrap();
    }

    #[test]
    fn config_round_trips() {
        let cfg: ExperimentConfig = serde_json::from_value(minimal_json()).unwrap();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), serde_json::to_string(&cfg).unwrap());
    }
}
