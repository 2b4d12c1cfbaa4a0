//! Sample-path generation and the noisy discrete observation scheme.
//!
//! Processes are simulated exactly on a fine uniform grid (Karhunen-Loeve
//! expansion for finite-rank processes, exact transition sampling for the
//! diffusion examples) and observed at iid uniform design points with
//! additive measurement error. Everything is a pure function of
//! (spec, seed): per-curve seeds come from [`crate::seed::mix_seed`], so
//! curve `m` of a run can be regenerated alone and prefixes of a dataset
//! never depend on how many curves follow them.

use crate::grid::{interp_uniform, uniform_grid, GridKernel};
use crate::seed::mix_seed;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default resolution of the fine simulation grid.
pub const DEFAULT_FINE_GRID: usize = 1001;

/// Sub-stream tags so path noise and observation noise never share a stream.
const STREAM_PATHS: u64 = 1;
const STREAM_DESIGN: u64 = 2;

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("basis size must be at least 1")]
    EmptyBasis,
    #[error("grid for basis evaluation must be nonempty, within [0,1], strictly increasing")]
    BadGrid,
    #[error("score_variances must be nonempty with finite nonnegative entries")]
    BadScoreVariances,
    #[error("mean must have one value per fine-grid point ({expected}), got {actual}")]
    BadMean { expected: usize, actual: usize },
    #[error("{name} must be positive and finite, got {value}")]
    BadParameter { name: &'static str, value: f64 },
    #[error("fine_grid_size must be at least 2")]
    FineGridTooSmall,
    #[error(
        "r = {r} measurements per curve rejected: with fewer than 2 points per curve \
         the products Y_mk*Y_ml (k < l) do not exist and the covariance is not identifiable"
    )]
    TooFewMeasurements { r: usize },
    #[error("noise_sd must be finite and nonnegative, got {0}")]
    BadNoise(f64),
    #[error("need at least one path to observe")]
    NoPaths,
}

/// Deterministic orthonormal basis families on [0,1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisFamily {
    #[serde(rename = "COSINE")]
    Cosine,
    #[serde(rename = "FOURIER")]
    Fourier,
}

/// A finite slice of a complete orthonormal system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub family: BasisFamily,
    pub size: usize,
}

impl BasisSpec {
    pub fn cosine(size: usize) -> Self {
        Self {
            family: BasisFamily::Cosine,
            size,
        }
    }
}

fn basis_value(family: BasisFamily, l: usize, t: f64) -> f64 {
    use std::f64::consts::PI;
    debug_assert!(l >= 1);
    match family {
        // psi_1 = 1, psi_l(t) = sqrt(2) cos((l-1) pi t) for l >= 2
        BasisFamily::Cosine => {
            if l == 1 {
                1.0
            } else {
                std::f64::consts::SQRT_2 * (((l - 1) as f64) * PI * t).cos()
            }
        }
        // psi_1 = 1, psi_{2k} = sqrt(2) cos(2 pi k t), psi_{2k+1} = sqrt(2) sin(2 pi k t)
        BasisFamily::Fourier => {
            if l == 1 {
                1.0
            } else {
                let k = (l / 2) as f64;
                let phase = 2.0 * PI * k * t;
                if l % 2 == 0 {
                    std::f64::consts::SQRT_2 * phase.cos()
                } else {
                    std::f64::consts::SQRT_2 * phase.sin()
                }
            }
        }
    }
}

/// Evaluates the first `spec.size` basis functions on `grid`.
///
/// Row `l-1` of the result holds psi_l on the grid.
pub fn make_basis(spec: &BasisSpec, grid: &[f64]) -> Result<Vec<Vec<f64>>, SimulateError> {
    if spec.size == 0 {
        return Err(SimulateError::EmptyBasis);
    }
    if grid.is_empty()
        || grid.iter().any(|&t| !(0.0..=1.0).contains(&t))
        || grid.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(SimulateError::BadGrid);
    }
    Ok((1..=spec.size)
        .map(|l| grid.iter().map(|&t| basis_value(spec.family, l, t)).collect())
        .collect())
}

/// Measurement-error distribution; both variants are centered with the
/// configured standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum NoiseKind {
    #[default]
    #[serde(rename = "GAUSSIAN")]
    Gaussian,
    #[serde(rename = "UNIFORM_CENTERED")]
    UniformCentered,
}

/// Generative model for the sample paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ProcessSpec {
    /// X = mean + sum_l xi_l psi_l with independent Gaussian scores,
    /// Var(xi_l) = score_variances[l-1].
    #[serde(rename = "FINITE_RANK")]
    FiniteRank {
        basis: BasisSpec,
        score_variances: Vec<f64>,
        #[serde(default)]
        mean: Option<Vec<f64>>,
        #[serde(default = "default_fine_grid")]
        fine_grid_size: usize,
    },
    /// Standard Brownian motion started at 0.
    #[serde(rename = "BROWNIAN")]
    Brownian {
        #[serde(default = "default_fine_grid")]
        fine_grid_size: usize,
    },
    /// Stationary Ornstein-Uhlenbeck process.
    #[serde(rename = "OU")]
    OrnsteinUhlenbeck {
        reversion_rate: f64,
        stationary_variance: f64,
        #[serde(default = "default_fine_grid")]
        fine_grid_size: usize,
    },
    /// Geometric Brownian motion, X(0) = 1.
    #[serde(rename = "GEOMETRIC_BM")]
    GeometricBm {
        drift: f64,
        volatility: f64,
        #[serde(default = "default_fine_grid")]
        fine_grid_size: usize,
    },
}

fn default_fine_grid() -> usize {
    DEFAULT_FINE_GRID
}

impl ProcessSpec {
    pub fn fine_grid_size(&self) -> usize {
        match *self {
            ProcessSpec::FiniteRank { fine_grid_size, .. }
            | ProcessSpec::Brownian { fine_grid_size }
            | ProcessSpec::OrnsteinUhlenbeck { fine_grid_size, .. }
            | ProcessSpec::GeometricBm { fine_grid_size, .. } => fine_grid_size,
        }
    }

    pub fn validate(&self) -> Result<(), SimulateError> {
        if self.fine_grid_size() < 2 {
            return Err(SimulateError::FineGridTooSmall);
        }
        match self {
            ProcessSpec::FiniteRank {
                basis,
                score_variances,
                mean,
                fine_grid_size,
            } => {
                if basis.size == 0 {
                    return Err(SimulateError::EmptyBasis);
                }
                if score_variances.is_empty()
                    || score_variances.iter().any(|v| !v.is_finite() || *v < 0.0)
                {
                    return Err(SimulateError::BadScoreVariances);
                }
                if score_variances.len() > basis.size {
                    return Err(SimulateError::EmptyBasis);
                }
                if let Some(m) = mean {
                    if m.len() != *fine_grid_size {
                        return Err(SimulateError::BadMean {
                            expected: *fine_grid_size,
                            actual: m.len(),
                        });
                    }
                }
                Ok(())
            }
            ProcessSpec::Brownian { .. } => Ok(()),
            ProcessSpec::OrnsteinUhlenbeck {
                reversion_rate,
                stationary_variance,
                ..
            } => {
                for (name, v) in [
                    ("reversion_rate", *reversion_rate),
                    ("stationary_variance", *stationary_variance),
                ] {
                    if !(v.is_finite() && v > 0.0) {
                        return Err(SimulateError::BadParameter { name, value: v });
                    }
                }
                Ok(())
            }
            ProcessSpec::GeometricBm {
                drift, volatility, ..
            } => {
                if !drift.is_finite() {
                    return Err(SimulateError::BadParameter {
                        name: "drift",
                        value: *drift,
                    });
                }
                if !(volatility.is_finite() && *volatility > 0.0) {
                    return Err(SimulateError::BadParameter {
                        name: "volatility",
                        value: *volatility,
                    });
                }
                Ok(())
            }
        }
    }

    /// Index of the last nonzero score variance (0 for a degenerate process);
    /// `None` for the infinite-rank examples.
    pub fn nominal_rank(&self) -> Option<usize> {
        match self {
            ProcessSpec::FiniteRank {
                score_variances, ..
            } => Some(
                score_variances
                    .iter()
                    .rposition(|&v| v != 0.0)
                    .map_or(0, |i| i + 1),
            ),
            _ => None,
        }
    }
}

/// Reusable context for generating paths of one process one curve at a time.
pub struct PathSampler {
    spec: ProcessSpec,
    path_seed: u64,
    grid: Vec<f64>,
    /// Basis rows scaled by sqrt(score variance), finite-rank only.
    scaled_basis: Vec<Vec<f64>>,
    mean: Option<Vec<f64>>,
}

impl PathSampler {
    /// `seed` is the master seed of the run; path and observation streams are
    /// split off it internally.
    pub fn new(spec: &ProcessSpec, seed: u64) -> Result<Self, SimulateError> {
        spec.validate()?;
        let grid = uniform_grid(spec.fine_grid_size());
        let (scaled_basis, mean) = match spec {
            ProcessSpec::FiniteRank {
                basis,
                score_variances,
                mean,
                ..
            } => {
                let rows = make_basis(basis, &grid)?;
                let scaled = score_variances
                    .iter()
                    .zip(rows)
                    .map(|(&var, row)| {
                        let sd = var.sqrt();
                        row.into_iter().map(|v| sd * v).collect::<Vec<f64>>()
                    })
                    .collect();
                (scaled, mean.clone())
            }
            _ => (Vec::new(), None),
        };
        Ok(Self {
            spec: spec.clone(),
            path_seed: mix_seed(seed, STREAM_PATHS),
            grid,
            scaled_basis,
            mean,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Generates curve `index` on the fine grid. Depends only on
    /// (spec, seed, index).
    pub fn path(&self, index: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(self.path_seed, index));
        let m = self.grid.len();
        let dt = 1.0 / (m - 1) as f64;
        match &self.spec {
            ProcessSpec::FiniteRank { .. } => {
                let mut x: Vec<f64> = match &self.mean {
                    Some(mu) => mu.clone(),
                    None => vec![0.0; m],
                };
                for row in &self.scaled_basis {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    for (xi, &b) in x.iter_mut().zip(row) {
                        *xi += z * b;
                    }
                }
                x
            }
            ProcessSpec::Brownian { .. } => {
                let sd = dt.sqrt();
                let mut x = vec![0.0; m];
                for i in 1..m {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    x[i] = x[i - 1] + sd * z;
                }
                x
            }
            ProcessSpec::OrnsteinUhlenbeck {
                reversion_rate,
                stationary_variance,
                ..
            } => {
                let decay = (-reversion_rate * dt).exp();
                let step_sd = (stationary_variance * (1.0 - decay * decay)).sqrt();
                let mut x = vec![0.0; m];
                let z0: f64 = StandardNormal.sample(&mut rng);
                x[0] = stationary_variance.sqrt() * z0;
                for i in 1..m {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    x[i] = decay * x[i - 1] + step_sd * z;
                }
                x
            }
            ProcessSpec::GeometricBm {
                drift, volatility, ..
            } => {
                let sd = dt.sqrt();
                let mut w = 0.0;
                let mut x = vec![0.0; m];
                x[0] = 1.0;
                for i in 1..m {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    w += sd * z;
                    let t = self.grid[i];
                    x[i] = ((drift - 0.5 * volatility * volatility) * t + volatility * w).exp();
                }
                x
            }
        }
    }
}

/// Generates `n` sample paths on the fine grid.
pub fn simulate_paths(
    spec: &ProcessSpec,
    n: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, SimulateError> {
    assert!(n >= 1, "simulate_paths needs n >= 1");
    let sampler = PathSampler::new(spec, seed)?;
    Ok((0..n as u64).map(|m| sampler.path(m)).collect())
}

/// One observed curve: design points and noisy values, aligned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub design_points: Vec<f64>,
    pub values: Vec<f64>,
}

impl Curve {
    pub fn r(&self) -> usize {
        self.design_points.len()
    }
}

/// The full observed dataset Y_ml = X_m(T_ml) + U_ml.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    pub curves: Vec<Curve>,
    pub noise_sd: f64,
    pub seed: u64,
}

impl ObservationSet {
    pub fn n(&self) -> usize {
        self.curves.len()
    }

    /// Measurements per curve; the generator keeps this constant.
    pub fn r(&self) -> usize {
        self.curves.first().map_or(0, Curve::r)
    }

    pub fn validate(&self) -> Result<(), SimulateError> {
        if !self.noise_sd.is_finite() || self.noise_sd < 0.0 {
            return Err(SimulateError::BadNoise(self.noise_sd));
        }
        for c in &self.curves {
            if c.r() < 2 {
                return Err(SimulateError::TooFewMeasurements { r: c.r() });
            }
            if c.values.len() != c.design_points.len()
                || c.design_points.iter().any(|t| !(0.0..=1.0).contains(t))
            {
                return Err(SimulateError::BadGrid);
            }
        }
        Ok(())
    }
}

/// Observation settings shared by the detector and the CLI harness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObsConfig {
    pub r: usize,
    pub noise_sd: f64,
    #[serde(default)]
    pub noise_kind: NoiseKind,
}

/// Observes one already-simulated path at `r` fresh design points.
///
/// Depends only on (cfg, seed, index), independent of the paths stream.
pub fn observe_curve(
    path: &[f64],
    cfg: &ObsConfig,
    obs_seed: u64,
    index: u64,
) -> Result<Curve, SimulateError> {
    if cfg.r < 2 {
        return Err(SimulateError::TooFewMeasurements { r: cfg.r });
    }
    if !cfg.noise_sd.is_finite() || cfg.noise_sd < 0.0 {
        return Err(SimulateError::BadNoise(cfg.noise_sd));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(obs_seed, index));
    let design_points: Vec<f64> = (0..cfg.r).map(|_| rng.random::<f64>()).collect();
    let values = design_points
        .iter()
        .map(|&t| {
            let x = interp_uniform(path, t);
            let u = match cfg.noise_kind {
                NoiseKind::Gaussian => {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    cfg.noise_sd * z
                }
                NoiseKind::UniformCentered => {
                    // uniform on [-a, a] with a = sqrt(3) sd has the target variance
                    let a = 3.0f64.sqrt() * cfg.noise_sd;
                    a * (2.0 * rng.random::<f64>() - 1.0)
                }
            };
            x + u
        })
        .collect();
    Ok(Curve {
        design_points,
        values,
    })
}

/// Derives the observation sub-stream seed for a master seed.
pub fn observation_stream(seed: u64) -> u64 {
    mix_seed(seed, STREAM_DESIGN)
}

/// Observes every path at `r` iid uniform design points with additive noise.
pub fn observe(
    paths: &[Vec<f64>],
    r: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<ObservationSet, SimulateError> {
    observe_with(
        paths,
        &ObsConfig {
            r,
            noise_sd,
            noise_kind: NoiseKind::Gaussian,
        },
        seed,
    )
}

/// [`observe`] with an explicit noise distribution.
pub fn observe_with(
    paths: &[Vec<f64>],
    cfg: &ObsConfig,
    seed: u64,
) -> Result<ObservationSet, SimulateError> {
    if paths.is_empty() {
        return Err(SimulateError::NoPaths);
    }
    let obs_seed = observation_stream(seed);
    let curves = paths
        .iter()
        .enumerate()
        .map(|(m, p)| observe_curve(p, cfg, obs_seed, m as u64))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ObservationSet {
        curves,
        noise_sd: cfg.noise_sd,
        seed,
    })
}

/// The exact covariance kernel of `spec` discretized on a uniform grid.
pub fn true_covariance(spec: &ProcessSpec, m: usize) -> Result<GridKernel, SimulateError> {
    spec.validate()?;
    match spec {
        ProcessSpec::FiniteRank {
            basis,
            score_variances,
            ..
        } => {
            let grid = uniform_grid(m);
            let rows = make_basis(basis, &grid)?;
            let mut values = vec![0.0; m * m];
            for (l, row) in rows.iter().enumerate().take(score_variances.len()) {
                let var = score_variances[l];
                if var == 0.0 {
                    continue;
                }
                for i in 0..m {
                    for j in 0..m {
                        values[i * m + j] += var * row[i] * row[j];
                    }
                }
            }
            Ok(GridKernel {
                grid,
                values,
                quadrature_weights: crate::grid::trapezoid_weights(m),
            })
        }
        ProcessSpec::Brownian { .. } => Ok(GridKernel::from_fn(m, f64::min)),
        ProcessSpec::OrnsteinUhlenbeck {
            reversion_rate,
            stationary_variance,
            ..
        } => {
            let (theta, var) = (*reversion_rate, *stationary_variance);
            Ok(GridKernel::from_fn(m, move |s, t| {
                var * (-theta * (s - t).abs()).exp()
            }))
        }
        ProcessSpec::GeometricBm {
            drift, volatility, ..
        } => {
            let (mu, sig) = (*drift, *volatility);
            Ok(GridKernel::from_fn(m, move |s, t| {
                (mu * (s + t)).exp() * ((sig * sig * s.min(t)).exp() - 1.0)
            }))
        }
    }
}

/// The exact mean function of `spec` on a uniform grid.
pub fn true_mean(spec: &ProcessSpec, m: usize) -> Vec<f64> {
    let grid = uniform_grid(m);
    match spec {
        ProcessSpec::FiniteRank { mean, .. } => match mean {
            Some(mu) => grid.iter().map(|&t| interp_uniform(mu, t)).collect(),
            None => vec![0.0; m],
        },
        ProcessSpec::Brownian { .. } | ProcessSpec::OrnsteinUhlenbeck { .. } => vec![0.0; m],
        ProcessSpec::GeometricBm { drift, .. } => {
            grid.iter().map(|&t| (drift * t).exp()).collect()
        }
    }
}
