//! Rate bounds, detection thresholds delta_n, update-time/threshold
//! schedules, and numerical summability certificates for the two prior
//! constructions.
//!
//! delta_n = (1 + epsilon) * R(n) with R(n) = c_R * eta(n) * tau(n);
//! eta(n) = log n and tau(n) is either the dense-regime rate
//! (log n / n)^{1/2} or the full bandwidth-dependent expression. The
//! schedule n(j) ~ c_n j^p, k(j) (= j, or ceil(j^q) for a given operator
//! basis) is valid when the per-update prior mass bounds are summable;
//! the certificate checks this numerically by fitting the tail decay
//! exponent on a log-log scale.

use crate::smooth::default_bandwidths_scaled;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("rate is defined for n >= {min}, got {n}")]
    SampleTooSmall { n: u64, min: u64 },
    #[error("invalid rate configuration: {0}")]
    InvalidRate(String),
    #[error("schedule constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("prior kind {prior} does not certify a {algorithm} schedule")]
    PriorMismatch {
        prior: &'static str,
        algorithm: &'static str,
    },
}

/// Slowly diverging factor eta(n) in R(n) = eta(n) * tau(n).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum EtaRule {
    #[default]
    #[serde(rename = "LOG")]
    Log,
}

impl EtaRule {
    fn eval(self, n: f64) -> f64 {
        match self {
            EtaRule::Log => n.ln(),
        }
    }
}

/// Bandwidth rule h(n) for the general-regime rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule")]
pub enum BandwidthRule {
    /// Constant bandwidth.
    #[serde(rename = "FIXED")]
    Fixed { h: f64 },
    /// The estimator default max(1/r, c_h (log n / n)^{1/4}) capped at 0.5.
    #[serde(rename = "DEFAULT")]
    Default { c_h: f64 },
}

impl BandwidthRule {
    fn eval(self, n: u64, r: usize) -> f64 {
        match self {
            BandwidthRule::Fixed { h } => h,
            BandwidthRule::Default { c_h } => {
                default_bandwidths_scaled(n.max(2) as usize, r, c_h).0
            }
        }
    }
}

/// Sampling regime determining the form of tau(n).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime")]
pub enum RateRegime {
    /// Dense sampling: tau(n) = (log n / n)^{1/2}.
    #[serde(rename = "DENSE")]
    Dense,
    /// The full two-term rate plus squared-bandwidth bias terms.
    #[serde(rename = "GENERAL")]
    General {
        h_mu: BandwidthRule,
        h_g: BandwidthRule,
        r: usize,
    },
}

/// Everything needed to evaluate delta_n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    #[serde(flatten)]
    pub regime: RateRegime,
    pub epsilon: f64,
    pub c_r: f64,
    #[serde(default)]
    pub eta: EtaRule,
    /// Diagnostic hook replacing R(n) by a constant; exists so degenerate
    /// constant-delta schedules can be built for negative certification
    /// tests. Never set in normal operation.
    #[serde(default)]
    pub rate_override: Option<f64>,
}

impl RateConfig {
    pub fn dense(epsilon: f64, c_r: f64) -> Self {
        Self {
            regime: RateRegime::Dense,
            epsilon,
            c_r,
            eta: EtaRule::Log,
            rate_override: None,
        }
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(ScheduleError::InvalidRate(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.c_r.is_finite() && self.c_r > 0.0) {
            return Err(ScheduleError::InvalidRate(format!(
                "c_R must be positive, got {}",
                self.c_r
            )));
        }
        if let RateRegime::General { h_mu, h_g, r } = self.regime {
            if r < 2 {
                return Err(ScheduleError::InvalidRate(format!(
                    "general regime needs r >= 2, got {r}"
                )));
            }
            for rule in [h_mu, h_g] {
                match rule {
                    BandwidthRule::Fixed { h } if !(h > 0.0 && h <= 1.0) => {
                        return Err(ScheduleError::InvalidRate(format!(
                            "fixed bandwidth must lie in (0,1], got {h}"
                        )));
                    }
                    BandwidthRule::Default { c_h } if !(c_h > 0.0) => {
                        return Err(ScheduleError::InvalidRate(format!(
                            "c_h must be positive, got {c_h}"
                        )));
                    }
                    _ => {}
                }
            }
        }
        if let Some(r0) = self.rate_override {
            if !(r0.is_finite() && r0 > 0.0) {
                return Err(ScheduleError::InvalidRate(format!(
                    "rate_override must be positive, got {r0}"
                )));
            }
        }
        Ok(())
    }
}

/// The almost-sure estimation rate tau(n) for the configured regime.
pub fn rate_tau(n: u64, cfg: &RateConfig) -> Result<f64, ScheduleError> {
    if n < 2 {
        return Err(ScheduleError::SampleTooSmall { n, min: 2 });
    }
    let nf = n as f64;
    let log_over_n = nf.ln() / nf;
    Ok(match cfg.regime {
        RateRegime::Dense => log_over_n.sqrt(),
        RateRegime::General { h_mu, h_g, r } => {
            let hm = h_mu.eval(n, r);
            let hg = h_g.eval(n, r);
            let rf = r as f64;
            let cov = (log_over_n * (1.0 + 1.0 / (hg * rf) + 1.0 / (hg * rf).powi(2))).sqrt();
            let mean = (log_over_n * (1.0 + 1.0 / (hm * rf))).sqrt();
            cov + mean + hm * hm + hg * hg
        }
    })
}

/// The rate bound R(n) = c_R * eta(n) * tau(n) (or the diagnostic override).
fn rate_bound(n: u64, cfg: &RateConfig) -> Result<f64, ScheduleError> {
    if let Some(r0) = cfg.rate_override {
        return Ok(r0);
    }
    Ok(cfg.c_r * cfg.eta.eval(n as f64) * rate_tau(n, cfg)?)
}

/// The detection threshold delta_n = (1 + epsilon) * R(n).
pub fn delta_n(n: u64, cfg: &RateConfig) -> Result<f64, ScheduleError> {
    cfg.validate()?;
    if n < 3 {
        return Err(ScheduleError::SampleTooSmall { n, min: 3 });
    }
    Ok((1.0 + cfg.epsilon) * rate_bound(n, cfg)?)
}

/// Which detection procedure a schedule drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    /// Spectral truncation index against k(j) = j.
    #[serde(rename = "SOME_BASIS")]
    SomeBasis,
    /// Operator-basis projection index against k(j) = ceil(j^q).
    #[serde(rename = "GIVEN_BASIS")]
    GivenBasis,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::SomeBasis => "SOME_BASIS",
            Algorithm::GivenBasis => "GIVEN_BASIS",
        }
    }
}

/// Update times, thresholds, and per-update deltas for a detector run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSchedule {
    pub algorithm: Algorithm,
    pub p: f64,
    pub q: Option<f64>,
    pub c_n: f64,
    pub j_max: usize,
    pub update_times: Vec<u64>,
    pub thresholds: Vec<usize>,
    pub deltas: Vec<f64>,
}

/// Builds the schedule n(j) = max(3, ceil(c_n j^p)) (bumped to strict
/// increase), k(j), and delta_{n(j)}, enforcing the summability constraints
/// on (p, q).
pub fn build_schedule(
    algorithm: Algorithm,
    p: f64,
    q: Option<f64>,
    c_n: f64,
    j_max: usize,
    cfg: &RateConfig,
) -> Result<DetectionSchedule, ScheduleError> {
    cfg.validate()?;
    if j_max < 1 {
        return Err(ScheduleError::ConstraintViolation(
            "j_max must be at least 1".into(),
        ));
    }
    if !(c_n.is_finite() && c_n > 0.0) {
        return Err(ScheduleError::ConstraintViolation(format!(
            "c_n must be positive, got {c_n}"
        )));
    }
    match algorithm {
        Algorithm::SomeBasis => {
            if q.is_some() {
                return Err(ScheduleError::ConstraintViolation(
                    "q applies only to GIVEN_BASIS schedules (SOME_BASIS uses k(j) = j)".into(),
                ));
            }
            if !(p > 2.0) {
                return Err(ScheduleError::ConstraintViolation(format!(
                    "p = {p} violates p > 2: with n(j) ~ c_n j^p the prior mass bounds \
                     2 delta_n(j) lambda_1 decay like j^(-p/2 + o(1)), summable only for p > 2"
                )));
            }
        }
        Algorithm::GivenBasis => {
            let qv = q.ok_or_else(|| {
                ScheduleError::ConstraintViolation(
                    "GIVEN_BASIS schedules need the threshold exponent q".into(),
                )
            })?;
            if !(qv >= 0.0) {
                return Err(ScheduleError::ConstraintViolation(format!(
                    "q must be nonnegative, got {qv}"
                )));
            }
            if !(p > 2.0 * qv + 1.0) {
                return Err(ScheduleError::ConstraintViolation(format!(
                    "p = {p}, q = {qv} violates p > 2q + 1: with k(j) ~ j^q the prior mass \
                     bounds decay like j^(-(p - q(2 + rho)) + o(1)), summable only past p = 2q + 1"
                )));
            }
        }
    }

    let mut update_times = Vec::with_capacity(j_max);
    let mut thresholds = Vec::with_capacity(j_max);
    let mut deltas = Vec::with_capacity(j_max);
    let mut prev: u64 = 0;
    for j in 1..=j_max {
        let jf = j as f64;
        let raw = (c_n * jf.powf(p)).ceil();
        if raw >= u64::MAX as f64 {
            return Err(ScheduleError::ConstraintViolation(format!(
                "n({j}) overflows a 64-bit sample count"
            )));
        }
        let mut n = (raw as u64).max(3);
        if n <= prev {
            n = prev + 1;
        }
        prev = n;
        update_times.push(n);
        thresholds.push(match algorithm {
            Algorithm::SomeBasis => j,
            Algorithm::GivenBasis => jf.powf(q.unwrap()).ceil() as usize,
        });
        deltas.push(delta_n(n, cfg)?);
    }

    // eta * tau rises until n ~ e^3, so a schedule starting that early can
    // produce a non-decreasing delta sequence; reject it rather than emit a
    // schedule violating its own invariant. The constant override is exempt
    // (it exists to build degenerate schedules for negative tests).
    if cfg.rate_override.is_none() {
        for w in deltas.windows(2) {
            if w[1] >= w[0] {
                return Err(ScheduleError::ConstraintViolation(format!(
                    "delta sequence is not strictly decreasing ({} -> {}): update times start \
                     too early for eta(n) tau(n) to decay; raise c_n so n(1) >= 21",
                    w[0], w[1]
                )));
            }
        }
    }

    Ok(DetectionSchedule {
        algorithm,
        p,
        q,
        c_n,
        j_max,
        update_times,
        thresholds,
        deltas,
    })
}

/// Rate sequence for the exponential-order-statistic prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule")]
pub enum LambdaRule {
    #[serde(rename = "GEOMETRIC")]
    Geometric { ratio: f64 },
    #[serde(rename = "P_SERIES")]
    PSeries { exponent: f64 },
}

/// Prior measures whose per-update mass bounds certify a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum PriorSpec {
    /// Ordered exponential order statistics with summable rates lambda_l.
    #[serde(rename = "EXP_ORDERSTAT")]
    ExpOrderstat { lambda1: f64, rule: LambdaRule },
    /// Gaussian square-ordered coefficients with lambda_j = j^{-(2+rho)}.
    #[serde(rename = "GAUSS_SQUARE")]
    GaussSquare { rho: f64 },
}

impl PriorSpec {
    pub fn validate(&self) -> Result<(), ScheduleError> {
        match *self {
            PriorSpec::ExpOrderstat { lambda1, rule } => {
                if !(lambda1.is_finite() && lambda1 > 0.0) {
                    return Err(ScheduleError::InvalidPrior(format!(
                        "lambda_1 must be positive, got {lambda1}"
                    )));
                }
                match rule {
                    LambdaRule::Geometric { ratio } if !(ratio > 0.0 && ratio < 1.0) => {
                        Err(ScheduleError::InvalidPrior(format!(
                            "geometric rate sequence needs ratio in (0,1), got {ratio}"
                        )))
                    }
                    LambdaRule::PSeries { exponent } if !(exponent > 1.0) => {
                        Err(ScheduleError::InvalidPrior(format!(
                            "p-series rate sequence needs exponent > 1, got {exponent}"
                        )))
                    }
                    _ => Ok(()),
                }
            }
            PriorSpec::GaussSquare { rho } => {
                if !(rho.is_finite() && rho > 0.0) {
                    return Err(ScheduleError::InvalidPrior(format!(
                        "rho must be positive, got {rho}"
                    )));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

/// Per-update prior mass bounds plus the fitted tail decay exponent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PriorMassReport {
    pub bounds: Vec<f64>,
    /// Exponent s of the fitted bound ~ C j^{-s} over the tail half.
    pub fitted_exponent: f64,
    pub verdict: Verdict,
}

/// Evaluates the per-update prior mass bounds of the matching prior and
/// certifies summability by a log-log tail fit (PASS iff fitted s > 1).
pub fn prior_mass_bounds(
    prior: &PriorSpec,
    sched: &DetectionSchedule,
) -> Result<PriorMassReport, ScheduleError> {
    prior.validate()?;
    let bounds: Vec<f64> = match (prior, sched.algorithm) {
        (PriorSpec::ExpOrderstat { lambda1, .. }, Algorithm::SomeBasis) => sched
            .deltas
            .iter()
            .map(|&d| (2.0 * d * lambda1).min(1.0))
            .collect(),
        (PriorSpec::GaussSquare { rho }, Algorithm::GivenBasis) => sched
            .deltas
            .iter()
            .zip(&sched.thresholds)
            .map(|(&d, &k)| {
                let lambda = ((k + 4) as f64).powf(-(2.0 + rho));
                // 1 - exp(-x) via expm1 so tiny arguments keep precision
                -(-4.0 * d * d / lambda).exp_m1()
            })
            .collect(),
        (PriorSpec::ExpOrderstat { .. }, Algorithm::GivenBasis) => {
            return Err(ScheduleError::PriorMismatch {
                prior: "EXP_ORDERSTAT",
                algorithm: "GIVEN_BASIS",
            })
        }
        (PriorSpec::GaussSquare { .. }, Algorithm::SomeBasis) => {
            return Err(ScheduleError::PriorMismatch {
                prior: "GAUSS_SQUARE",
                algorithm: "SOME_BASIS",
            })
        }
    };

    // least-squares slope of log bound vs log j over the tail half
    let j_max = bounds.len();
    let start = (j_max / 2).max(1); // 1-based j = start+1 .. j_max as 0-based start..
    let pts: Vec<(f64, f64)> = bounds
        .iter()
        .enumerate()
        .skip(start)
        .filter(|(_, b)| **b > 0.0)
        .map(|(i, &b)| (((i + 1) as f64).ln(), b.ln()))
        .collect();
    let fitted_exponent = if pts.len() < 2 {
        0.0
    } else {
        let n = pts.len() as f64;
        let (sx, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
        let (mx, my) = (sx / n, sy / n);
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx == 0.0 {
            0.0
        } else {
            -(sxy / sxx)
        }
    };
    let verdict = if fitted_exponent > 1.0 {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(PriorMassReport {
        bounds,
        fitted_exponent,
        verdict,
    })
}
