//! The sequential detector: at each scheduled update time, estimate the
//! covariance from the data prefix, compute the truncation (or projection)
//! index at the current delta, compare it to the threshold k(j), and hold
//! the declared hypothesis until the next update.

use crate::grid::{uniform_grid, GridKernel};
use crate::schedule::{Algorithm, DetectionSchedule};

use crate::simulate::{
    observation_stream, observe_curve, true_covariance, BasisSpec, Curve, ObsConfig, PathSampler,
    ProcessSpec, SimulateError,
};
use crate::smooth::{
    assemble_cov, default_bandwidths_scaled, mean_on_grid, CovSmoother, KernelKind, SmoothError,
};
use crate::spectral::{
    basis_coefficients, eigendecompose, trunc_index_i, trunc_index_iota, SpectralError,
    TruncationIndex,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("GIVEN_BASIS detection needs an operator basis")]
    MissingBasis,
    #[error("schedule has no update times")]
    EmptySchedule,
    #[error("update {update} needs n = {n} curves, beyond this build's limit")]
    UpdateTooLarge { update: usize, n: u64 },
    #[error("simulation failed: {0}")]
    Simulation(#[from] SimulateError),
    #[error("estimation failed at update j={update} (n={n}): {source}")]
    Estimation {
        update: usize,
        n: u64,
        source: SmoothError,
    },
    #[error("spectral computation failed at update j={update} (n={n}): {source}")]
    Spectral {
        update: usize,
        n: u64,
        source: SpectralError,
    },
}

/// A declared hypothesis: finite rank (possibly 0) or infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    #[serde(rename = "FINITE")]
    Finite(usize),
    #[serde(rename = "INFINITE")]
    Infinite,
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Decision::Finite(k) => write!(f, "FINITE({k})"),
            Decision::Infinite => write!(f, "INFINITE"),
        }
    }
}

/// Declares H_i when the reported index i is at most k, and the infinite
/// alternative otherwise (overflow always maps to infinite).
pub fn decide_at_update(index: TruncationIndex, k: usize) -> Decision {
    match index {
        TruncationIndex::Value(i) if i <= k => Decision::Finite(i),
        _ => Decision::Infinite,
    }
}

/// Whether the run used the diverging thresholds k(j) or the fixed cap of
/// the bounded-dimension variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryMode {
    Standard,
    FixedCap { q_cap: usize },
}

impl BoundaryMode {
    /// Output label for the infinite alternative: under a fixed cap it
    /// bundles "dimension exceeds the cap" with infinite rank.
    pub fn infinite_label(&self) -> &'static str {
        match self {
            BoundaryMode::Standard => "INFINITE",
            BoundaryMode::FixedCap { .. } => "EXCEEDS_CAP",
        }
    }
}

/// One update record: everything the decision at n(j) depended on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEntry {
    pub j: usize,
    pub n: u64,
    pub k: usize,
    pub delta: f64,
    pub i_hat: TruncationIndex,
    pub decision: Decision,
    /// sup-grid distance of the fitted kernel to the true one, when the
    /// truth is known and recording was requested.
    pub sup_error: Option<f64>,
}

/// The full decision path of one detector run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTrajectory {
    pub algorithm: Algorithm,
    pub boundary: BoundaryMode,
    /// Label carried by the infinite alternative in outputs.
    pub infinite_label: String,
    pub entries: Vec<TrajectoryEntry>,
    pub final_decision: Decision,
}

impl DecisionTrajectory {
    /// The decision in force at sample size `n` (hold semantics): the entry
    /// of the last update time <= n, `None` before the first update.
    pub fn decision_at(&self, n: u64) -> Option<Decision> {
        self.entries
            .iter()
            .rev()
            .find(|e| e.n <= n)
            .map(|e| e.decision)
    }

    pub fn decision_label(&self, d: Decision) -> String {
        match d {
            Decision::Finite(k) => format!("FINITE({k})"),
            Decision::Infinite => self.infinite_label.clone(),
        }
    }

    /// CSV with columns j, n, k, delta, i_hat, decision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,n,k,delta,i_hat,decision\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.j,
                e.n,
                e.k,
                e.delta,
                e.i_hat,
                self.decision_label(e.decision)
            ));
        }
        out
    }
}

/// Where the detector gets its covariance at each update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum CovSource {
    /// The full pipeline: simulate, observe, smooth.
    #[default]
    Estimate,
    /// Test bypass injecting the exact kernel of the process.
    OracleTrue,
}

/// Per-update bandwidth policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy")]
pub enum BandwidthPolicy {
    /// Recompute from the rate-optimal default at every update.
    #[serde(rename = "DEFAULT")]
    Default { c_h: f64 },
    /// Hold the given bandwidths across updates.
    #[serde(rename = "PINNED")]
    Pinned { h_mu: f64, h_g: f64 },
}

impl Default for BandwidthPolicy {
    fn default() -> Self {
        BandwidthPolicy::Default { c_h: 1.0 }
    }
}

/// Everything a detection run needs besides the seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionSetup {
    pub process: ProcessSpec,
    pub obs: ObsConfig,
    pub kernel: KernelKind,
    pub grid_size: usize,
    pub bandwidths: BandwidthPolicy,
    pub schedule: DetectionSchedule,
    pub basis: Option<BasisSpec>,
    pub l_max: usize,
    #[serde(default)]
    pub cov_source: CovSource,
    #[serde(default)]
    pub record_sup_error: bool,
}

/// Runs the detector over the schedule, accumulating the first n(j) curves
/// of one growing dataset per update (never resimulating earlier curves).
pub fn run_detection(setup: &DetectionSetup, seed: u64) -> Result<DecisionTrajectory, DetectError> {
    run_impl(setup, seed, BoundaryMode::Standard)
}

/// The bounded-dimension variant: constant threshold k(j) = q_cap, with the
/// infinite alternative meaning "dimension exceeds q_cap".
pub fn run_fixed_boundary(
    setup: &DetectionSetup,
    q_cap: usize,
    seed: u64,
) -> Result<DecisionTrajectory, DetectError> {
    assert!(q_cap >= 1, "q_cap must be at least 1");
    run_impl(setup, seed, BoundaryMode::FixedCap { q_cap })
}

fn run_impl(
    setup: &DetectionSetup,
    seed: u64,
    boundary: BoundaryMode,
) -> Result<DecisionTrajectory, DetectError> {
    let sched = &setup.schedule;
    if sched.update_times.is_empty() {
        return Err(DetectError::EmptySchedule);
    }
    if sched.algorithm == Algorithm::GivenBasis && setup.basis.is_none() {
        return Err(DetectError::MissingBasis);
    }
    setup.process.validate()?;

    let grid = uniform_grid(setup.grid_size);
    let truth = if setup.record_sup_error || setup.cov_source == CovSource::OracleTrue {
        Some(true_covariance(&setup.process, setup.grid_size)?)
    } else {
        None
    };

    // oracle bypass: the kernel never changes, so index machinery runs once
    // per update against the varying delta only
    let oracle_index: Option<Box<dyn Fn(f64) -> Result<TruncationIndex, SpectralError>>> =
        match setup.cov_source {
            CovSource::OracleTrue => {
                let k = truth.as_ref().expect("oracle kernel").clone();
                let f = index_fn(sched.algorithm, &k, setup.basis.as_ref(), setup.l_max)
                    .map_err(|source| DetectError::Spectral {
                        update: 1,
                        n: sched.update_times[0],
                        source,
                    })?;
                Some(f)
            }
            CovSource::Estimate => None,
        };

    let mut runner = match setup.cov_source {
        CovSource::Estimate => Some(EstimationState::new(setup, seed)?),
        CovSource::OracleTrue => None,
    };

    let mut entries = Vec::with_capacity(sched.update_times.len());
    for (idx, (&n, &k_sched)) in sched
        .update_times
        .iter()
        .zip(&sched.thresholds)
        .enumerate()
    {
        let j = idx + 1;
        let delta = sched.deltas[idx];
        let k = match boundary {
            BoundaryMode::Standard => k_sched,
            BoundaryMode::FixedCap { q_cap } => q_cap,
        };
        let (i_hat, sup_error) = match (&oracle_index, &mut runner) {
            (Some(f), _) => {
                let i = f(delta).map_err(|source| DetectError::Spectral {
                    update: j,
                    n,
                    source,
                })?;
                (i, setup.record_sup_error.then_some(0.0))
            }
            (None, Some(state)) => {
                let c_hat = state.estimate_at(setup, j, n)?;
                let i = index_fn(sched.algorithm, &c_hat, setup.basis.as_ref(), setup.l_max)
                    .and_then(|f| f(delta))
                    .map_err(|source| DetectError::Spectral {
                        update: j,
                        n,
                        source,
                    })?;
                let sup = truth
                    .as_ref()
                    .filter(|_| setup.record_sup_error)
                    .map(|t| t.sup_distance(&c_hat));
                (i, sup)
            }
            (None, None) => unreachable!("estimation state exists when there is no oracle"),
        };
        entries.push(TrajectoryEntry {
            j,
            n,
            k,
            delta,
            i_hat,
            decision: decide_at_update(i_hat, k),
            sup_error,
        });
    }
    let _ = grid;
    let final_decision = entries.last().expect("nonempty schedule").decision;
    Ok(DecisionTrajectory {
        algorithm: sched.algorithm,
        boundary,
        infinite_label: boundary.infinite_label().to_string(),
        entries,
        final_decision,
    })
}

/// Builds the per-delta index report for one kernel under the algorithm.
#[allow(clippy::type_complexity)]
fn index_fn(
    algorithm: Algorithm,
    kernel: &GridKernel,
    basis: Option<&BasisSpec>,
    l_max: usize,
) -> Result<Box<dyn Fn(f64) -> Result<TruncationIndex, SpectralError>>, SpectralError> {
    match algorithm {
        Algorithm::SomeBasis => {
            let d = eigendecompose(kernel)?;
            Ok(Box::new(move |delta| {
                Ok(TruncationIndex::Value(trunc_index_i(&d, delta)))
            }))
        }
        Algorithm::GivenBasis => {
            let basis = basis.expect("checked by caller");
            let coeffs = basis_coefficients(kernel, basis, l_max)?;
            Ok(Box::new(move |delta| Ok(trunc_index_iota(&coeffs, delta))))
        }
    }
}

/// Growing dataset plus the incremental covariance accumulator.
struct EstimationState {
    sampler: PathSampler,
    obs_seed: u64,
    curves: Vec<Curve>,
    smoother: Option<CovSmoother>,
}

impl EstimationState {
    fn new(setup: &DetectionSetup, seed: u64) -> Result<Self, DetectError> {
        if setup.obs.r < 2 {
            return Err(DetectError::Simulation(SimulateError::TooFewMeasurements {
                r: setup.obs.r,
            }));
        }
        Ok(Self {
            sampler: PathSampler::new(&setup.process, seed)?,
            obs_seed: observation_stream(seed),
            curves: Vec::new(),
            smoother: None,
        })
    }

    fn bandwidths(&self, setup: &DetectionSetup, n: usize) -> (f64, f64) {
        match setup.bandwidths {
            BandwidthPolicy::Default { c_h } => default_bandwidths_scaled(n, setup.obs.r, c_h),
            BandwidthPolicy::Pinned { h_mu, h_g } => (h_mu, h_g),
        }
    }

    fn estimate_at(
        &mut self,
        setup: &DetectionSetup,
        update: usize,
        n: u64,
    ) -> Result<GridKernel, DetectError> {
        let n_usize: usize = n
            .try_into()
            .map_err(|_| DetectError::UpdateTooLarge { update, n })?;
        while self.curves.len() < n_usize {
            let m = self.curves.len() as u64;
            let path = self.sampler.path(m);
            self.curves
                .push(observe_curve(&path, &setup.obs, self.obs_seed, m)?);
        }
        let (h_mu, h_g) = self.bandwidths(setup, n_usize);

        // the pair-moment cache survives across updates only while the
        // covariance bandwidth is unchanged (its cells are bandwidth-aligned)
        let rebuild = match &self.smoother {
            Some(s) => s.bandwidth() != h_g,
            None => true,
        };
        if rebuild {
            self.smoother = Some(CovSmoother::new(setup.kernel, h_g, setup.grid_size));
            let sm = self.smoother.as_mut().unwrap();
            for c in &self.curves[..n_usize] {
                sm.ingest(c);
            }
        } else {
            let sm = self.smoother.as_mut().unwrap();
            let seen = sm.curves_seen();
            for c in &self.curves[seen..n_usize] {
                sm.ingest(c);
            }
        }
        let sm = self.smoother.as_ref().unwrap();
        let wrap = |source: SmoothError| DetectError::Estimation { update, n, source };
        let g = sm.fit_g(&self.curves[..n_usize]).map_err(wrap)?;
        let grid = uniform_grid(setup.grid_size);
        let mu = mean_on_grid(&self.curves[..n_usize], setup.kernel, h_mu, &grid).map_err(wrap)?;
        Ok(assemble_cov(&grid, g, &mu))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{build_schedule, RateConfig};
    use crate::simulate::NoiseKind;

    #[test]
    fn decide_examples() {
        assert_eq!(
            decide_at_update(TruncationIndex::Value(2), 5),
            Decision::Finite(2)
        );
        assert_eq!(
            decide_at_update(TruncationIndex::Value(6), 5),
            Decision::Infinite
        );
        assert_eq!(
            decide_at_update(TruncationIndex::Overflow, 1_000_000),
            Decision::Infinite
        );
        assert_eq!(
            decide_at_update(TruncationIndex::Value(0), 0),
            Decision::Finite(0)
        );
    }

    fn rank2_setup(cov_source: CovSource) -> DetectionSetup {
        let cfg = RateConfig::dense(0.5, 0.2);
        let schedule = build_schedule(Algorithm::SomeBasis, 3.0, None, 25.0, 4, &cfg).unwrap();
        DetectionSetup {
            process: ProcessSpec::FiniteRank {
                basis: BasisSpec::cosine(2),
                score_variances: vec![1.0, 0.5],
                mean: None,
                fine_grid_size: 201,
            },
            obs: ObsConfig {
                r: 20,
                noise_sd: 0.1,
                noise_kind: NoiseKind::Gaussian,
            },
            kernel: KernelKind::Epanechnikov,
            grid_size: 51,
            bandwidths: BandwidthPolicy::default(),
            schedule,
            basis: None,
            l_max: 100,
            cov_source,
            record_sup_error: false,
        }
    }

    #[test]
    fn oracle_rank2_is_finite_two_where_thresholds_allow() {
        // deltas under c_R = 0.2 stay below alpha_2 = 0.5, so the oracle
        // index is 2 at every update; entries with k(j) >= 2 declare it
        let setup = rank2_setup(CovSource::OracleTrue);
        assert!(setup.schedule.deltas.iter().all(|&d| d < 0.5));
        let traj = run_detection(&setup, 1).unwrap();
        for e in &traj.entries {
            assert_eq!(e.i_hat, TruncationIndex::Value(2));
            if e.k >= 2 {
                assert_eq!(e.decision, Decision::Finite(2), "entry {e:?}");
            } else {
                assert_eq!(e.decision, Decision::Infinite, "entry {e:?}");
            }
        }
        assert_eq!(traj.final_decision, Decision::Finite(2));
        // oracle runs are seed-independent
        assert_eq!(traj, run_detection(&setup, 999).unwrap());
    }

    #[test]
    fn hold_semantics() {
        let traj = run_detection(&rank2_setup(CovSource::OracleTrue), 1).unwrap();
        let first = traj.entries[0].n;
        assert_eq!(traj.decision_at(first.saturating_sub(1)), None);
        for e in &traj.entries {
            assert_eq!(traj.decision_at(e.n), Some(e.decision));
            assert_eq!(traj.decision_at(e.n + 1), Some(e.decision));
        }
        let last = traj.entries.last().unwrap();
        assert_eq!(traj.decision_at(10 * last.n), Some(last.decision));
    }

    #[test]
    fn entry_consistency_invariant() {
        let traj = run_detection(&rank2_setup(CovSource::OracleTrue), 1).unwrap();
        for e in &traj.entries {
            let finite = matches!(e.i_hat, TruncationIndex::Value(i) if i <= e.k);
            assert_eq!(matches!(e.decision, Decision::Finite(_)), finite);
        }
    }

    #[test]
    fn fixed_boundary_labels() {
        let setup = rank2_setup(CovSource::OracleTrue);
        let traj = run_fixed_boundary(&setup, 5, 1).unwrap();
        assert_eq!(traj.final_decision, Decision::Finite(2));
        assert_eq!(traj.infinite_label, "EXCEEDS_CAP");
        assert!(traj.entries.iter().all(|e| e.k == 5));

        // rank 7 truth against the same cap: the index exceeds it
        let mut setup7 = rank2_setup(CovSource::OracleTrue);
        setup7.process = ProcessSpec::FiniteRank {
            basis: BasisSpec::cosine(7),
            score_variances: vec![1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4],
            mean: None,
            fine_grid_size: 201,
        };
        // delta below alpha_7 = 0.4 at every update already holds (< 0.35)
        assert!(setup7.schedule.deltas.iter().all(|&d| d < 0.4));
        let traj = run_fixed_boundary(&setup7, 5, 1).unwrap();
        assert_eq!(traj.final_decision, Decision::Infinite);
        assert_eq!(
            traj.decision_label(traj.final_decision),
            "EXCEEDS_CAP".to_string()
        );
    }

    #[test]
    fn given_basis_requires_basis() {
        let cfg = RateConfig::dense(0.5, 0.2);
        let mut setup = rank2_setup(CovSource::OracleTrue);
        setup.schedule =
            build_schedule(Algorithm::GivenBasis, 4.0, Some(1.0), 25.0, 4, &cfg).unwrap();
        setup.basis = None;
        assert!(matches!(
            run_detection(&setup, 1),
            Err(DetectError::MissingBasis)
        ));
    }

    #[test]
    fn csv_schema() {
        let traj = run_detection(&rank2_setup(CovSource::OracleTrue), 1).unwrap();
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("j,n,k,delta,i_hat,decision"));
        let first = lines.next().unwrap();
        assert!(first.starts_with("1,25,1,"), "{first}");
        let last = csv.lines().last().unwrap();
        assert!(last.starts_with("4,1600,4,"), "{last}");
        assert!(last.ends_with("FINITE(2)"), "{last}");
    }
}
