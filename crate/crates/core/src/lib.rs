//! Detection of whether a stochastic process is almost surely finitely
//! expressed in an orthonormal basis, from finitely many noisily and
//! discretely observed sample paths.
//!
//! The pipeline: simulate paths and observe them at random design points
//! ([`simulate`]), estimate the covariance kernel by pooled local-polynomial
//! smoothing ([`smooth`]), read off spectral truncation or basis-projection
//! indices ([`spectral`]), compare them against scheduled thresholds at
//! scheduled sample sizes ([`schedule`]), and hold decisions between updates
//! ([`detect`]).

pub mod detect;
pub mod grid;
pub mod schedule;
pub mod seed;
pub mod simulate;
pub mod smooth;
pub mod spectral;

pub use detect::{
    decide_at_update, run_detection, run_fixed_boundary, BandwidthPolicy, BoundaryMode,
    CovSource, Decision, DecisionTrajectory, DetectError, DetectionSetup, TrajectoryEntry,
};
pub use grid::{trapezoid_weights, uniform_grid, GridFunction, GridKernel};
pub use schedule::{
    build_schedule, delta_n, prior_mass_bounds, rate_tau, Algorithm, DetectionSchedule,
    LambdaRule, PriorMassReport, PriorSpec, RateConfig, RateRegime, ScheduleError, Verdict,
};
pub use seed::mix_seed;
pub use simulate::{
    make_basis, observe, observe_with, simulate_paths, true_covariance, true_mean, BasisFamily,
    BasisSpec, Curve, NoiseKind, ObsConfig, ObservationSet, PathSampler, ProcessSpec,
    SimulateError,
};
pub use smooth::{
    default_bandwidths, default_bandwidths_scaled, estimate_cov, estimate_mean, kernel_eval,
    CovSmoother, KernelKind, SmoothError, SmootherConfig,
};
pub use spectral::{
    basis_coefficients, eigendecompose, square_order_index, tail_hs, trunc_index_i,
    trunc_index_iota, OperatorBasisCoeffs, SpectralDecomposition, SpectralError, TruncationIndex,
};
