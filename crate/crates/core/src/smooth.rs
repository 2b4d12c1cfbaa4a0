//! Mean and covariance estimation by pooled local-polynomial smoothing.
//!
//! The mean is a locally linear fit pooling all observations with curve
//! weight 1/r; the covariance surface G(s,t) = E[Y_k Y_l] is a local plane
//! fit pooling the cross products Y_mk * Y_ml over within-curve pairs with
//! pair weight 2/(r(r-1)), evaluated on the closed triangle {t <= s} and
//! reflected. Pairs are oriented by design-point value, so every pair design
//! point (larger, smaller) lies in the same triangle the fit runs on and
//! windows at the diagonal never straddle it. No same-index pair is ever
//! used, which keeps measurement-error variance off the diagonal.
//!
//! Both smoothers use compactly supported polynomial kernels, so a window
//! sum is a polynomial moment of the data over an interval (or rectangle)
//! whose endpoints come from a fixed set of cuts. Moments are therefore
//! accumulated once per dataset into cut-aligned cells and answered per grid
//! point from prefix sums; this is algebraically identical to the direct
//! pair sweep (a test asserts agreement) but costs O(pairs + grid^2) instead
//! of O(pairs * grid^2). Grid points whose window is degenerate fall back to
//! a direct sweep with local bandwidth doubling.

use crate::grid::{uniform_grid, GridFunction, GridKernel};
use crate::simulate::{Curve, ObservationSet, SimulateError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Threshold on the diagonally scaled determinant below which a local
/// system counts as rank-deficient.
const SCALED_DET_TOL: f64 = 1e-10;

/// Above the rank-deficiency cutoff but below this, the moment-combination
/// fast path hands the point to the direct sweep: its summation is free of
/// the polynomial-expansion cancellation that an ill-conditioned solve
/// would amplify.
const CONDITION_GUARD: f64 = 1e-6;

/// Maximum number of local bandwidth doublings before giving up.
const MAX_WIDENINGS: u32 = 6;

#[derive(Debug, Error)]
pub enum SmoothError {
    #[error("invalid smoother configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid observations: {0}")]
    Observations(#[from] SimulateError),
    #[error(
        "empty local window at grid point (s={s}{}): fewer than {need} distinct \
         design points remain after {widenings} bandwidth doublings",
        t.map(|t| format!(", t={t}")).unwrap_or_default()
    )]
    EmptyWindow {
        s: f64,
        t: Option<f64>,
        need: usize,
        widenings: u32,
    },
    #[error(
        "singular local system at grid point (s={s}{}): normal equations remain \
         rank-deficient after {widenings} bandwidth doublings",
        t.map(|t| format!(", t={t}")).unwrap_or_default()
    )]
    SingularSystem {
        s: f64,
        t: Option<f64>,
        widenings: u32,
    },
}

/// Compactly supported smoothing kernels; both are polynomials on [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum KernelKind {
    #[default]
    #[serde(rename = "EPANECHNIKOV")]
    Epanechnikov,
    #[serde(rename = "QUARTIC")]
    Quartic,
}

impl KernelKind {
    /// Coefficients of W(u) in powers of u on its support.
    fn poly(self) -> &'static [f64] {
        match self {
            KernelKind::Epanechnikov => &[0.75, 0.0, -0.75],
            KernelKind::Quartic => &[0.9375, 0.0, -1.875, 0.0, 0.9375],
        }
    }

    fn degree(self) -> usize {
        self.poly().len() - 1
    }
}

/// Evaluates the kernel; zero outside (-1, 1).
pub fn kernel_eval(kind: KernelKind, u: f64) -> f64 {
    if u.abs() >= 1.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for &c in kind.poly().iter().rev() {
        acc = acc * u + c;
    }
    acc
}

/// Bandwidths and output resolution for the smoothers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmootherConfig {
    pub kernel: KernelKind,
    pub h_mu: f64,
    pub h_g: f64,
    pub grid_size: usize,
}

impl SmootherConfig {
    pub fn new(kernel: KernelKind, h_mu: f64, h_g: f64, grid_size: usize) -> Self {
        Self {
            kernel,
            h_mu,
            h_g,
            grid_size,
        }
    }

    pub fn validate(&self) -> Result<(), SmoothError> {
        for (name, h) in [("h_mu", self.h_mu), ("h_G", self.h_g)] {
            if !(h.is_finite() && h > 0.0 && h <= 1.0) {
                return Err(SmoothError::InvalidConfig(format!(
                    "{name} must lie in (0, 1], got {h}"
                )));
            }
        }
        if self.grid_size < 3 {
            return Err(SmoothError::InvalidConfig(format!(
                "grid_size must be at least 3, got {}",
                self.grid_size
            )));
        }
        Ok(())
    }
}

/// Rate-optimal default bandwidth: max(1/r, c_h (log n / n)^{1/4}), capped at 0.5.
pub fn default_bandwidths_scaled(n: usize, r: usize, c_h: f64) -> (f64, f64) {
    assert!(n >= 2 && r >= 2, "default_bandwidths needs n >= 2, r >= 2");
    assert!(c_h > 0.0);
    let rate = c_h * ((n as f64).ln() / n as f64).powf(0.25);
    let h = (1.0 / r as f64).max(rate).min(0.5);
    (h, h)
}

/// [`default_bandwidths_scaled`] with the default constant c_h = 1.
pub fn default_bandwidths(n: usize, r: usize) -> (f64, f64) {
    default_bandwidths_scaled(n, r, 1.0)
}

// ---------------------------------------------------------------------------
// polynomial helpers
// ---------------------------------------------------------------------------

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Moments are taken in powers of (x - MONOMIAL_CENTER) rather than raw x;
/// halving the monomial range keeps the coefficient cancellation small.
const MONOMIAL_CENTER: f64 = 0.5;

/// Coefficients in powers of (x - MONOMIAL_CENTER) of
/// W((x-s)/h) * ((x-s)/h)^p on the window.
fn window_poly(kind: KernelKind, s: f64, h: f64, p: usize) -> Vec<f64> {
    // u(x) = (x - s)/h as a degree-1 polynomial in (x - center)
    let u = [(MONOMIAL_CENTER - s) / h, 1.0 / h];
    // W(u(x)) via Horner on polynomials
    let mut w = Vec::new();
    for &c in kind.poly().iter().rev() {
        w = if w.is_empty() {
            vec![c]
        } else {
            let mut next = poly_mul(&w, &u);
            next[0] += c;
            next
        };
    }
    for _ in 0..p {
        w = poly_mul(&w, &u);
    }
    w
}

/// a0 of the weighted least-squares line fit; `None` when the diagonally
/// scaled determinant falls below `det_tol`.
/// System entries: n_p = sum w u^p, r_p = sum w y u^p.
fn solve_local_linear(n0: f64, n1: f64, n2: f64, r0: f64, r1: f64, det_tol: f64) -> Option<f64> {
    if !(n0 > 0.0 && n2 > 0.0) {
        return None;
    }
    let det = n0 * n2 - n1 * n1;
    if det / (n0 * n2) < det_tol {
        return None;
    }
    Some((n2 * r0 - n1 * r1) / det)
}

/// a0 of the weighted least-squares plane fit; `None` when the diagonally
/// scaled determinant falls below `det_tol`.
#[allow(clippy::too_many_arguments)]
fn solve_local_plane(
    n00: f64,
    n10: f64,
    n01: f64,
    n20: f64,
    n11: f64,
    n02: f64,
    r00: f64,
    r10: f64,
    r01: f64,
    det_tol: f64,
) -> Option<f64> {
    if !(n00 > 0.0 && n20 > 0.0 && n02 > 0.0) {
        return None;
    }
    let c00 = n20 * n02 - n11 * n11;
    let c01 = n10 * n02 - n11 * n01;
    let c02 = n10 * n11 - n20 * n01;
    let det = n00 * c00 - n10 * c01 + n01 * c02;
    if det / (n00 * n20 * n02) < det_tol {
        return None;
    }
    let det0 = r00 * c00 - n10 * (r10 * n02 - n11 * r01) + n01 * (r10 * n11 - n20 * r01);
    Some(det0 / det)
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Window-edge cuts: every clipped s +- h over the grid, plus the endpoints.
fn window_cuts(grid: &[f64], h: f64) -> Vec<f64> {
    let mut cuts = Vec::with_capacity(2 * grid.len() + 2);
    cuts.push(0.0);
    cuts.push(1.0);
    for &s in grid {
        cuts.push(clamp01(s - h));
        cuts.push(clamp01(s + h));
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    cuts
}

/// Index of the cell [cuts[i], cuts[i+1]) containing x; x = 1 joins the last cell.
fn cell_of(cuts: &[f64], x: f64) -> usize {
    let idx = cuts.partition_point(|c| *c <= x);
    idx.saturating_sub(1).min(cuts.len() - 2)
}

/// Exact cut index of a window edge (the edge was inserted into `cuts`).
fn cut_index(cuts: &[f64], edge: f64) -> usize {
    cuts.partition_point(|c| *c < edge)
}

// ---------------------------------------------------------------------------
// mean smoother
// ---------------------------------------------------------------------------

struct MeanData {
    /// pooled (t, y, weight) sorted by t
    points: Vec<(f64, f64, f64)>,
    /// prefix[d][e][k] = sum over the first k points of w * y^e * t^d
    prefix: Vec<Vec<f64>>,
}

impl MeanData {
    fn build(curves: &[Curve], kind: KernelKind) -> Self {
        let mut points: Vec<(f64, f64, f64)> = Vec::new();
        for c in curves {
            let w = 1.0 / c.r() as f64;
            for (&t, &y) in c.design_points.iter().zip(&c.values) {
                points.push((t, y, w));
            }
        }
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let dmax = kind.degree() + 3;
        let mut prefix = vec![vec![0.0; points.len() + 1]; dmax * 2];
        for (k, &(t, y, w)) in points.iter().enumerate() {
            let tc = t - MONOMIAL_CENTER;
            let mut td = 1.0;
            for d in 0..dmax {
                prefix[2 * d][k + 1] = prefix[2 * d][k] + w * td;
                prefix[2 * d + 1][k + 1] = prefix[2 * d + 1][k] + w * y * td;
                td *= tc;
            }
        }
        Self { points, prefix }
    }

    fn window(&self, lo_t: f64, hi_t: f64) -> (usize, usize) {
        let lo = self.points.partition_point(|p| p.0 < lo_t);
        let hi = self.points.partition_point(|p| p.0 <= hi_t);
        (lo, hi)
    }

    fn moment(&self, d: usize, e: usize, lo: usize, hi: usize) -> f64 {
        let row = &self.prefix[2 * d + e];
        row[hi] - row[lo]
    }

    /// Direct sweep with local bandwidth doubling; the slow path for
    /// degenerate windows.
    fn fit_fallback(&self, kind: KernelKind, h0: f64, s: f64) -> Result<f64, SmoothError> {
        let mut h = h0;
        let mut widenings = 0u32;
        loop {
            let (lo, hi) = self.window(clamp01(s - h), clamp01(s + h));
            let mut distinct = 0usize;
            let mut last = f64::NAN;
            let (mut n0, mut n1, mut n2, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for &(t, y, w0) in &self.points[lo..hi] {
                let u = (t - s) / h;
                let w = w0 * kernel_eval(kind, u);
                if w <= 0.0 {
                    continue;
                }
                if t != last {
                    distinct += 1;
                    last = t;
                }
                n0 += w;
                n1 += w * u;
                n2 += w * u * u;
                r0 += w * y;
                r1 += w * y * u;
            }
            if distinct >= 2 {
                if let Some(a0) = solve_local_linear(n0, n1, n2, r0, r1, SCALED_DET_TOL) {
                    return Ok(a0);
                }
            }
            if widenings >= MAX_WIDENINGS || h >= 1.0 {
                return Err(if distinct < 2 {
                    SmoothError::EmptyWindow {
                        s,
                        t: None,
                        need: 2,
                        widenings,
                    }
                } else {
                    SmoothError::SingularSystem {
                        s,
                        t: None,
                        widenings,
                    }
                });
            }
            h *= 2.0;
            widenings += 1;
        }
    }
}

fn fit_mean(
    curves: &[Curve],
    kind: KernelKind,
    h: f64,
    grid: &[f64],
) -> Result<Vec<f64>, SmoothError> {
    let data = MeanData::build(curves, kind);
    let mut out = Vec::with_capacity(grid.len());
    for &s in grid {
        let coeffs: Vec<Vec<f64>> = (0..=2).map(|p| window_poly(kind, s, h, p)).collect();
        let (lo, hi) = data.window(clamp01(s - h), clamp01(s + h));
        let combine = |poly: &[f64], e: usize| -> f64 {
            poly.iter()
                .enumerate()
                .map(|(d, &c)| c * data.moment(d, e, lo, hi))
                .sum()
        };
        let n0 = combine(&coeffs[0], 0);
        let n1 = combine(&coeffs[1], 0);
        let n2 = combine(&coeffs[2], 0);
        let r0 = combine(&coeffs[0], 1);
        let r1 = combine(&coeffs[1], 1);
        match solve_local_linear(n0, n1, n2, r0, r1, CONDITION_GUARD) {
            Some(a0) => out.push(a0),
            None => out.push(data.fit_fallback(kind, h, s)?),
        }
    }
    Ok(out)
}

/// Locally linear mean fit straight from curves, for callers that manage
/// their own grids and bandwidths (the sequential detector does).
pub fn mean_on_grid(
    curves: &[Curve],
    kind: KernelKind,
    h: f64,
    grid: &[f64],
) -> Result<Vec<f64>, SmoothError> {
    fit_mean(curves, kind, h, grid)
}

/// Locally linear estimate of the mean function on a uniform grid.
pub fn estimate_mean(
    obs: &ObservationSet,
    cfg: &SmootherConfig,
) -> Result<GridFunction, SmoothError> {
    cfg.validate()?;
    obs.validate()?;
    if obs.curves.is_empty() {
        return Err(SmoothError::InvalidConfig(
            "observation set has no curves".into(),
        ));
    }
    let grid = uniform_grid(cfg.grid_size);
    let values = fit_mean(&obs.curves, cfg.kernel, cfg.h_mu, &grid)?;
    Ok(GridFunction { grid, values })
}

// ---------------------------------------------------------------------------
// covariance smoother
// ---------------------------------------------------------------------------

/// Accumulates within-curve pair moments and fits the covariance surface.
///
/// The accumulator is incremental: curves can be ingested as they arrive and
/// a fit can be taken at any time, which is what the sequential detector
/// does. Re-ingesting from scratch yields identical fits (tested).
pub struct CovSmoother {
    kind: KernelKind,
    h: f64,
    grid: Vec<f64>,
    cuts: Vec<f64>,
    ncells: usize,
    /// number of monomial powers tracked per axis
    dmax: usize,
    /// moments[(i * dmax + j) * 2 + e] is the cell grid of
    /// sum w * z^e * x^i * y^j over ingested pairs
    moments: Vec<Vec<f64>>,
    curves_seen: usize,
}

impl CovSmoother {
    pub fn new(kind: KernelKind, h: f64, grid_size: usize) -> Self {
        let grid = uniform_grid(grid_size);
        let cuts = window_cuts(&grid, h);
        let ncells = cuts.len() - 1;
        let dmax = kind.degree() + 3;
        let moments = vec![vec![0.0; ncells * ncells]; 2 * dmax * dmax];
        Self {
            kind,
            h,
            grid,
            cuts,
            ncells,
            dmax,
            moments,
            curves_seen: 0,
        }
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    pub fn curves_seen(&self) -> usize {
        self.curves_seen
    }

    /// Value-sorted copy of a curve's (t, y) points.
    fn sorted_points(curve: &Curve) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = curve
            .design_points
            .iter()
            .copied()
            .zip(curve.values.iter().copied())
            .collect();
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        pts
    }

    /// Folds one curve's pairs into the cell moments.
    pub fn ingest(&mut self, curve: &Curve) {
        self.curves_seen += 1;
        let r = curve.r();
        if r < 2 {
            return;
        }
        let pts = Self::sorted_points(curve);
        let w = 2.0 / (r as f64 * (r - 1) as f64);
        let d = self.dmax;
        let mut xpow = vec![0.0; d];
        let mut ypow = vec![0.0; d];
        for b in 1..r {
            let (x, yb) = pts[b];
            let cx = cell_of(&self.cuts, x);
            let xc = x - MONOMIAL_CENTER;
            xpow[0] = 1.0;
            for i in 1..d {
                xpow[i] = xpow[i - 1] * xc;
            }
            for &(y, ya) in &pts[..b] {
                let z = ya * yb;
                let cy = cell_of(&self.cuts, y);
                let cell = cx * self.ncells + cy;
                let yc = y - MONOMIAL_CENTER;
                ypow[0] = 1.0;
                for j in 1..d {
                    ypow[j] = ypow[j - 1] * yc;
                }
                for i in 0..d {
                    let wx = w * xpow[i];
                    let wzx = wx * z;
                    for j in 0..d {
                        self.moments[(i * d + j) * 2][cell] += wx * ypow[j];
                        self.moments[(i * d + j) * 2 + 1][cell] += wzx * ypow[j];
                    }
                }
            }
        }
    }

    /// Fits G on the closed lower triangle and reflects to a symmetric
    /// matrix. `curves` must be the set ingested so far; it is only touched
    /// for degenerate windows.
    pub fn fit_g(&self, curves: &[Curve]) -> Result<Vec<f64>, SmoothError> {
        let m = self.grid.len();
        let nc = self.ncells;
        let d = self.dmax;

        // 2-D prefix sums per moment channel
        let mut prefix = vec![vec![0.0; (nc + 1) * (nc + 1)]; 2 * d * d];
        for (ch, cells) in self.moments.iter().enumerate() {
            let p = &mut prefix[ch];
            for i in 0..nc {
                let mut row_acc = 0.0;
                for j in 0..nc {
                    row_acc += cells[i * nc + j];
                    p[(i + 1) * (nc + 1) + (j + 1)] = p[i * (nc + 1) + (j + 1)] + row_acc;
                }
            }
        }

        // per-grid-point window polynomials, shared by both axes
        let coeffs: Vec<[Vec<f64>; 3]> = self
            .grid
            .iter()
            .map(|&s| {
                [
                    window_poly(self.kind, s, self.h, 0),
                    window_poly(self.kind, s, self.h, 1),
                    window_poly(self.kind, s, self.h, 2),
                ]
            })
            .collect();

        let rect = |ch: usize, alo: usize, ahi: usize, blo: usize, bhi: usize| -> f64 {
            let p = &prefix[ch];
            p[ahi * (nc + 1) + bhi] - p[alo * (nc + 1) + bhi] - p[ahi * (nc + 1) + blo]
                + p[alo * (nc + 1) + blo]
        };

        let mut values = vec![0.0; m * m];
        let mut local = vec![0.0; 2 * d * d];
        for gi in 0..m {
            let s = self.grid[gi];
            let (alo, ahi) = (
                cut_index(&self.cuts, clamp01(s - self.h)),
                cut_index(&self.cuts, clamp01(s + self.h)),
            );
            for gj in 0..=gi {
                let t = self.grid[gj];
                let (blo, bhi) = (
                    cut_index(&self.cuts, clamp01(t - self.h)),
                    cut_index(&self.cuts, clamp01(t + self.h)),
                );
                for ch in 0..2 * d * d {
                    local[ch] = rect(ch, alo, ahi, blo, bhi);
                }
                let moment = |p: usize, q: usize, e: usize| -> f64 {
                    let px = &coeffs[gi][p];
                    let py = &coeffs[gj][q];
                    let mut acc = 0.0;
                    for (i, &ci) in px.iter().enumerate() {
                        let mut inner = 0.0;
                        for (j, &cj) in py.iter().enumerate() {
                            inner += cj * local[(i * d + j) * 2 + e];
                        }
                        acc += ci * inner;
                    }
                    acc
                };
                let a0 = solve_local_plane(
                    moment(0, 0, 0),
                    moment(1, 0, 0),
                    moment(0, 1, 0),
                    moment(2, 0, 0),
                    moment(1, 1, 0),
                    moment(0, 2, 0),
                    moment(0, 0, 1),
                    moment(1, 0, 1),
                    moment(0, 1, 1),
                    CONDITION_GUARD,
                );
                let v = match a0 {
                    Some(v) => v,
                    None => self.fit_fallback(curves, s, t)?,
                };
                values[gi * m + gj] = v;
                values[gj * m + gi] = v;
            }
        }
        Ok(values)
    }

    /// Direct pair sweep with local bandwidth doubling.
    fn fit_fallback(&self, curves: &[Curve], s: f64, t: f64) -> Result<f64, SmoothError> {
        let mut h = self.h;
        let mut widenings = 0u32;
        loop {
            let mut distinct: Vec<(f64, f64)> = Vec::with_capacity(3);
            let mut n = [0.0f64; 6];
            let mut r = [0.0f64; 3];
            for curve in curves {
                let rr = curve.r();
                if rr < 2 {
                    continue;
                }
                let pts = Self::sorted_points(curve);
                let w0 = 2.0 / (rr as f64 * (rr - 1) as f64);
                for b in 1..rr {
                    let (x, yb) = pts[b];
                    let wx = kernel_eval(self.kind, (x - s) / h);
                    if wx <= 0.0 {
                        continue;
                    }
                    for &(y, ya) in &pts[..b] {
                        let wy = kernel_eval(self.kind, (y - t) / h);
                        if wy <= 0.0 {
                            continue;
                        }
                        let w = w0 * wx * wy;
                        let (ux, uy) = ((x - s) / h, (y - t) / h);
                        if distinct.len() < 3 && !distinct.contains(&(x, y)) {
                            distinct.push((x, y));
                        }
                        let z = ya * yb;
                        n[0] += w;
                        n[1] += w * ux;
                        n[2] += w * uy;
                        n[3] += w * ux * ux;
                        n[4] += w * ux * uy;
                        n[5] += w * uy * uy;
                        r[0] += w * z;
                        r[1] += w * z * ux;
                        r[2] += w * z * uy;
                    }
                }
            }
            if distinct.len() >= 3 {
                if let Some(a0) =
                    solve_local_plane(n[0], n[1], n[2], n[3], n[4], n[5], r[0], r[1], r[2], SCALED_DET_TOL)
                {
                    return Ok(a0);
                }
            }
            if widenings >= MAX_WIDENINGS || h >= 1.0 {
                return Err(if distinct.len() < 3 {
                    SmoothError::EmptyWindow {
                        s,
                        t: Some(t),
                        need: 3,
                        widenings,
                    }
                } else {
                    SmoothError::SingularSystem {
                        s,
                        t: Some(t),
                        widenings,
                    }
                });
            }
            h *= 2.0;
            widenings += 1;
        }
    }
}

/// Local-plane estimate of the covariance kernel on a uniform grid:
/// C_n = G_hat - mu_hat (x) mu_hat, assembled symmetric by reflection of the
/// lower triangle.
pub fn estimate_cov(obs: &ObservationSet, cfg: &SmootherConfig) -> Result<GridKernel, SmoothError> {
    cfg.validate()?;
    obs.validate()?;
    if obs.curves.is_empty() {
        return Err(SmoothError::InvalidConfig(
            "observation set has no curves".into(),
        ));
    }
    let mut sm = CovSmoother::new(cfg.kernel, cfg.h_g, cfg.grid_size);
    for c in &obs.curves {
        sm.ingest(c);
    }
    let g = sm.fit_g(&obs.curves)?;
    let mu = fit_mean(&obs.curves, cfg.kernel, cfg.h_mu, &sm.grid)?;
    Ok(assemble_cov(&sm.grid, g, &mu))
}

/// C = G - mu (x) mu on the triangle, mirrored to exact symmetry.
pub(crate) fn assemble_cov(grid: &[f64], g: Vec<f64>, mu: &[f64]) -> GridKernel {
    let m = grid.len();
    let mut values = g;
    for i in 0..m {
        for j in 0..=i {
            let v = values[i * m + j] - mu[i] * mu[j];
            values[i * m + j] = v;
            values[j * m + i] = v;
        }
    }
    GridKernel {
        grid: grid.to_vec(),
        values,
        quadrature_weights: crate::grid::trapezoid_weights(m),
    }
}
