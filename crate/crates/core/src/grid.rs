//! Uniform grids on [0,1], trapezoid quadrature, and the grid-discretized
//! function/kernel containers shared by the estimator and the spectral
//! machinery.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised when a grid container is malformed.
#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid needs at least {required} points, got {actual}")]
    TooFewPoints { required: usize, actual: usize },
    #[error("length mismatch: {what} has {actual} entries for a {expected}-point grid")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("grid values must lie in [0,1] and be strictly increasing")]
    NotAGrid,
}

/// `m` equispaced points spanning [0, 1] inclusive.
pub fn uniform_grid(m: usize) -> Vec<f64> {
    assert!(m >= 2, "uniform_grid needs m >= 2");
    let step = 1.0 / (m - 1) as f64;
    (0..m).map(|i| i as f64 * step).collect()
}

/// Trapezoid quadrature weights on the uniform `m`-point grid; they sum to 1.
pub fn trapezoid_weights(m: usize) -> Vec<f64> {
    assert!(m >= 2, "trapezoid_weights needs m >= 2");
    let step = 1.0 / (m - 1) as f64;
    let mut w = vec![step; m];
    w[0] = step / 2.0;
    w[m - 1] = step / 2.0;
    w
}

/// Linear interpolation of `values` sampled on the uniform grid over [0,1].
///
/// `t` outside [0,1] is clamped to the endpoints.
pub fn interp_uniform(values: &[f64], t: f64) -> f64 {
    let m = values.len();
    debug_assert!(m >= 2);
    let x = t.clamp(0.0, 1.0) * (m - 1) as f64;
    let i = (x.floor() as usize).min(m - 2);
    let frac = x - i as f64;
    values[i] + frac * (values[i + 1] - values[i])
}

/// A real function discretized on a uniform grid over [0,1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self, GridError> {
        if grid.len() < 2 {
            return Err(GridError::TooFewPoints {
                required: 2,
                actual: grid.len(),
            });
        }
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                what: "values",
                expected: grid.len(),
                actual: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// A symmetric kernel discretized on a uniform grid, together with the
/// trapezoid weights used for every inner product involving it.
///
/// `values` is row-major: `values[i * m + j]` is K(grid\[i\], grid\[j\]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridKernel {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub quadrature_weights: Vec<f64>,
}

impl GridKernel {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self, GridError> {
        let m = grid.len();
        if m < 2 {
            return Err(GridError::TooFewPoints {
                required: 2,
                actual: m,
            });
        }
        if values.len() != m * m {
            return Err(GridError::LengthMismatch {
                what: "values",
                expected: m,
                actual: values.len(),
            });
        }
        let quadrature_weights = trapezoid_weights(m);
        Ok(Self {
            grid,
            values,
            quadrature_weights,
        })
    }

    /// Builds a kernel by evaluating `f(s, t)` at every grid pair.
    pub fn from_fn(m: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let grid = uniform_grid(m);
        let mut values = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                values[i * m + j] = f(grid[i], grid[j]);
            }
        }
        Self {
            grid,
            values,
            quadrature_weights: trapezoid_weights(m),
        }
    }

    pub fn m(&self) -> usize {
        self.grid.len()
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.m() + j]
    }

    /// Maximum absolute deviation from symmetry.
    pub fn asymmetry(&self) -> f64 {
        let m = self.m();
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in (i + 1)..m {
                worst = worst.max((self.at(i, j) - self.at(j, i)).abs());
            }
        }
        worst
    }

    /// Squared Hilbert-Schmidt norm by double trapezoid quadrature of K^2.
    pub fn hs_norm_sq(&self) -> f64 {
        let m = self.m();
        let w = &self.quadrature_weights;
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                let v = self.at(i, j);
                acc += w[i] * w[j] * v * v;
            }
        }
        acc
    }

    /// Weighted Frobenius (discretized Hilbert-Schmidt) distance to `other`.
    pub fn hs_distance(&self, other: &GridKernel) -> f64 {
        assert_eq!(self.m(), other.m(), "kernels live on different grids");
        let m = self.m();
        let w = &self.quadrature_weights;
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                let d = self.at(i, j) - other.at(i, j);
                acc += w[i] * w[j] * d * d;
            }
        }
        acc.sqrt()
    }

    /// Largest pointwise absolute difference to `other` over the grid.
    pub fn sup_distance(&self, other: &GridKernel) -> f64 {
        assert_eq!(self.m(), other.m(), "kernels live on different grids");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
