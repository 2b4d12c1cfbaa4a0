//! Spectral machinery on grid kernels: weighted eigendecomposition,
//! Hilbert-Schmidt tails, truncation indices, and operator-basis
//! coefficients in square ordering.
//!
//! All inner products are trapezoid quadrature in the kernel's weights.
//! The discrete eigenproblem is solved through the similarity transform
//! B = D^{1/2} K D^{1/2} with D = diag(weights): B is symmetric, its
//! eigenvalues approximate the operator eigenvalues, and mapping the
//! eigenvectors back by D^{-1/2} makes them orthonormal in the weighted
//! inner product. Rankings and tails use |eigenvalue| throughout, since
//! estimated kernels need not be nonnegative and singular values of a
//! symmetric operator are the absolute eigenvalues.

use crate::grid::GridKernel;
use crate::simulate::{make_basis, BasisSpec, SimulateError};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("kernel is asymmetric: max |K(i,j) - K(j,i)| = {max_dev} exceeds 1e-10")]
    AsymmetricInput { max_dev: f64 },
    #[error("kernel contains non-finite values")]
    NotFinite,
    #[error("malformed kernel: {m} grid points need {} values and {m} weights", m * m)]
    Malformed { m: usize },
    #[error("quadrature weights must be positive")]
    BadWeights,
    #[error("operator basis too small: need size^2 >= {l_max}, got size {size}")]
    BasisTooSmall { size: usize, l_max: usize },
    #[error("invalid basis: {0}")]
    Basis(#[from] SimulateError),
    #[error("L_max must be at least 1")]
    EmptyCoefficients,
}

/// Eigenvalues and weighted-orthonormal eigenfunctions of a grid kernel,
/// sorted by |eigenvalue| descending (ties keep source order).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// `eigenfunctions[l]` holds the l-th eigenfunction on the grid.
    pub eigenfunctions: Vec<Vec<f64>>,
    pub quadrature_weights: Vec<f64>,
}

fn check_shape(k: &GridKernel) -> Result<(), SpectralError> {
    let m = k.grid.len();
    if m < 2 || k.values.len() != m * m || k.quadrature_weights.len() != m {
        return Err(SpectralError::Malformed { m });
    }
    if k.values.iter().any(|v| !v.is_finite()) {
        return Err(SpectralError::NotFinite);
    }
    Ok(())
}

/// Solves the weighted symmetric eigenproblem of a grid kernel.
pub fn eigendecompose(k: &GridKernel) -> Result<SpectralDecomposition, SpectralError> {
    check_shape(k)?;
    let max_dev = k.asymmetry();
    if max_dev > 1e-10 {
        return Err(SpectralError::AsymmetricInput { max_dev });
    }
    let w = &k.quadrature_weights;
    if w.iter().any(|&wi| wi <= 0.0) {
        return Err(SpectralError::BadWeights);
    }
    let m = k.m();
    let sqrt_w: Vec<f64> = w.iter().map(|&wi| wi.sqrt()).collect();
    let b = DMatrix::from_fn(m, m, |i, j| {
        // symmetrize to scrub roundoff asymmetry before the solver
        0.5 * (k.at(i, j) + k.at(j, i)) * sqrt_w[i] * sqrt_w[j]
    });
    let eig = SymmetricEigen::new(b);

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .abs()
            .partial_cmp(&eig.eigenvalues[a].abs())
            .unwrap()
    });

    let mut eigenvalues = Vec::with_capacity(m);
    let mut eigenfunctions = Vec::with_capacity(m);
    for &idx in &order {
        eigenvalues.push(eig.eigenvalues[idx]);
        let col = eig.eigenvectors.column(idx);
        let mut f: Vec<f64> = (0..m).map(|i| col[i] / sqrt_w[i]).collect();
        // deterministic sign: largest-magnitude component positive
        let lead = f
            .iter()
            .cloned()
            .fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
        if lead < 0.0 {
            for v in &mut f {
                *v = -*v;
            }
        }
        eigenfunctions.push(f);
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenfunctions,
        quadrature_weights: w.clone(),
    })
}

impl SpectralDecomposition {
    /// Reconstructs the rank-j spectral truncation Q_j as a grid kernel.
    pub fn truncation_kernel(&self, j: usize, grid: &[f64]) -> GridKernel {
        let m = grid.len();
        assert_eq!(m, self.quadrature_weights.len());
        let mut values = vec![0.0; m * m];
        for l in 0..j.min(self.eigenvalues.len()) {
            let lam = self.eigenvalues[l];
            let f = &self.eigenfunctions[l];
            for a in 0..m {
                let fa = lam * f[a];
                for b in 0..m {
                    values[a * m + b] += fa * f[b];
                }
            }
        }
        GridKernel {
            grid: grid.to_vec(),
            values,
            quadrature_weights: self.quadrature_weights.clone(),
        }
    }
}

/// Hilbert-Schmidt norm of the part beyond the top j components:
/// (sum_{l > j} eigenvalue_l^2)^{1/2}; j = 0 gives the full norm.
pub fn tail_hs(d: &SpectralDecomposition, j: usize) -> f64 {
    d.eigenvalues
        .iter()
        .skip(j)
        .map(|l| l * l)
        .sum::<f64>()
        .sqrt()
}

/// Least truncation level approximating the kernel to delta precision:
/// min { j >= 0 : tail_hs(d, j) < delta }.
pub fn trunc_index_i(d: &SpectralDecomposition, delta: f64) -> usize {
    assert!(delta > 0.0, "delta must be positive");
    let n = d.eigenvalues.len();
    // suffix sums of squared eigenvalues
    let mut tail_sq = vec![0.0; n + 1];
    for l in (0..n).rev() {
        tail_sq[l] = tail_sq[l + 1] + d.eigenvalues[l] * d.eigenvalues[l];
    }
    for j in 0..=n {
        if tail_sq[j].sqrt() < delta {
            return j;
        }
    }
    n
}

/// Square (block) ordering of tensor-product index pairs: block
/// m = max(row, col) enumerates (1,m), ..., (m,m), (m,m-1), ..., (m,1).
/// Bijective from pairs of positive integers to positive integers.
pub fn square_order_index(row: usize, col: usize) -> usize {
    assert!(row >= 1 && col >= 1, "square ordering is 1-based");
    let m = row.max(col);
    let base = (m - 1) * (m - 1);
    if col == m {
        base + row
    } else {
        base + 2 * m - col
    }
}

/// Inverse of [`square_order_index`].
pub fn square_order_pair(index: usize) -> (usize, usize) {
    assert!(index >= 1);
    let m = (index as f64).sqrt().ceil() as usize;
    let m = if (m - 1) * (m - 1) >= index { m - 1 } else { m };
    let off = index - (m - 1) * (m - 1);
    if off <= m {
        (off, m)
    } else {
        (m, 2 * m - off)
    }
}

/// Coefficients of a kernel in the square-ordered tensor-product basis,
/// plus its squared Hilbert-Schmidt norm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorBasisCoeffs {
    pub basis: BasisSpec,
    pub coeffs: Vec<f64>,
    pub hs_norm_sq: f64,
}

/// Projects a kernel onto the first `l_max` square-ordered tensor products
/// psi_row (x) psi_col of the given one-dimensional basis.
pub fn basis_coefficients(
    k: &GridKernel,
    basis: &BasisSpec,
    l_max: usize,
) -> Result<OperatorBasisCoeffs, SpectralError> {
    if l_max == 0 {
        return Err(SpectralError::EmptyCoefficients);
    }
    check_shape(k)?;
    let blocks = (l_max as f64).sqrt().ceil() as usize;
    if basis.size < blocks {
        return Err(SpectralError::BasisTooSmall {
            size: basis.size,
            l_max,
        });
    }
    let m = k.m();
    let rows = make_basis(
        &BasisSpec {
            family: basis.family,
            size: blocks,
        },
        &k.grid,
    )?;
    let w = &k.quadrature_weights;

    // inner[a][b] = <K, psi_a (x) psi_b> by double quadrature, computed as
    // psi_a^T (W K W) psi_b through one intermediate product
    let mut kw: Vec<f64> = vec![0.0; blocks * m]; // kw[a][j] = sum_i w_i psi_a(i) K(i,j) w_j
    for (a, psi) in rows.iter().enumerate() {
        for j in 0..m {
            let mut acc = 0.0;
            for i in 0..m {
                acc += w[i] * psi[i] * k.at(i, j);
            }
            kw[a * m + j] = acc * w[j];
        }
    }
    let mut coeffs = vec![0.0; l_max];
    for a in 1..=blocks {
        for b in 1..=blocks {
            let idx = square_order_index(a, b);
            if idx > l_max {
                continue;
            }
            let mut acc = 0.0;
            for j in 0..m {
                acc += kw[(a - 1) * m + j] * rows[b - 1][j];
            }
            coeffs[idx - 1] = acc;
        }
    }
    Ok(OperatorBasisCoeffs {
        basis: basis.clone(),
        coeffs,
        hs_norm_sq: k.hs_norm_sq(),
    })
}

/// A reported truncation level, or the signal that the available
/// coefficients could not reach the requested precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TruncationIndex {
    Value(usize),
    Overflow,
}

impl std::fmt::Display for TruncationIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TruncationIndex::Value(v) => write!(f, "{v}"),
            TruncationIndex::Overflow => write!(f, "OVERFLOW"),
        }
    }
}

/// Least projection level approximating the kernel to delta precision in
/// the operator basis: min { j >= 0 : (hs_norm_sq - sum_{l<=j} c_l^2)^{1/2} < delta },
/// or `Overflow` when even all stored coefficients fail the test.
pub fn trunc_index_iota(c: &OperatorBasisCoeffs, delta: f64) -> TruncationIndex {
    assert!(delta > 0.0, "delta must be positive");
    let mut residual_sq = c.hs_norm_sq;
    if residual_sq.max(0.0).sqrt() < delta {
        return TruncationIndex::Value(0);
    }
    for (j, &cl) in c.coeffs.iter().enumerate() {
        residual_sq -= cl * cl;
        if residual_sq.max(0.0).sqrt() < delta {
            return TruncationIndex::Value(j + 1);
        }
    }
    TruncationIndex::Overflow
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::uniform_grid;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn brownian_decomp(m: usize) -> SpectralDecomposition {
        eigendecompose(&GridKernel::from_fn(m, f64::min)).unwrap()
    }

    /// Analytic Brownian eigenvalues 1/((l - 1/2)^2 pi^2).
    fn bm_eigenvalue(l: usize) -> f64 {
        1.0 / ((l as f64 - 0.5) * PI).powi(2)
    }

    #[test]
    fn constant_kernel_is_rank_one() {
        let d = eigendecompose(&GridKernel::from_fn(51, |_, _| 1.0)).unwrap();
        assert_abs_diff_eq!(d.eigenvalues[0], 1.0, epsilon = 1e-10);
        for l in 1..d.eigenvalues.len() {
            assert!(d.eigenvalues[l].abs() < 1e-10);
        }
        for v in &d.eigenfunctions[0] {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn brownian_eigenvalues_match_analytic_oracle() {
        let d = brownian_decomp(201);
        for l in 1..=5 {
            assert!(
                (d.eigenvalues[l - 1] - bm_eigenvalue(l)).abs() < 1e-3,
                "alpha_{l}: {} vs {}",
                d.eigenvalues[l - 1],
                bm_eigenvalue(l)
            );
        }
        let sum_sq: f64 = d.eigenvalues.iter().map(|v| v * v).sum();
        assert!((sum_sq - 1.0 / 6.0).abs() < 1e-3, "sum alpha^2 = {sum_sq}");
    }

    #[test]
    fn eigenfunctions_are_weighted_orthonormal() {
        let d = brownian_decomp(101);
        for a in 0..6 {
            for b in 0..6 {
                let ip: f64 = d
                    .quadrature_weights
                    .iter()
                    .zip(d.eigenfunctions[a].iter().zip(&d.eigenfunctions[b]))
                    .map(|(&w, (&fa, &fb))| w * fa * fb)
                    .sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() <= 1e-8, "<phi_{a}, phi_{b}> = {ip}");
            }
        }
    }

    #[test]
    fn hs_consistency_and_trace_identity() {
        let k = GridKernel::from_fn(101, |s, t| (s * t).cos() + s + t);
        let d = eigendecompose(&k).unwrap();
        let sum_sq: f64 = d.eigenvalues.iter().map(|v| v * v).sum();
        let hs = k.hs_norm_sq();
        assert!((sum_sq - hs).abs() <= 1e-6 * hs.max(1.0), "{sum_sq} vs {hs}");
        let trace_quad: f64 = (0..k.m())
            .map(|i| k.quadrature_weights[i] * k.at(i, i))
            .sum();
        let trace_eig: f64 = d.eigenvalues.iter().sum();
        assert!((trace_eig - trace_quad).abs() <= 1e-6 * hs.sqrt().max(1.0));
    }

    #[test]
    fn asymmetric_input_rejected() {
        let mut k = GridKernel::from_fn(11, |s, t| s + t);
        k.values[3] += 1e-6;
        assert!(matches!(
            eigendecompose(&k),
            Err(SpectralError::AsymmetricInput { .. })
        ));
    }

    #[test]
    fn malformed_and_nonfinite_kernels_rejected() {
        let mut k = GridKernel::from_fn(11, |_, _| 1.0);
        k.values.pop();
        assert!(matches!(
            eigendecompose(&k),
            Err(SpectralError::Malformed { m: 11 })
        ));
        let mut k = GridKernel::from_fn(11, |_, _| 1.0);
        k.values[5] = f64::INFINITY;
        k.values[5 * 11] = f64::INFINITY;
        assert!(matches!(eigendecompose(&k), Err(SpectralError::NotFinite)));
        assert!(matches!(
            basis_coefficients(&k, &BasisSpec::cosine(4), 16),
            Err(SpectralError::NotFinite)
        ));
    }

    #[test]
    fn tails_and_truncation_levels() {
        let fake = |vals: &[f64]| SpectralDecomposition {
            eigenvalues: vals.to_vec(),
            eigenfunctions: vec![Vec::new(); vals.len()],
            quadrature_weights: Vec::new(),
        };
        let d = fake(&[2.0]);
        assert_abs_diff_eq!(tail_hs(&d, 0), 2.0);
        assert_abs_diff_eq!(tail_hs(&d, 1), 0.0);
        assert_abs_diff_eq!(tail_hs(&d, 5), 0.0);
        let d = fake(&[1.0, 0.5]);
        assert_abs_diff_eq!(tail_hs(&d, 1), 0.5);
        assert_eq!(trunc_index_i(&d, 0.6), 1);
        assert_eq!(trunc_index_i(&fake(&[1.0]), 2.0), 0);

        let bm = brownian_decomp(201);
        let analytic_tail1 = (1.0 / 6.0 - bm_eigenvalue(1).powi(2)).sqrt();
        assert!(
            (tail_hs(&bm, 1) - analytic_tail1).abs() < 2e-3,
            "tail_1 = {} vs {analytic_tail1}",
            tail_hs(&bm, 1)
        );
        assert_eq!(trunc_index_i(&bm, 0.05), 1);
    }

    #[test]
    fn square_order_examples_and_bijection() {
        assert_eq!(square_order_index(1, 1), 1);
        assert_eq!(square_order_index(1, 2), 2);
        assert_eq!(square_order_index(2, 2), 3);
        assert_eq!(square_order_index(2, 1), 4);
        assert_eq!(square_order_index(3, 1), 9);
        let mut seen = vec![false; 400];
        for row in 1..=20 {
            for col in 1..=20 {
                let idx = square_order_index(row, col);
                assert!((1..=400).contains(&idx));
                assert!(!seen[idx - 1], "collision at ({row},{col})");
                seen[idx - 1] = true;
                assert_eq!(square_order_pair(idx), (row, col));
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn basis_coefficients_recover_tensor_elements() {
        let grid = uniform_grid(101);
        let basis = BasisSpec::cosine(20);
        let rows = make_basis(&basis, &grid).unwrap();
        // K = psi_1 (x) psi_1 is the constant kernel
        let k1 = GridKernel::from_fn(101, |_, _| 1.0);
        let c1 = basis_coefficients(&k1, &basis, 25).unwrap();
        assert_abs_diff_eq!(c1.coeffs[0], 1.0, epsilon = 1e-6);
        for l in 1..25 {
            assert!(c1.coeffs[l].abs() < 1e-6, "coeff {l} = {}", c1.coeffs[l]);
        }

        // K = psi_1 (x) psi_1 + 0.3 psi_2 (x) psi_2: square indices 1 and 3
        let m = 101;
        let mut values = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                values[i * m + j] = rows[0][i] * rows[0][j] + 0.3 * rows[1][i] * rows[1][j];
            }
        }
        let k2 = GridKernel::new(grid.clone(), values).unwrap();
        let c2 = basis_coefficients(&k2, &basis, 25).unwrap();
        assert_abs_diff_eq!(c2.coeffs[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(c2.coeffs[2], 0.3, epsilon = 1e-6);
        for (l, c) in c2.coeffs.iter().enumerate() {
            if l != 0 && l != 2 {
                assert!(c.abs() < 1e-6, "coeff {} = {c}", l + 1);
            }
        }
        // Bessel
        let sum_sq: f64 = c2.coeffs.iter().map(|c| c * c).sum();
        assert!(sum_sq <= c2.hs_norm_sq + 1e-8);
    }

    #[test]
    fn iota_examples() {
        let c = OperatorBasisCoeffs {
            basis: BasisSpec::cosine(2),
            coeffs: vec![1.0, 0.0, 0.3, 0.0],
            hs_norm_sq: 1.09,
        };
        assert_eq!(trunc_index_iota(&c, 0.2), TruncationIndex::Value(3));
        assert_eq!(trunc_index_iota(&c, 2.0), TruncationIndex::Value(0));
        // residual floor above delta: all coefficients consumed
        let c = OperatorBasisCoeffs {
            basis: BasisSpec::cosine(2),
            coeffs: vec![1.0],
            hs_norm_sq: 1.5,
        };
        assert_eq!(trunc_index_iota(&c, 0.2), TruncationIndex::Overflow);
    }

    #[test]
    fn basis_too_small_rejected() {
        let k = GridKernel::from_fn(21, |_, _| 1.0);
        assert!(matches!(
            basis_coefficients(&k, &BasisSpec::cosine(3), 16),
            Err(SpectralError::BasisTooSmall { .. })
        ));
    }
}
