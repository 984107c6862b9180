//! Dense eigendecomposition of a Laplacian and the exact spectral filter.
//!
//! This path costs `O(n^3)` and exists as the ground truth that the Chebyshev
//! recurrence in [`crate::layers::ChebConvLayer`] is checked against.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;

use super::LaplacianOperator;
use crate::error::{Error, Result};

/// Largest graph accepted by the dense oracle.
pub const ORACLE_MAX_DIM: usize = 2000;

/// Orthonormal eigenvectors (columns of `u`) with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub u: Array2<f64>,
    pub eigenvalues: Vec<f64>,
}

impl SpectralBasis {
    pub fn of(l: &LaplacianOperator) -> Self {
        let n = l.dim();
        let dense = l.to_dense();
        let m = DMatrix::from_fn(n, n, |i, j| dense[[i, j]]);
        let eig = SymmetricEigen::new(m);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let u = Array2::from_shape_fn((n, n), |(i, c)| eig.eigenvectors[(i, idx[c])]);
        let eigenvalues = idx.iter().map(|&c| eig.eigenvalues[c]).collect();
        SpectralBasis { u, eigenvalues }
    }

    /// Graph Fourier transform `U^T x`.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let n = self.eigenvalues.len();
        (0..n)
            .map(|l| (0..n).map(|i| self.u[[i, l]] * x[i]).sum())
            .collect()
    }

    /// Inverse transform `U x_hat`.
    pub fn inverse(&self, xh: &[f64]) -> Vec<f64> {
        let n = self.eigenvalues.len();
        (0..n)
            .map(|i| (0..n).map(|l| self.u[[i, l]] * xh[l]).sum())
            .collect()
    }
}

/// Chebyshev series `sum_k c_k T_k(t)` by direct recurrence on a scalar.
fn chebyshev_series(coeffs: &[f64], t: f64) -> f64 {
    let (mut t_prev, mut t_cur) = (1.0, t);
    let mut acc = 0.0;
    for (k, c) in coeffs.iter().enumerate() {
        let tk = match k {
            0 => 1.0,
            1 => t,
            _ => {
                let next = 2.0 * t * t_cur - t_prev;
                t_prev = t_cur;
                t_cur = next;
                next
            }
        };
        acc += c * tk;
    }
    acc
}

/// Exact spectral filtering `U y(Lambda) U^T x` with
/// `y(lambda) = sum_k coeffs[k] T_k(2 lambda / lambda_max - 1)`.
///
/// Uses the operator's cached `lambda_max` estimate so that it matches the
/// recurrence path bit-for-bit in its scaling.
pub fn spectral_filter_oracle(l: &LaplacianOperator, x: &[f64], coeffs: &[f64]) -> Result<Vec<f64>> {
    if x.len() != l.dim() {
        return Err(Error::dims("spectral_filter_oracle signal", l.dim(), x.len()));
    }
    if l.dim() > ORACLE_MAX_DIM {
        return Err(Error::dims("spectral_filter_oracle size cap", ORACLE_MAX_DIM, l.dim()));
    }
    let lmax = l.estimate_lambda_max()?;
    let basis = SpectralBasis::of(l);
    let mut xh = basis.forward(x);
    for (v, &lam) in xh.iter_mut().zip(&basis.eigenvalues) {
        *v *= chebyshev_series(coeffs, 2.0 * lam / lmax - 1.0);
    }
    Ok(basis.inverse(&xh))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_laplacian, WeightedGraph};
    use crate::numerics::SeededRng;

    #[test]
    fn identity_filter() {
        let g = WeightedGraph::new(4, [(0, 1, 1.0), (1, 2, 0.5), (2, 3, 2.0), (0, 3, 1.5)]).unwrap();
        let l = build_laplacian(&g);
        let x = [0.3, -1.0, 2.0, 0.7];
        let y = spectral_filter_oracle(&l, &x, &[1.0, 0.0, 0.0]).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn first_order_on_p2() {
        let g = WeightedGraph::new(2, [(0, 1, 1.0)]).unwrap();
        let l = build_laplacian(&g);
        let y = spectral_filter_oracle(&l, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!(y[0].abs() < 1e-9);
        assert!((y[1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn basis_is_orthonormal_eigenbasis() {
        let mut rng = SeededRng::new(5);
        let mut edges = Vec::new();
        for i in 0..9 {
            for j in (i + 1)..9 {
                if rng.uniform() < 0.4 {
                    edges.push((i, j, rng.uniform() + 0.1));
                }
            }
        }
        let l = build_laplacian(&WeightedGraph::new(9, edges).unwrap());
        let b = SpectralBasis::of(&l);
        let utu = b.u.t().dot(&b.u);
        let dense = l.to_dense();
        for i in 0..9 {
            for j in 0..9 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((utu[[i, j]] - e).abs() < 1e-8);
            }
            let col = b.u.column(i);
            let lu = dense.dot(&col);
            for r in 0..9 {
                assert!((lu[r] - b.eigenvalues[i] * col[r]).abs() < 1e-8);
            }
        }
        assert!(b.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        assert!(b.eigenvalues[0] >= -1e-9);
    }

    #[test]
    fn rejects_wrong_length() {
        let g = WeightedGraph::new(2, [(0, 1, 1.0)]).unwrap();
        let l = build_laplacian(&g);
        assert!(matches!(
            spectral_filter_oracle(&l, &[1.0], &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
