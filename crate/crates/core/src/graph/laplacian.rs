use std::sync::OnceLock;

use ndarray::Array2;

use super::WeightedGraph;
use crate::error::{Error, Result};
use crate::numerics::SeededRng;

const POWER_TOL: f64 = 1e-9;
const POWER_MAX_ITERS: usize = 10_000;
const POWER_START_SEED: u64 = 0x0001_a91a_c1a4;

/// Sparse symmetric matrix in compressed-row form. Every row stores its
/// diagonal entry, even when it is zero.
#[derive(Debug, Clone)]
struct Csr {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    /// `out = alpha * M * x + beta * out` for a row-major block `x` with
    /// `width` columns per row.
    fn spmm_into(&self, x: &[f64], width: usize, alpha: f64, beta: f64, out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim * width);
        debug_assert_eq!(out.len(), self.dim * width);
        for i in 0..self.dim {
            let row = &mut out[i * width..(i + 1) * width];
            if beta == 0.0 {
                row.iter_mut().for_each(|v| *v = 0.0);
            } else if beta != 1.0 {
                row.iter_mut().for_each(|v| *v *= beta);
            }
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let a = alpha * self.vals[k];
                if a == 0.0 {
                    continue;
                }
                let j = self.cols[k];
                let src = &x[j * width..(j + 1) * width];
                for (o, s) in row.iter_mut().zip(src) {
                    *o += a * s;
                }
            }
        }
    }

    fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.dim, self.dim));
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[[i, self.cols[k]]] += self.vals[k];
            }
        }
        m
    }
}

/// Combinatorial Laplacian `L = D - A` of a weighted graph.
#[derive(Debug)]
pub struct LaplacianOperator {
    csr: Csr,
    lambda_max: OnceLock<f64>,
}

/// Builds `L = D - A` with `D_ii = sum_j A_ij`.
pub fn build_laplacian(g: &WeightedGraph) -> LaplacianOperator {
    let n = g.num_vertices();
    let adj = g.neighbors();
    let deg = g.degrees();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(n + 2 * g.num_edges());
    let mut vals = Vec::with_capacity(n + 2 * g.num_edges());
    row_ptr.push(0);
    for i in 0..n {
        let mut diag_done = false;
        for &(j, w) in &adj[i] {
            if !diag_done && j > i {
                cols.push(i);
                vals.push(deg[i]);
                diag_done = true;
            }
            cols.push(j);
            vals.push(-w);
        }
        if !diag_done {
            cols.push(i);
            vals.push(deg[i]);
        }
        row_ptr.push(cols.len());
    }
    LaplacianOperator {
        csr: Csr {
            dim: n,
            row_ptr,
            cols,
            vals,
        },
        lambda_max: OnceLock::new(),
    }
}

impl LaplacianOperator {
    pub fn dim(&self) -> usize {
        self.csr.dim
    }

    /// Stored non-zero pattern (including explicit diagonal entries).
    pub fn nnz(&self) -> usize {
        self.csr.vals.len()
    }

    pub fn is_zero(&self) -> bool {
        self.csr.vals.iter().all(|&v| v == 0.0)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.csr.matvec(x, &mut y);
        y
    }

    /// Row `i` as `(column, value)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.csr.row_ptr[i]..self.csr.row_ptr[i + 1];
        r.map(move |k| (self.csr.cols[k], self.csr.vals[k]))
    }

    pub fn to_dense(&self) -> Array2<f64> {
        self.csr.to_dense()
    }

    /// Largest eigenvalue by power iteration, cached after the first call.
    ///
    /// Iterates until the Rayleigh quotient changes by less than `1e-9`
    /// relative, capped at 10 000 iterations.
    pub fn estimate_lambda_max(&self) -> Result<f64> {
        if let Some(&l) = self.lambda_max.get() {
            return Ok(l);
        }
        if self.is_zero() {
            return Err(Error::ZeroOperator);
        }
        let l = self.power_iteration();
        Ok(*self.lambda_max.get_or_init(|| l))
    }

    /// Cached estimate, if one has been computed.
    pub fn cached_lambda_max(&self) -> Option<f64> {
        self.lambda_max.get().copied()
    }

    fn power_iteration(&self) -> f64 {
        let n = self.dim();
        let mut rng = SeededRng::new(POWER_START_SEED);
        let mut v: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        normalize(&mut v);
        let mut w = vec![0.0; n];
        let mut rq_prev = f64::NAN;
        let mut rq = 0.0;
        for _ in 0..POWER_MAX_ITERS {
            self.csr.matvec(&v, &mut w);
            rq = dot(&v, &w);
            let norm = dot(&w, &w).sqrt();
            if norm == 0.0 {
                // Start vector landed in the null space; restart from a fresh draw.
                v = (0..n).map(|_| rng.normal()).collect();
                normalize(&mut v);
                continue;
            }
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / norm;
            }
            if (rq - rq_prev).abs() <= POWER_TOL * rq.abs().max(1e-300) {
                break;
            }
            rq_prev = rq;
        }
        rq
    }

    /// `L~ = 2 L / lambda_max - I`, estimating `lambda_max` if needed.
    pub fn rescaled(&self) -> Result<ScaledLaplacian> {
        let lmax = self.estimate_lambda_max()?;
        let mut csr = self.csr.clone();
        for i in 0..csr.dim {
            for k in csr.row_ptr[i]..csr.row_ptr[i + 1] {
                csr.vals[k] *= 2.0 / lmax;
                if csr.cols[k] == i {
                    csr.vals[k] -= 1.0;
                }
            }
        }
        Ok(ScaledLaplacian {
            csr,
            lambda_max: lmax,
        })
    }
}

/// Rescaled Laplacian with spectrum mapped into `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct ScaledLaplacian {
    csr: Csr,
    lambda_max: f64,
}

impl ScaledLaplacian {
    pub fn dim(&self) -> usize {
        self.csr.dim
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// `out = alpha * L~ * x + beta * out` on a row-major `dim x width` block.
    pub fn apply_block(&self, x: &[f64], width: usize, alpha: f64, beta: f64, out: &mut [f64]) {
        self.csr.spmm_into(x, width, alpha, beta, out);
    }

    pub fn to_dense(&self) -> Array2<f64> {
        self.csr.to_dense()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}
