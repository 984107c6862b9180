use std::sync::Arc;

use ndarray::{Array2, Array3, ArrayView3, Axis};

use crate::error::{Error, Result};
use crate::graph::ScaledLaplacian;
use crate::numerics::{ParamTensor, SeededRng};

/// Chebyshev spectral graph convolution.
///
/// For input channel `f` and output channel `o` the layer computes
/// `y_o = sum_f sum_k theta[k, f, o] T_k(L~) x_f (+ bias_o)`, with `T_k(L~) x`
/// built by the three-term recurrence `T_k = 2 L~ T_{k-1} - T_{k-2}`.
/// Only sparse products with `L~` are used.
#[derive(Debug, Clone)]
pub struct ChebConvLayer {
    pub order: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    /// Filter coefficients, shape `K x F_in x F_out`.
    pub theta: ParamTensor,
    pub bias: Option<ParamTensor>,
    laplacian: Arc<ScaledLaplacian>,
}

/// Stacked Chebyshev basis `[T_0 x, ..., T_{K-1} x]` laid out as
/// `(P * n) x (K * F_in)`.
#[derive(Debug)]
pub struct ChebCache {
    basis: Array2<f64>,
    samples: usize,
}

impl ChebConvLayer {
    pub fn new(
        laplacian: Arc<ScaledLaplacian>,
        order: usize,
        in_channels: usize,
        out_channels: usize,
        with_bias: bool,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("Chebyshev order K must be >= 1".into()));
        }
        let theta = ParamTensor::glorot(
            &[order, in_channels, out_channels],
            order * in_channels,
            out_channels,
            rng,
        );
        Ok(ChebConvLayer {
            order,
            in_channels,
            out_channels,
            theta,
            bias: with_bias.then(|| ParamTensor::zeros(&[out_channels])),
            laplacian,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.laplacian.dim()
    }

    pub fn laplacian(&self) -> &ScaledLaplacian {
        &self.laplacian
    }

    /// `x` is `P x n x F_in`; returns `P x n x F_out`.
    pub fn forward(&self, x: ArrayView3<f64>) -> Result<(Array3<f64>, ChebCache)> {
        let (p, n, fin) = x.dim();
        if n != self.num_vertices() {
            return Err(Error::dims("cheb_conv vertices", self.num_vertices(), n));
        }
        if fin != self.in_channels {
            return Err(Error::dims("cheb_conv input channels", self.in_channels, fin));
        }
        let width = p * fin;
        // Vertex-major block: row i holds every (sample, channel) value at vertex i.
        let x0 = x
            .permuted_axes([1, 0, 2])
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((n, width))
            .expect("contiguous");
        let terms = self.chebyshev_terms(x0);

        let kf = self.order * fin;
        let mut basis = Array2::<f64>::zeros((p * n, kf));
        {
            let dst = basis.as_slice_mut().expect("contiguous");
            for (k, t) in terms.iter().enumerate() {
                let src = t.as_slice().expect("contiguous");
                for i in 0..n {
                    for s in 0..p {
                        let from = i * width + s * fin;
                        let to = (s * n + i) * kf + k * fin;
                        dst[to..to + fin].copy_from_slice(&src[from..from + fin]);
                    }
                }
            }
        }

        let mut y = basis.dot(&self.theta_matrix());
        if let Some(b) = &self.bias {
            y += &ndarray::ArrayView1::from(&b.value);
        }
        let y = y
            .into_shape_with_order((p, n, self.out_channels))
            .expect("contiguous");
        Ok((y, ChebCache { basis, samples: p }))
    }

    pub fn infer(&self, x: ArrayView3<f64>) -> Result<Array3<f64>> {
        self.forward(x).map(|(y, _)| y)
    }

    fn theta_matrix(&self) -> ndarray::ArrayView2<'_, f64> {
        ndarray::ArrayView2::from_shape(
            (self.order * self.in_channels, self.out_channels),
            &self.theta.value,
        )
        .expect("theta shape")
    }

    fn chebyshev_terms(&self, x0: Array2<f64>) -> Vec<Array2<f64>> {
        let (n, width) = x0.dim();
        let mut terms = Vec::with_capacity(self.order);
        terms.push(x0);
        if self.order > 1 {
            let mut t1 = Array2::zeros((n, width));
            self.laplacian.apply_block(
                terms[0].as_slice().unwrap(),
                width,
                1.0,
                0.0,
                t1.as_slice_mut().unwrap(),
            );
            terms.push(t1);
        }
        for k in 2..self.order {
            let mut tk = terms[k - 2].mapv(|v| -v);
            self.laplacian.apply_block(
                terms[k - 1].as_slice().unwrap(),
                width,
                2.0,
                1.0,
                tk.as_slice_mut().unwrap(),
            );
            terms.push(tk);
        }
        terms
    }

    /// Accumulates `theta`/`bias` gradients and returns `dL/dx`.
    ///
    /// Backward rule: `dtheta = B^T dY` over the stacked basis `B`; the input
    /// gradient runs the recurrence in reverse, using that `L~` is symmetric:
    /// for `k >= 2`, `A_{k-1} += 2 L~ A_k` and `A_{k-2} -= A_k`, then
    /// `A_0 += L~ A_1`, where `A_k` starts as the gradient of term `k`.
    pub fn backward(&mut self, cache: ChebCache, dy: ArrayView3<f64>) -> Result<Array3<f64>> {
        let p = cache.samples;
        let n = self.num_vertices();
        let fin = self.in_channels;
        let fout = self.out_channels;
        if dy.dim() != (p, n, fout) {
            return Err(Error::dims("cheb_conv upstream gradient", p * n * fout, dy.len()));
        }
        let dy2 = dy
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((p * n, fout))
            .expect("contiguous");

        let dtheta = cache.basis.t().dot(&dy2);
        for (g, d) in self.theta.grad.iter_mut().zip(dtheta.iter()) {
            *g += d;
        }
        if let Some(b) = &mut self.bias {
            for (g, d) in b.grad.iter_mut().zip(dy2.sum_axis(Axis(0)).iter()) {
                *g += d;
            }
        }

        let dbasis = dy2.dot(&self.theta_matrix().t());
        let width = p * fin;
        let src = dbasis.as_slice().expect("contiguous");
        let kf = self.order * fin;
        let mut adj: Vec<Array2<f64>> = (0..self.order)
            .map(|k| {
                let mut a = Array2::<f64>::zeros((n, width));
                let dst = a.as_slice_mut().expect("contiguous");
                for i in 0..n {
                    for s in 0..p {
                        let to = i * width + s * fin;
                        let from = (s * n + i) * kf + k * fin;
                        dst[to..to + fin].copy_from_slice(&src[from..from + fin]);
                    }
                }
                a
            })
            .collect();

        for k in (2..self.order).rev() {
            let ak = std::mem::take(&mut adj[k]);
            self.laplacian.apply_block(
                ak.as_slice().unwrap(),
                width,
                2.0,
                1.0,
                adj[k - 1].as_slice_mut().unwrap(),
            );
            adj[k - 2] -= &ak;
        }
        if self.order > 1 {
            let a1 = std::mem::take(&mut adj[1]);
            self.laplacian.apply_block(
                a1.as_slice().unwrap(),
                width,
                1.0,
                1.0,
                adj[0].as_slice_mut().unwrap(),
            );
        }
        let a0 = std::mem::take(&mut adj[0]);
        let dx = a0
            .into_shape_with_order((n, p, fin))
            .expect("contiguous")
            .permuted_axes([1, 0, 2])
            .as_standard_layout()
            .into_owned();
        Ok(dx)
    }
}
