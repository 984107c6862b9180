use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::numerics::ParamTensor;

/// Batch normalisation over the columns of a `P x features` matrix.
///
/// Training mode normalises with the batch mean and biased variance and
/// folds them into the running statistics as
/// `running = momentum * running + (1 - momentum) * batch`
/// (the running variance uses the unbiased batch estimate). Inference mode
/// uses the running statistics only.
#[derive(Debug, Clone)]
pub struct BatchNormLayer {
    pub gamma: ParamTensor,
    pub beta: ParamTensor,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub eps: f64,
}

#[derive(Debug)]
pub struct BatchNormCache {
    x_hat: Array2<f64>,
    inv_std: Array1<f64>,
}

impl BatchNormLayer {
    pub const DEFAULT_MOMENTUM: f64 = 0.9;
    pub const DEFAULT_EPS: f64 = 1e-5;

    pub fn new(features: usize, momentum: f64, eps: f64) -> Self {
        BatchNormLayer {
            gamma: ParamTensor::filled(&[features], 1.0),
            beta: ParamTensor::zeros(&[features]),
            running_mean: vec![0.0; features],
            running_var: vec![1.0; features],
            momentum,
            eps,
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.len()
    }

    fn check(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.features() {
            return Err(Error::dims("batch_norm features", self.features(), x.ncols()));
        }
        Ok(())
    }

    pub fn forward_train(&mut self, x: ArrayView2<f64>) -> Result<(Array2<f64>, BatchNormCache)> {
        self.check(&x)?;
        let p = x.nrows();
        if p < 2 {
            return Err(Error::BatchTooSmall(p));
        }
        let mean = x.mean_axis(Axis(0)).expect("non-empty");
        let centered = &x - &mean;
        let var = centered.mapv(|v| v * v).mean_axis(Axis(0)).expect("non-empty");
        let inv_std = var.mapv(|v| 1.0 / (v + self.eps).sqrt());
        let x_hat = &centered * &inv_std;
        let y = &x_hat * &ArrayView2::from_shape((1, self.features()), &self.gamma.value).unwrap()
            + &ArrayView2::from_shape((1, self.features()), &self.beta.value).unwrap();

        let unbias = p as f64 / (p as f64 - 1.0);
        let m = self.momentum;
        for j in 0..self.features() {
            self.running_mean[j] = m * self.running_mean[j] + (1.0 - m) * mean[j];
            self.running_var[j] = m * self.running_var[j] + (1.0 - m) * var[j] * unbias;
        }
        Ok((y, BatchNormCache { x_hat, inv_std }))
    }

    pub fn forward_infer(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(&x)?;
        let mut y = x.to_owned();
        for mut row in y.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                let inv = 1.0 / (self.running_var[j] + self.eps).sqrt();
                *v = (*v - self.running_mean[j]) * inv * self.gamma.value[j] + self.beta.value[j];
            }
        }
        Ok(y)
    }

    /// Standard batch-norm backward:
    /// `dx = gamma * inv_std / P * (P dy - sum(dy) - x_hat * sum(dy * x_hat))`.
    pub fn backward(&mut self, cache: BatchNormCache, dy: ArrayView2<f64>) -> Result<Array2<f64>> {
        if dy.dim() != cache.x_hat.dim() {
            return Err(Error::dims("batch_norm upstream gradient", cache.x_hat.len(), dy.len()));
        }
        let p = dy.nrows() as f64;
        let sum_dy = dy.sum_axis(Axis(0));
        let sum_dy_xhat = (&dy * &cache.x_hat).sum_axis(Axis(0));
        for j in 0..self.features() {
            self.gamma.grad[j] += sum_dy_xhat[j];
            self.beta.grad[j] += sum_dy[j];
        }
        let mut dx = Array2::zeros(dy.raw_dim());
        for ((mut dxr, dyr), xr) in dx
            .rows_mut()
            .into_iter()
            .zip(dy.rows())
            .zip(cache.x_hat.rows())
        {
            for j in 0..dyr.len() {
                let scale = self.gamma.value[j] * cache.inv_std[j] / p;
                dxr[j] = scale * (p * dyr[j] - sum_dy[j] - xr[j] * sum_dy_xhat[j]);
            }
        }
        Ok(dx)
    }
}
