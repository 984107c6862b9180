use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ParamTensor, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    None,
    Relu,
}

pub fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

/// Gradient of ReLU given its *output*: passes `dy` where the output is positive.
pub fn relu_backward(out: &Array2<f64>, dy: &mut Array2<f64>) {
    dy.zip_mut_with(out, |d, &o| {
        if o <= 0.0 {
            *d = 0.0
        }
    });
}

/// Fully connected layer `y = act(x W + b)`.
#[derive(Debug, Clone)]
pub struct DenseLayer {
    /// Shape `in x out`.
    pub weight: ParamTensor,
    pub bias: ParamTensor,
    pub activation: Activation,
}

#[derive(Debug)]
pub struct DenseCache {
    input: Array2<f64>,
    output: Array2<f64>,
}

impl DenseLayer {
    pub fn new(inputs: usize, outputs: usize, activation: Activation, rng: &mut SeededRng) -> Self {
        DenseLayer {
            weight: ParamTensor::glorot(&[inputs, outputs], inputs, outputs, rng),
            bias: ParamTensor::zeros(&[outputs]),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn outputs(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn infer(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.inputs() {
            return Err(Error::dims("dense inputs", self.inputs(), x.ncols()));
        }
        let mut y = x.dot(&self.weight.matrix());
        y += &ArrayView1::from(&self.bias.value);
        if self.activation == Activation::Relu {
            y.mapv_inplace(|v| v.max(0.0));
        }
        Ok(y)
    }

    pub fn forward(&self, x: Array2<f64>) -> Result<(Array2<f64>, DenseCache)> {
        let y = self.infer(x.view())?;
        Ok((
            y.clone(),
            DenseCache {
                input: x,
                output: y,
            },
        ))
    }

    pub fn backward(&mut self, cache: DenseCache, mut dy: Array2<f64>) -> Result<Array2<f64>> {
        if dy.dim() != cache.output.dim() {
            return Err(Error::dims("dense upstream gradient", cache.output.len(), dy.len()));
        }
        if self.activation == Activation::Relu {
            relu_backward(&cache.output, &mut dy);
        }
        let dw = cache.input.t().dot(&dy);
        self.weight.grad_matrix_mut().zip_mut_with(&dw, |g, d| *g += d);
        for (g, d) in self.bias.grad.iter_mut().zip(dy.sum_axis(Axis(0))) {
            *g += d;
        }
        Ok(dy.dot(&self.weight.matrix().t()))
    }

    pub fn params_mut(&mut self) -> [&mut ParamTensor; 2] {
        [&mut self.weight, &mut self.bias]
    }
}

/// Stack of dense layers: ReLU on hidden layers, `output_activation` on the last.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
}

#[derive(Debug)]
pub struct MlpCache(Vec<DenseCache>);

impl Mlp {
    pub fn new(
        inputs: usize,
        hidden: &[usize],
        outputs: usize,
        output_activation: Activation,
        rng: &mut SeededRng,
    ) -> Self {
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut width = inputs;
        for &h in hidden {
            layers.push(DenseLayer::new(width, h, Activation::Relu, rng));
            width = h;
        }
        layers.push(DenseLayer::new(width, outputs, output_activation, rng));
        Mlp { layers }
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::outputs)
    }

    pub fn infer(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let mut h = self.layers[0].infer(x)?;
        for layer in &self.layers[1..] {
            h = layer.infer(h.view())?;
        }
        Ok(h)
    }

    pub fn forward(&self, x: Array2<f64>) -> Result<(Array2<f64>, MlpCache)> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = x;
        for layer in &self.layers {
            let (y, c) = layer.forward(h)?;
            caches.push(c);
            h = y;
        }
        Ok((h, MlpCache(caches)))
    }

    pub fn backward(&mut self, cache: MlpCache, dy: Array2<f64>) -> Result<Array2<f64>> {
        let mut d = dy;
        for (layer, c) in self.layers.iter_mut().zip(cache.0).rev() {
            d = layer.backward(c, d)?;
        }
        Ok(d)
    }

    pub fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn params(&self) -> Vec<&ParamTensor> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::grad_check;
    use ndarray::array;

    fn identity(n: usize, act: Activation) -> DenseLayer {
        let mut l = DenseLayer::new(n, n, act, &mut SeededRng::new(0));
        l.weight.value = Array2::<f64>::eye(n).into_raw_vec_and_offset().0;
        l
    }

    #[test]
    fn identity_weights_pass_through() {
        let x = array![[1.5, -2.0], [0.0, 3.0]];
        assert_eq!(identity(2, Activation::None).infer(x.view()).unwrap(), x);
        let y = identity(2, Activation::Relu).infer(array![[-1.0, 2.0]].view()).unwrap();
        assert_eq!(y, array![[0.0, 2.0]]);
    }

    #[test]
    fn rejects_wrong_width() {
        let l = identity(2, Activation::None);
        assert!(l.infer(array![[1.0, 2.0, 3.0]].view()).is_err());
    }

    #[test]
    fn mlp_backward_matches_finite_differences() {
        let mut rng = SeededRng::new(12);
        let base = Mlp::new(4, &[6, 5], 3, Activation::None, &mut rng);
        let x = Array2::from_shape_fn((7, 4), |_| rng.normal());
        let w = Array2::from_shape_fn((7, 3), |_| rng.normal());
        let sizes: Vec<usize> = base.params().iter().map(|p| p.len()).collect();
        let mut point: Vec<f64> = base.params().iter().flat_map(|p| p.value.clone()).collect();
        point.extend(x.iter());
        let r = grad_check(
            &point,
            |v| {
                let mut mlp = base.clone();
                let mut off = 0;
                for (p, &s) in mlp.params_mut().into_iter().zip(&sizes) {
                    p.value.copy_from_slice(&v[off..off + s]);
                    off += s;
                }
                let xv = Array2::from_shape_vec((7, 4), v[off..].to_vec()).unwrap();
                let (y, cache) = mlp.forward(xv).unwrap();
                let loss = (&y * &w).sum();
                let dx = mlp.backward(cache, w.clone()).unwrap();
                let mut g: Vec<f64> = mlp.params().iter().flat_map(|p| p.grad.clone()).collect();
                g.extend(dx.iter());
                (loss, g)
            },
            1e-5,
        );
        assert!(r.max_rel_error < 1e-6, "{r:?}");
    }
}
