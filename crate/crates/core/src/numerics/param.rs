use ndarray::{ArrayView2, ArrayViewMut2};

use super::SeededRng;
use crate::error::{Error, Result};

/// A trainable tensor with its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor {
    shape: Vec<usize>,
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
}

impl ParamTensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        ParamTensor {
            shape: shape.to_vec(),
            value: vec![0.0; len],
            grad: vec![0.0; len],
        }
    }

    pub fn filled(shape: &[usize], v: f64) -> Self {
        let mut p = Self::zeros(shape);
        p.value.iter_mut().for_each(|x| *x = v);
        p
    }

    pub fn from_values(shape: &[usize], value: Vec<f64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if value.len() != len {
            return Err(Error::dims("ParamTensor::from_values", len, value.len()));
        }
        Ok(ParamTensor {
            shape: shape.to_vec(),
            grad: vec![0.0; len],
            value,
        })
    }

    /// Uniform in `±sqrt(6 / (fan_in + fan_out))`.
    pub fn glorot(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut SeededRng) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let mut p = Self::zeros(shape);
        p.value
            .iter_mut()
            .for_each(|v| *v = rng.uniform_range(-limit, limit));
        p
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    /// Value as a matrix, treating the last axis as columns.
    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        let cols = *self.shape.last().unwrap_or(&1);
        ArrayView2::from_shape((self.len() / cols.max(1), cols), &self.value)
            .expect("shape congruent")
    }

    pub fn grad_matrix_mut(&mut self) -> ArrayViewMut2<'_, f64> {
        let cols = *self.shape.last().unwrap_or(&1);
        let rows = self.grad.len() / cols.max(1);
        ArrayViewMut2::from_shape((rows, cols), &mut self.grad).expect("shape congruent")
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }

    pub fn grad_is_finite(&self) -> bool {
        self.grad.iter().all(|g| g.is_finite())
    }

    pub fn set_value(&mut self, value: &[f64]) -> Result<()> {
        if value.len() != self.value.len() {
            return Err(Error::dims("ParamTensor::set_value", self.value.len(), value.len()));
        }
        self.value.copy_from_slice(value);
        Ok(())
    }
}
