//! Forward and backward rules for the layers of the graph-convolution stack.
//!
//! Every layer follows the same pattern: `forward` takes `&self` and returns
//! the output plus a cache holding what the backward rule needs; `backward`
//! takes that cache and the upstream gradient, accumulates parameter
//! gradients into the layer's [`ParamTensor`](crate::numerics::ParamTensor)s,
//! and returns the gradient with respect to the input.

mod batchnorm;
mod cheb;
mod dense;
mod loss;
mod pool;

pub use batchnorm::{BatchNormCache, BatchNormLayer};
pub use cheb::{ChebCache, ChebConvLayer};
pub use dense::{relu, relu_backward, Activation, DenseCache, DenseLayer, Mlp, MlpCache};
pub use loss::{softmax, softmax_cross_entropy};
pub use pool::{avg_pool, avg_pool_backward};
