//! Relation reasoning over the coarse-vertex embeddings of the last
//! convolution layer.
//!
//! [`RelationHead`] scores a fixed list of vertex pairs, each with its own MLP
//! and a learnable attention scalar, and sums the results linearly.
//! [`VanillaRn`] is the shared-MLP formulation over all ordered pairs, kept
//! as a comparison model.

mod head;
mod selection;
mod vanilla;

pub use head::{RelationCache, RelationHead};
pub use selection::{select_top_k_edges, EdgeSelection};
pub use vanilla::{VanillaCache, VanillaRn};

use ndarray::{s, Array2, ArrayView3};

/// Concatenates the embeddings of objects `i` and `j` for every sample:
/// `P x 2m`.
pub(crate) fn pair_input(objects: &ArrayView3<f64>, i: usize, j: usize) -> Array2<f64> {
    let (p, _, m) = objects.dim();
    let mut out = Array2::zeros((p, 2 * m));
    out.slice_mut(s![.., ..m]).assign(&objects.slice(s![.., i, ..]));
    out.slice_mut(s![.., m..]).assign(&objects.slice(s![.., j, ..]));
    out
}
