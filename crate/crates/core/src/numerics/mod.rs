//! Seeded randomness, parameter storage, optimisation and gradient checking.

mod adam;
mod checkpoint;
mod gradcheck;
mod param;
mod rng;

pub use adam::{adam_step, Adam, AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, NamedTensor};
pub use gradcheck::{grad_check, GradCheckReport};
pub use param::ParamTensor;
pub use rng::SeededRng;
