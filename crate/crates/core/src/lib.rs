//! Theme-aware Chinese lyrics generation, end to end and from scratch:
//! character-level corpus preparation, LDA theme extraction by collapsed
//! Gibbs sampling, skip-gram embedding pretraining, a multi-channel Bi-LSTM
//! encoder with an attention LSTM decoder trained by AdaDelta, and
//! line-by-line generation with reversed-target rhyme handling.
//!
//! All numerics are hand-written in `f64` with analytic gradients; the
//! `gradcheck` module verifies every backward pass against central finite
//! differences. Batch work parallelizes with rayon behind the `parallel`
//! feature (on by default) and falls back to sequential execution without
//! it; both paths produce bit-identical results.

pub mod corpus;
pub mod embed;
pub mod error;
pub mod flops;
pub mod generate;
pub mod gradcheck;
pub mod kernels;
pub mod lda;
pub mod model;
pub mod tensor;
pub mod util;

pub use error::{Error, Result};
pub use tensor::Tensor;
