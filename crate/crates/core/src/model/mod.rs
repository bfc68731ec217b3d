//! The multi-channel seq2seq model: parameters, forward/backward, AdaDelta
//! training, and checkpointing.

mod adadelta;
mod checkpoint;
mod loss;
mod net;
mod params;
mod train;

pub use adadelta::{adadelta_step, adadelta_update, AdaDeltaConfig, AdaDeltaState};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, OptimizerState};
pub use loss::{forward_loss, forward_loss_serial};
pub use net::{
    decode_step, encode, example_loss, example_loss_and_grads, init_decoder, DecoderState,
    EncodeCache, ExampleLoss, StepCache,
};
pub use params::{init_params, AttentionVariant, ModelConfig, ModelParams};
pub use train::{train, train_with, Dataset, EpochReport, TrainConfig, TrainOutcome};
