//! Hand-written forward/backward kernels. Everything here is pure: identical
//! inputs give bit-identical outputs, and all arithmetic is `f64`.

mod attention;
mod lstm;
mod ops;

pub use attention::{
    attn_scores, attn_scores_backward, attn_weights, context_vector, context_vector_backward,
    AttentionParams, AttnCache, EncoderStates, StateGrads,
};
pub use lstm::{
    bilstm_backward, bilstm_encode, lstm_step, lstm_step_backward, BiLstmCache, LstmCache,
    LstmParams,
};
pub use ops::{
    affine, affine_backward, relu, relu_backward, sigmoid, softmax, softmax_backward,
    softmax_xent, tanh_backward, tanh_vec,
};
