//! Attention-based BiLSTM classifier with hand-written backpropagation.
//!
//! Each token is the concatenation of a word vector and the final states of
//! a character BiLSTM. A shared BiLSTM encoder and attention pooling turn the
//! section, previous, current and next sentences into four vectors, which are
//! fused with the eight handcrafted features and classified by an MLP.

mod attention;
mod gradcheck;
mod lstm;
mod model;
mod reference;
mod tensor;
mod train;

pub use attention::{
    attention_backward, attention_pool, score, score_cos, score_dp, score_sdp, AttentionVariant, Pooled,
};
pub use gradcheck::{grad_check, grad_check_with, relative_error, GradCheckOptions, GradCheckReport, GroupCheck};
pub use lstm::{
    bilstm_backward, bilstm_encode, bilstm_forward, lstm_backward, lstm_forward, lstm_step, BiLstmCache,
    EncoderState, Gate, LstmCache, LstmParams,
};
pub use model::{
    batch_gradient, char_encode, cross_entropy, data_loss, embed_tokens, forward, forward_example, l2_penalty,
    loss, predict_examples, EncodedSeq, Example, NeuralConfig, NeuralModel, NeuralParams, Output,
    PARAM_GROUPS,
};
pub use tensor::{softmax, Tensor};
pub use train::{train, Adam, EpochRecord, History, TrainConfig};
