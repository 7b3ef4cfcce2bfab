//! GRU encoder-decoder with optional bilinear attention.
//!
//! The encoder is bidirectional; per-token states and final states of the two
//! directions are summed. The decoder starts from the encoder's final state,
//! or from a latent vector when used as a style generator.

mod model;
mod train;

pub use model::{
    max_decode_len, BoundModel, Condition, DecodeTrace, EncoderStates, LatentRep, Seq2Seq, Seq2SeqConfig,
};
pub use train::{sgd_epochs, sgd_epochs_with, train_from_latents, train_seq2seq, TrainConfig, TrainLog, Trainable};
