//! Sequence primitives: Elman RNN, LSTM with backpropagation through time,
//! multi-head self-attention and sinusoidal positional encoding.

mod attention;
mod lstm;
mod posenc;
mod rnn;

pub use attention::{
    attention_weights, received_attention, AttentionParams, HeadParams, MultiHeadAttention,
};
pub use lstm::{lstm_step, Lstm, LstmCellParams, LstmState};
pub use posenc::PositionalEncoding;
pub use rnn::{rnn_step, Rnn, RnnCellParams};
