//! From-scratch neural-network building blocks: tensors, a seeded RNG
//! stream, differentiable layer operations with hand-derived gradients,
//! and LSTM/GRU recurrent layers with backpropagation through time.

pub mod ops;
pub mod recurrent;
pub mod rng;
pub mod tensor;

pub use ops::{
    conv1d, conv1d_backward, dense, dense_backward, dropout, dropout_backward, flatten_concat,
    flatten_concat_backward, init_params, relu, relu_backward, DropoutMask, Mode,
};
pub use recurrent::{
    gru_cell, gru_layer, gru_layer_backward, lstm_cell, lstm_layer, lstm_layer_backward, GruParams,
    GruTape, LstmParams, LstmTape, RecurrentState,
};
pub use rng::RngStream;
pub use tensor::{Parameter, Tensor};
