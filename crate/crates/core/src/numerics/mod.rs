//! Dense `f64` matrices, a reverse-mode computation graph, parameter
//! initialisation and the Adam optimiser.

pub mod gradcheck;
mod graph;
mod init;
mod optim;
pub mod seed;
mod tensor;

pub use graph::{
    focal_value, log_sum_exp_slice, sigmoid, softmax, softmax_in_place, Axis, Gradients, Graph,
    NamedTensor, NodeId, ParamId, ParamSet, LOG_EPS,
};
pub use init::{glorot_uniform, init_params};
pub use optim::{Adam, AdamConfig};
pub use tensor::Tensor2;
