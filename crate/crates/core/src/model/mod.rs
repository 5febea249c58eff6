//! Feature-level attention, Bi-LSTM encoder, CRF and softmax heads.

mod checkpoint;
pub mod crf;
mod network;
mod train;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use network::{
    argmax, BridgeModel, Built, HeadKind, LossKind, ModelConfig, ModelDims, Prediction,
};
pub use train::{class_weights, evaluate_f1, predict_all, train, Sample, TrainConfig, TrainReport};
