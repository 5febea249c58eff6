//! Bridging word-level cognitive signals (eye-tracking, EEG) to
//! linguistic features with a feature-level attention network.

pub mod datamodel;
mod digest;
pub mod error;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod selection;
pub mod synth;
pub mod tasks;

pub use digest::sha256_hex;

pub use error::{Error, Result};
