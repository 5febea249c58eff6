use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::BridgeModel;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Saved model with the fingerprint of the split its inputs were
/// normalized on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub norm_fingerprint: Option<String>,
    pub model: BridgeModel,
}

impl Checkpoint {
    pub fn new(model: BridgeModel, norm_fingerprint: Option<String>) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            norm_fingerprint,
            model,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ck: Checkpoint = serde_json::from_str(&text)?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Invalid(format!(
                "checkpoint version {} (expected {CHECKPOINT_VERSION})",
                ck.version
            )));
        }
        Ok(ck)
    }
}
