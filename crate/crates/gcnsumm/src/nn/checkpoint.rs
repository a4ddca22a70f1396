//! Checkpoint file format: a versioned JSON document holding named parameter
//! tensors, normalization running statistics, and optional optimizer state.
//! Keys are sorted, so identical states serialize to identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::matrix::Matrix;
use super::NnError;

pub const CHECKPOINT_FORMAT: &str = "gcnsumm-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AdamCheckpoint {
    pub learning_rate: f64,
    pub timestep: usize,
    pub first_moment: BTreeMap<String, Matrix>,
    pub second_moment: BTreeMap<String, Matrix>,
}

impl AdamCheckpoint {
    pub fn from_state(state: &AdamState) -> Self {
        AdamCheckpoint {
            learning_rate: state.learning_rate,
            timestep: state.timestep,
            first_moment: state.first_moment.clone().into_iter().collect(),
            second_moment: state.second_moment.clone().into_iter().collect(),
        }
    }

    pub fn into_state(self) -> AdamState {
        let mut state = AdamState::new(self.learning_rate);
        state.timestep = self.timestep;
        state.first_moment = self.first_moment.into_iter().collect();
        state.second_moment = self.second_moment.into_iter().collect();
        state
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub variant: String,
    pub config: serde_json::Value,
    pub params: BTreeMap<String, Matrix>,
    pub norm_running_mean: Matrix,
    pub norm_running_var: Matrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adam: Option<AdamCheckpoint>,
    /// Pipeline metadata (graph settings and the like); opaque to this layer.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serialization")
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        fs::write(path, self.to_json()).map_err(|e| NnError::Io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self, NnError> {
        let text =
            fs::read_to_string(path).map_err(|e| NnError::Io(path.display().to_string(), e))?;
        let ckpt: Checkpoint = serde_json::from_str(&text)
            .map_err(|e| NnError::BadCheckpoint(format!("{}: {e}", path.display())))?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(NnError::BadCheckpoint(format!(
                "unexpected format marker {:?}",
                ckpt.format
            )));
        }
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(NnError::BadCheckpoint(format!(
                "unsupported version {}",
                ckpt.version
            )));
        }
        Ok(ckpt)
    }
}
