//! Model checkpoints as a single JSON document.
//!
//! ```json
//! { "format": "graphrel-checkpoint", "version": 1,
//!   "tensors": [ { "name": "conv0.theta", "shape": [10, 1, 32], "values": [...] } ] }
//! ```
//!
//! Values are written with shortest round-trip formatting, so every `f64`
//! reads back bit-identically.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const FORMAT: &str = "graphrel-checkpoint";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn new(tensors: Vec<NamedTensor>) -> Self {
        Checkpoint {
            format: FORMAT.to_string(),
            version: VERSION,
            tensors,
        }
    }

    pub fn get(&self, name: &str) -> Option<&NamedTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if ck.format != FORMAT || ck.version != VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format {} v{}",
                ck.format, ck.version
            )));
        }
        for t in &ck.tensors {
            if t.shape.iter().product::<usize>() != t.values.len() {
                return Err(Error::Checkpoint(format!(
                    "tensor `{}` has {} values for shape {:?}",
                    t.name,
                    t.values.len(),
                    t.shape
                )));
            }
        }
        Ok(ck)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
