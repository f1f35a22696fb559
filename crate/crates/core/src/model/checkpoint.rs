//! Versioned text checkpoints.
//!
//! ```text
//! MLPCKPT v1
//! dims 110 64 32 4
//! <weights[0], row-major, space separated>
//! <biases[0]>
//! ...
//! # {"data_fingerprint":"...","seed":7,"epochs":150}
//! ```
//!
//! Values are written with 17 significant digits, which round-trips `f64`
//! (and `f32`) exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::{MlpParams, Sample};
use crate::error::{Error, Result};
use crate::io::{hex, write_atomic};
use crate::scalar::Scalar;

pub const CHECKPOINT_MAGIC: &str = "MLPCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub data_fingerprint: String,
    pub seed: u64,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T: Scalar> {
    pub format_version: u32,
    pub params: MlpParams<T>,
    pub provenance: Provenance,
}

fn bad(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Checkpoint {
        field: field.into(),
        message: message.into(),
    }
}

impl<T: Scalar> Checkpoint<T> {
    pub fn new(params: MlpParams<T>, provenance: Provenance) -> Self {
        Self {
            format_version: CHECKPOINT_VERSION,
            params,
            provenance,
        }
    }

    pub fn to_text(&self) -> Result<String> {
        let p = &self.params;
        let mut out = format!("{CHECKPOINT_MAGIC} v{}\n", self.format_version);
        out.push_str("dims");
        for d in p.dims() {
            out.push_str(&format!(" {d}"));
        }
        out.push('\n');
        for tensor in p.tensors() {
            let line: Vec<String> = tensor.iter().map(|v| format!("{:.16e}", v.as_f64())).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out.push_str("# ");
        out.push_str(&serde_json::to_string(&self.provenance)?);
        out.push('\n');
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("format_version", "empty file"))?;
        let version = header
            .strip_prefix(CHECKPOINT_MAGIC)
            .and_then(|r| r.trim().strip_prefix('v'))
            .ok_or_else(|| {
                bad(
                    "format_version",
                    format!("expected `{CHECKPOINT_MAGIC} v<N>`, got `{header}`"),
                )
            })?
            .parse::<u32>()
            .map_err(|e| bad("format_version", e.to_string()))?;
        if version != CHECKPOINT_VERSION {
            return Err(bad(
                "format_version",
                format!("unsupported version {version}, expected {CHECKPOINT_VERSION}"),
            ));
        }

        let dims_line = lines.next().ok_or_else(|| bad("dims", "missing dims line"))?;
        let dims: Vec<usize> = dims_line
            .strip_prefix("dims")
            .ok_or_else(|| bad("dims", format!("expected `dims ...`, got `{dims_line}`")))?
            .split_whitespace()
            .map(|d| d.parse().map_err(|_| bad("dims", format!("`{d}` is not a dimension"))))
            .collect::<Result<_>>()?;
        let mut shell = MlpParams::<T>::zeros(&dims).map_err(|e| bad("dims", e.to_string()))?;

        let names: Vec<String> = (0..shell.num_layers())
            .flat_map(|l| [format!("weights[{l}]"), format!("biases[{l}]")])
            .collect();
        for (tensor, name) in shell.tensors_mut().zip(&names) {
            let line = lines.next().ok_or_else(|| bad(name.as_str(), "missing line"))?;
            let values: Vec<T> = line
                .split_whitespace()
                .map(|v| {
                    v.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .map(T::of)
                        .ok_or_else(|| bad(name.as_str(), format!("`{v}` is not a finite number")))
                })
                .collect::<Result<_>>()?;
            if values.len() != tensor.len() {
                return Err(bad(
                    name.as_str(),
                    format!("{} values, expected {}", values.len(), tensor.len()),
                ));
            }
            *tensor = values;
        }

        let prov_line = lines
            .find(|l| !l.trim().is_empty())
            .ok_or_else(|| bad("provenance", "missing provenance block"))?;
        let json = prov_line
            .strip_prefix('#')
            .ok_or_else(|| bad("provenance", "expected a `# {...}` comment line"))?;
        let provenance: Provenance = serde_json::from_str(json.trim()).map_err(|e| bad("provenance", e.to_string()))?;
        Ok(Self::new(shell, provenance))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_text()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

pub fn save_checkpoint<T: Scalar>(params: &MlpParams<T>, provenance: Provenance, path: &Path) -> Result<()> {
    Checkpoint::new(params.clone(), provenance).save(path)
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<Checkpoint<T>> {
    Checkpoint::load(path)
}

/// SHA-256 prefix over labels and feature bit patterns, in order.
pub fn data_fingerprint<T: Scalar>(samples: &[Sample<T>]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for s in samples {
        h.update((s.label as u64).to_le_bytes());
        for v in &s.x {
            h.update(v.as_f64().to_bits().to_le_bytes());
        }
    }
    hex(&h.finalize()[..16])
}
