//! Model files: little-endian `f64` parameters plus a JSON header next to
//! them (`model.bin` + `model.bin.json`).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::net::{DenoiserConfig, TinyDenoiser};
use super::DiffusionError;

pub const MODEL_FORMAT: &str = "wiredepth-denoiser";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub format: String,
    pub version: u32,
    pub config: DenoiserConfig,
    pub param_count: usize,
    /// Number of diffusion steps the model was trained with.
    pub schedule_steps: usize,
}

pub fn header_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn save_model(path: &Path, net: &TinyDenoiser, schedule_steps: usize) -> Result<(), DiffusionError> {
    let header = ModelHeader {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        config: net.config().clone(),
        param_count: net.param_count(),
        schedule_steps,
    };
    let mut bytes = Vec::with_capacity(8 * net.param_count());
    for p in net.params() {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    fs::write(path, bytes)?;
    let json = serde_json::to_string_pretty(&header).map_err(|e| DiffusionError::Model(e.to_string()))?;
    fs::write(header_path(path), json)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<(TinyDenoiser, ModelHeader), DiffusionError> {
    let json = fs::read_to_string(header_path(path))?;
    let header: ModelHeader = serde_json::from_str(&json).map_err(|e| DiffusionError::Model(e.to_string()))?;
    if header.format != MODEL_FORMAT || header.version != MODEL_VERSION {
        return Err(DiffusionError::Model(format!(
            "unsupported model {} v{}",
            header.format, header.version
        )));
    }
    let bytes = fs::read(path)?;
    if bytes.len() != 8 * header.param_count {
        return Err(DiffusionError::Model(format!(
            "expected {} bytes of parameters, found {}",
            8 * header.param_count,
            bytes.len()
        )));
    }
    let params = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let net = TinyDenoiser::from_params(header.config.clone(), params)?;
    Ok((net, header))
}
