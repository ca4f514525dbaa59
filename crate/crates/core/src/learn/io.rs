use std::path::Path;

use serde::{Deserialize, Serialize};

use super::arch::Architecture;
use super::net::{LayerParams, NetworkParams};
use crate::container;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SPNN";
pub const PARAMS_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    architecture: Architecture,
    seed: u64,
    /// (weight count, bias count) per layer.
    tensors: Vec<(usize, usize)>,
}

pub fn params_to_bytes(params: &NetworkParams<f32>) -> Result<Vec<u8>> {
    params.validate()?;
    let header = Header {
        architecture: params.architecture.clone(),
        seed: params.seed,
        tensors: params.layers.iter().map(|l| (l.weights.len(), l.bias.len())).collect(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
    let mut payload = Vec::with_capacity(4 * params.parameter_count());
    for l in &params.layers {
        for v in l.weights.iter().chain(&l.bias) {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(container::encode(MAGIC, PARAMS_VERSION, &json, &payload))
}

pub fn params_from_bytes(bytes: &[u8]) -> Result<NetworkParams<f32>> {
    let (h, payload) = container::decode(bytes, MAGIC, PARAMS_VERSION)?;
    let header: Header = serde_json::from_slice(h).map_err(|e| Error::Format(format!("params header: {e}")))?;
    let total: usize = header.tensors.iter().map(|(w, b)| w + b).sum();
    if payload.len() != 4 * total {
        return Err(Error::Corruption(format!(
            "payload holds {} bytes, header describes {}",
            payload.len(),
            4 * total
        )));
    }
    let mut vals = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()));
    let layers = header
        .tensors
        .iter()
        .map(|&(w, b)| LayerParams {
            weights: vals.by_ref().take(w).collect(),
            bias: vals.by_ref().take(b).collect(),
        })
        .collect();
    let params = NetworkParams {
        architecture: header.architecture,
        seed: header.seed,
        layers,
    };
    params.validate()?;
    Ok(params)
}

pub fn save_params(params: &NetworkParams<f32>, path: &Path) -> Result<()> {
    std::fs::write(path, params_to_bytes(params)?)?;
    Ok(())
}

pub fn load_params(path: &Path) -> Result<NetworkParams<f32>> {
    params_from_bytes(&std::fs::read(path)?)
}

/// Loads parameters that must match `expected`.
pub fn load_params_into(path: &Path, expected: &Architecture) -> Result<NetworkParams<f32>> {
    let p = load_params(path)?;
    if &p.architecture != expected {
        return Err(Error::Architecture(
            "stored architecture differs from the requested one".into(),
        ));
    }
    Ok(p)
}
