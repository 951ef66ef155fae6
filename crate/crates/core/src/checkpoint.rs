//! Network checkpoints: one JSON manifest line, then a dcmx block per weight
//! matrix and per bias row vector, layer by layer (`W_1, b_1, W_2, b_2, ...`).
//! Values pass through `f32` like every dcmx payload.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{decode_dcmx_prefix, encode_dcmx};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::{Activations, NetworkParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub dims: Vec<usize>,
    pub activations: Activations,
    pub epoch: usize,
}

pub fn encode_checkpoint(params: &NetworkParams, epoch: usize) -> Vec<u8> {
    let header = CheckpointHeader {
        dims: params.dims().to_vec(),
        activations: params.activations(),
        epoch,
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    for (w, b) in params.weights.iter().zip(&params.biases) {
        out.extend(encode_dcmx(w));
        out.extend(encode_dcmx(&Matrix::row_vector(b)));
    }
    out
}

pub fn decode_checkpoint(bytes: &[u8], path: &Path) -> Result<(NetworkParams, usize)> {
    let newline = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| Error::ParseBinary {
        path: path.to_path_buf(),
        offset: 0,
        message: "missing manifest line".into(),
    })?;
    let header: CheckpointHeader = serde_json::from_slice(&bytes[..newline]).map_err(|e| Error::ParseBinary {
        path: path.to_path_buf(),
        offset: 0,
        message: format!("bad manifest: {e}"),
    })?;
    let mut offset = newline + 1;
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for _ in 1..header.dims.len() {
        let (w, used) = decode_dcmx_prefix(&bytes[offset..], path)?;
        offset += used;
        let (b, used) = decode_dcmx_prefix(&bytes[offset..], path)?;
        offset += used;
        weights.push(w);
        biases.push(b.into_vec());
    }
    if offset != bytes.len() {
        return Err(Error::ParseBinary {
            path: path.to_path_buf(),
            offset,
            message: "trailing bytes after the last layer".into(),
        });
    }
    let params = NetworkParams::from_parts(header.dims, weights, biases, header.activations)?;
    Ok((params, header.epoch))
}

pub fn save_checkpoint(path: &Path, params: &NetworkParams, epoch: usize) -> Result<()> {
    fs::write(path, encode_checkpoint(params, epoch)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(NetworkParams, usize)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes, path)
}
