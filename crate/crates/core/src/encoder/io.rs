//! Binary model format.
//!
//! ```text
//! "TSE1"                 4 bytes
//! version                u32 LE (= 1)
//! config                 7 × u32 LE: in_channels, channels, depth,
//!                        pre_pool_channels, repr_dim, kernel_size,
//!                        leaky_slope in parts per million
//! parameters             f64 LE arrays in `EncoderParams::params` order
//! ```

use std::fs;
use std::path::Path;

use super::{build_encoder, EncoderConfig, EncoderParams};
use crate::error::{Error, ModelError, Result};

pub const MODEL_MAGIC: [u8; 4] = *b"TSE1";
pub const MODEL_VERSION: u32 = 1;

const HEADER_LEN: usize = 4 + 4 + 7 * 4;
const SLOPE_SCALE: f64 = 1e6;

pub fn write_model(params: &EncoderParams) -> Vec<u8> {
    let cfg = &params.config;
    let mut out = Vec::with_capacity(HEADER_LEN + params.param_count() * 8);
    out.extend_from_slice(&MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    let slope_ppm = (cfg.leaky_slope * SLOPE_SCALE).round() as u32;
    for field in [
        cfg.in_channels as u32,
        cfg.channels as u32,
        cfg.depth as u32,
        cfg.pre_pool_channels as u32,
        cfg.repr_dim as u32,
        cfg.kernel_size as u32,
        slope_ppm,
    ] {
        out.extend_from_slice(&field.to_le_bytes());
    }
    for p in params.params() {
        for v in &p.value {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn read_model(bytes: &[u8]) -> Result<EncoderParams> {
    let truncated = |expected| ModelError::Truncated {
        expected,
        found: bytes.len(),
    };
    if bytes.len() < 4 {
        return Err(truncated(HEADER_LEN).into());
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if magic != MODEL_MAGIC {
        return Err(ModelError::BadMagic(magic).into());
    }
    if bytes.len() < HEADER_LEN {
        return Err(truncated(HEADER_LEN).into());
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().expect("4 bytes"));
    let version = word(0);
    if version != MODEL_VERSION {
        return Err(ModelError::VersionMismatch(version).into());
    }
    let config = EncoderConfig {
        in_channels: word(1) as usize,
        channels: word(2) as usize,
        depth: word(3) as usize,
        pre_pool_channels: word(4) as usize,
        repr_dim: word(5) as usize,
        kernel_size: word(6) as usize,
        leaky_slope: word(7) as f64 / SLOPE_SCALE,
    };
    config
        .validate()
        .map_err(|e| ModelError::InvalidConfig(e.to_string()))?;
    let mut params = build_encoder(config, 0)?;
    let expected = HEADER_LEN + params.param_count() * 8;
    if bytes.len() < expected {
        return Err(truncated(expected).into());
    }
    if bytes.len() > expected {
        return Err(ModelError::TrailingData(bytes.len() - expected).into());
    }
    let mut values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    for p in params.params_mut() {
        for v in &mut p.value {
            *v = values.next().expect("length checked above");
        }
        p.zero_grad();
    }
    Ok(params)
}

pub fn save_model(params: &EncoderParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_model(params)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<EncoderParams> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_model(&bytes)
}
