//! Binary parameter checkpoints.
//!
//! Layout (all integers `u32` and floats `f64`, little-endian):
//!
//! ```text
//! magic               8 bytes  "SIREN2CK"
//! version             u32      = 1
//! input_dim           u32
//! output_dim          u32
//! hidden_count        u32      H
//! hidden_widths       H x u32
//! omega0              f64
//! first_layer_scale   f64
//! input_scale         f64
//! first_layer_init    u32      0 = inverse-fan-in, 1 = hidden-law
//! parameters          f64 blocks in flattening order:
//!                     layer 1 weights (row-major, fan_out x fan_in), layer 1 biases, layer 2 ...
//! ```

use std::path::Path;

use super::{FirstLayerInit, NetworkConfig, Parameters};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SIREN2CK";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn encode_checkpoint(config: &NetworkConfig, params: &Parameters) -> Result<Vec<u8>> {
    params.check_shapes(config)?;
    let mut out = Vec::with_capacity(64 + 8 * config.num_params());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    let put_u32 = |out: &mut Vec<u8>, v: usize| out.extend_from_slice(&(v as u32).to_le_bytes());
    put_u32(&mut out, CHECKPOINT_VERSION as usize);
    put_u32(&mut out, config.input_dim);
    put_u32(&mut out, config.output_dim);
    put_u32(&mut out, config.hidden_widths.len());
    for &w in &config.hidden_widths {
        put_u32(&mut out, w);
    }
    for v in [config.omega0, config.first_layer_omega_scale, config.input_scale] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let tag = match config.first_layer_init {
        FirstLayerInit::InverseFanIn => 0,
        FirstLayerInit::HiddenLaw => 1,
    };
    put_u32(&mut out, tag);
    for block in params.blocks() {
        for v in block {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let s = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(s)
    }

    fn u32(&mut self) -> Option<usize> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()) as usize)
    }

    fn f64(&mut self) -> Option<f64> {
        self.take(8).map(|b| f64::from_le_bytes(b.try_into().unwrap()))
    }
}

/// Parses a checkpoint; `origin` only labels errors.
pub fn decode_checkpoint(bytes: &[u8], origin: &Path) -> Result<(NetworkConfig, Parameters)> {
    let truncated = || Error::malformed(origin, "truncated checkpoint");
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8).ok_or_else(truncated)? != CHECKPOINT_MAGIC {
        return Err(Error::malformed(origin, "bad checkpoint magic"));
    }
    let version = r.u32().ok_or_else(truncated)?;
    if version != CHECKPOINT_VERSION as usize {
        return Err(Error::UnsupportedFormat(format!("checkpoint version {version}")));
    }
    let input_dim = r.u32().ok_or_else(truncated)?;
    let output_dim = r.u32().ok_or_else(truncated)?;
    let hidden = r.u32().ok_or_else(truncated)?;
    if hidden > 1 << 16 {
        return Err(Error::malformed(origin, "implausible hidden layer count"));
    }
    let widths = (0..hidden).map(|_| r.u32()).collect::<Option<Vec<_>>>().ok_or_else(truncated)?;
    let omega0 = r.f64().ok_or_else(truncated)?;
    let first_layer_omega_scale = r.f64().ok_or_else(truncated)?;
    let input_scale = r.f64().ok_or_else(truncated)?;
    let first_layer_init = match r.u32().ok_or_else(truncated)? {
        0 => FirstLayerInit::InverseFanIn,
        1 => FirstLayerInit::HiddenLaw,
        t => return Err(Error::malformed(origin, format!("unknown first-layer init tag {t}"))),
    };
    let config = NetworkConfig {
        input_dim,
        hidden_widths: widths,
        output_dim,
        omega0,
        first_layer_omega_scale,
        input_scale,
        first_layer_init,
    };
    config.validate()?;
    let n = config.num_params();
    if bytes.len() - r.pos != 8 * n {
        return Err(Error::malformed(
            origin,
            format!("expected {} parameter bytes, found {}", 8 * n, bytes.len() - r.pos),
        ));
    }
    let flat: Vec<f64> = (0..n).map(|_| r.f64().unwrap()).collect();
    let params = Parameters::from_flat(&config, &flat)?;
    Ok((config, params))
}

pub fn write_checkpoint(path: &Path, config: &NetworkConfig, params: &Parameters) -> Result<()> {
    let bytes = encode_checkpoint(config, params)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<(NetworkConfig, Parameters)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes, path)
}
