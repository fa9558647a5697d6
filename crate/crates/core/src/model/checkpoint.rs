//! `SRVNN001` checkpoint files.
//!
//! Little-endian throughout:
//!
//! ```text
//! magic           8 bytes "SRVNN001"
//! subcarriers     u32
//! heads           u32
//! layers          u32
//! ffn_hidden      u32
//! classes         u32
//! pos_encoding    u8   0 = row index, 1 = physical time
//! post_ffn_norm   u8   0 / 1
//! time_positions  f64
//! norm_eps        f64
//! init_seed       u64
//! init_scale      f64
//! param_count     u64
//! params          param_count x f64, in `Params::tensors` order
//! ```

use std::io::Read;
use std::path::Path;

use super::{ModelConfig, Params, PositionalEncoding, SrvModel};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SRVNN001";

pub fn write_checkpoint(model: &SrvModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode(model)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<SrvModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

fn encode(model: &SrvModel) -> Vec<u8> {
    let cfg = &model.config;
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    for dim in [
        cfg.subcarriers,
        cfg.heads,
        cfg.layers,
        cfg.ffn_hidden,
        cfg.classes,
    ] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    out.push(match cfg.pos_encoding {
        PositionalEncoding::SinusoidalIndex => 0,
        PositionalEncoding::SinusoidalTime => 1,
    });
    out.push(u8::from(cfg.post_ffn_norm));
    out.extend_from_slice(&cfg.time_positions.to_le_bytes());
    out.extend_from_slice(&cfg.norm_eps.to_le_bytes());
    out.extend_from_slice(&cfg.init_seed.to_le_bytes());
    out.extend_from_slice(&cfg.init_scale.to_le_bytes());
    out.extend_from_slice(&(model.params.num_params() as u64).to_le_bytes());
    for tensor in model.params.tensors() {
        for v in tensor {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn take<const K: usize>(r: &mut &[u8]) -> Result<[u8; K]> {
    let mut buf = [0u8; K];
    r.read_exact(&mut buf)
        .map_err(|_| Error::format("truncated checkpoint"))?;
    Ok(buf)
}

fn decode(mut bytes: &[u8]) -> Result<SrvModel> {
    let r = &mut bytes;
    if &take::<8>(r)? != CHECKPOINT_MAGIC {
        return Err(Error::format("bad checkpoint magic"));
    }
    let mut dims = [0usize; 5];
    for d in &mut dims {
        *d = u32::from_le_bytes(take(r)?) as usize;
    }
    let pos_encoding = match take::<1>(r)?[0] {
        0 => PositionalEncoding::SinusoidalIndex,
        1 => PositionalEncoding::SinusoidalTime,
        other => {
            return Err(Error::format(format!(
                "unknown positional encoding {other}"
            )))
        }
    };
    let post_ffn_norm = match take::<1>(r)?[0] {
        0 => false,
        1 => true,
        other => return Err(Error::format(format!("bad post_ffn_norm flag {other}"))),
    };
    let config = ModelConfig {
        subcarriers: dims[0],
        heads: dims[1],
        layers: dims[2],
        ffn_hidden: dims[3],
        classes: dims[4],
        pos_encoding,
        time_positions: f64::from_le_bytes(take(r)?),
        post_ffn_norm,
        norm_eps: f64::from_le_bytes(take(r)?),
        init_seed: u64::from_le_bytes(take(r)?),
        init_scale: f64::from_le_bytes(take(r)?),
    };
    config
        .validate()
        .map_err(|e| Error::format(format!("checkpoint config: {e}")))?;
    let count = u64::from_le_bytes(take(r)?) as usize;
    let mut params = Params::zeros(&config);
    if params.num_params() != count {
        return Err(Error::format(format!(
            "checkpoint holds {count} parameters, config implies {}",
            params.num_params()
        )));
    }
    for tensor in params.tensors_mut() {
        for v in tensor.iter_mut() {
            *v = f64::from_le_bytes(take(r)?);
        }
    }
    if !r.is_empty() {
        return Err(Error::format("trailing bytes after checkpoint parameters"));
    }
    SrvModel::from_parts(config, params)
}
