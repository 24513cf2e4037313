//! `FDMP` parameter container.
//!
//! ```text
//! "FDMP" | version u32 | count u32 |
//!   count x ( name_len u32 | utf-8 name | rank u32 | rank x extent u32 | f32 LE data )
//! ```
//! Parameters are written in name order.

use fdm_autodiff::{ParamSet, Tensor};

use super::bytes::{put_f32s, put_u32, to_u32, Reader};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"FDMP";
pub const CHECKPOINT_VERSION: u32 = 1;

const WHAT: &str = "FDMP checkpoint";

pub fn encode_checkpoint(params: &ParamSet<f32>) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + params.numel() * 4);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    put_u32(&mut out, CHECKPOINT_VERSION);
    put_u32(&mut out, to_u32(params.len(), WHAT)?);
    for (name, t) in params.iter() {
        put_u32(&mut out, to_u32(name.len(), WHAT)?);
        out.extend_from_slice(name.as_bytes());
        put_u32(&mut out, to_u32(t.rank(), WHAT)?);
        for &e in t.shape() {
            put_u32(&mut out, to_u32(e, WHAT)?);
        }
        put_f32s(&mut out, t.data().iter().copied());
    }
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<ParamSet<f32>> {
    let mut r = Reader::new(bytes, WHAT);
    r.magic(CHECKPOINT_MAGIC)?;
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::format(WHAT, format!("unsupported version {version}")));
    }
    let count = r.u32()?;
    let mut params = ParamSet::new();
    for _ in 0..count {
        let name_len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| Error::format(WHAT, "parameter name is not utf-8"))?
            .to_string();
        let rank = r.u32()? as usize;
        if rank.saturating_mul(4) > r.remaining() {
            return Err(Error::format(WHAT, "rank exceeds remaining bytes"));
        }
        let mut shape = Vec::with_capacity(rank);
        let mut numel = 1usize;
        for _ in 0..rank {
            let e = r.u32()? as usize;
            numel = numel
                .checked_mul(e)
                .ok_or_else(|| Error::format(WHAT, "extent product overflows"))?;
            shape.push(e);
        }
        let data = r.f32s(numel)?;
        let tensor = Tensor::new(shape, data)?;
        if !tensor.is_finite() {
            return Err(Error::format(WHAT, format!("non-finite value in {name}")));
        }
        params
            .insert(name, tensor)
            .map_err(|e| Error::format(WHAT, e.to_string()))?;
    }
    r.finish()?;
    Ok(params)
}
