//! Binary weights format.
//!
//! ```text
//! "SHRD" | version: u32 | header_len: u32 | header | param_count: u64 | params: f64 * param_count
//! header  = field*,  field = tag: [u8; 4] | len: u32 | payload
//!   ADIM: actor layer dims (u32 each)    CDIM: critic layer dims (u32 each)
//!   OBSN: observation scale (f64)        ACTS: action scale (f64)
//!   SENT: empty-scene obstacle sentinel (f64 x, f64 y)
//! params  = actor params, log-std (2), critic params
//! ```
//! All integers and floats are little-endian.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::mlp::Mlp;
use super::policy::{GaussianPolicy, PolicyMeta, ACT_DIM, OBS_DIM};
use crate::error::{Error, Result};
use crate::Vec2;

pub const MAGIC: &[u8; 4] = b"SHRD";
pub const VERSION: u32 = 1;

fn put_field(out: &mut Vec<u8>, tag: &[u8; 4], payload: &[u8]) {
    out.extend_from_slice(tag);
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(payload);
}

fn dims_payload(dims: &[usize]) -> Vec<u8> {
    dims.iter().flat_map(|&d| (d as u32).to_le_bytes()).collect()
}

/// Serializes a policy and its conventions.
pub fn encode(policy: &GaussianPolicy) -> Vec<u8> {
    let mut header = Vec::new();
    put_field(&mut header, b"ADIM", &dims_payload(policy.actor.layer_dims()));
    put_field(&mut header, b"CDIM", &dims_payload(policy.critic.layer_dims()));
    put_field(&mut header, b"OBSN", &policy.meta.obs_scale.to_le_bytes());
    put_field(&mut header, b"ACTS", &policy.meta.action_scale.to_le_bytes());
    let mut sent = Vec::with_capacity(16);
    sent.extend_from_slice(&policy.meta.sentinel.x.to_le_bytes());
    sent.extend_from_slice(&policy.meta.sentinel.y.to_le_bytes());
    put_field(&mut header, b"SENT", &sent);

    let params = policy.flat_params();
    let mut out = Vec::with_capacity(16 + header.len() + 8 * params.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Weights(format!(
                "truncated file: needed {n} bytes for {what} at offset {}, {} available",
                self.pos,
                self.bytes.len() - self.pos
            ))),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

fn parse_dims(payload: &[u8], what: &str) -> Result<Vec<usize>> {
    if payload.len() % 4 != 0 {
        return Err(Error::Weights(format!("{what} payload is not a list of u32")));
    }
    Ok(payload
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect())
}

fn describe(dims: &[usize]) -> String {
    format!("{dims:?}")
}

/// Parses a weights blob. Nothing is returned unless the whole blob is valid.
pub fn decode(bytes: &[u8]) -> Result<GaussianPolicy> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::Weights(format!("bad magic: expected \"SHRD\", found {magic:?}")));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::Weights(format!(
            "unsupported version: expected {VERSION}, found {version}"
        )));
    }
    let header_len = r.u32("header length")? as usize;
    let header = r.take(header_len, "header")?;
    let mut h = Reader { bytes: header, pos: 0 };
    let (mut adim, mut cdim, mut obsn, mut acts, mut sent) = (None, None, None, None, None);
    while h.pos < header.len() {
        let tag: [u8; 4] = h.take(4, "field tag")?.try_into().unwrap();
        let len = h.u32("field length")? as usize;
        let payload = h.take(len, "field payload")?;
        let mut p = Reader { bytes: payload, pos: 0 };
        match &tag {
            b"ADIM" => adim = Some(parse_dims(payload, "ADIM")?),
            b"CDIM" => cdim = Some(parse_dims(payload, "CDIM")?),
            b"OBSN" => obsn = Some(p.f64("OBSN")?),
            b"ACTS" => acts = Some(p.f64("ACTS")?),
            b"SENT" => sent = Some(Vec2::new(p.f64("SENT x")?, p.f64("SENT y")?)),
            other => {
                return Err(Error::Weights(format!("unknown header field {other:?}")));
            }
        }
    }
    let missing = |name: &str| Error::Weights(format!("header field {name} missing"));
    let adim = adim.ok_or_else(|| missing("ADIM"))?;
    let cdim = cdim.ok_or_else(|| missing("CDIM"))?;
    let meta = PolicyMeta {
        obs_scale: obsn.ok_or_else(|| missing("OBSN"))?,
        action_scale: acts.ok_or_else(|| missing("ACTS"))?,
        sentinel: sent.ok_or_else(|| missing("SENT"))?,
    };
    if adim.first() != Some(&OBS_DIM) || adim.last() != Some(&ACT_DIM) {
        return Err(Error::Weights(format!(
            "actor shape mismatch: expected input {OBS_DIM} and output {ACT_DIM}, found dims {}",
            describe(&adim)
        )));
    }
    if cdim.first() != Some(&OBS_DIM) || cdim.last() != Some(&1) {
        return Err(Error::Weights(format!(
            "critic shape mismatch: expected input {OBS_DIM} and output 1, found dims {}",
            describe(&cdim)
        )));
    }
    let actor_zero = Mlp::zeros(&adim).map_err(|e| Error::Weights(format!("{e}")))?;
    let critic_zero = Mlp::zeros(&cdim).map_err(|e| Error::Weights(format!("{e}")))?;
    let expected = actor_zero.num_params() + ACT_DIM + critic_zero.num_params();
    let count = r.u64("parameter count")? as usize;
    if count != expected {
        return Err(Error::Weights(format!(
            "parameter count mismatch: header dims imply {expected}, found {count}"
        )));
    }
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        params.push(r.f64("parameters")?);
    }
    if r.pos != bytes.len() {
        return Err(Error::Weights(format!(
            "{} trailing bytes after parameters",
            bytes.len() - r.pos
        )));
    }
    let na = actor_zero.num_params();
    let actor = Mlp::from_params(&adim, params[..na].to_vec())?;
    let log_std = [params[na], params[na + 1]];
    let critic = Mlp::from_params(&cdim, params[na + ACT_DIM..].to_vec())?;
    GaussianPolicy::from_parts(actor, critic, log_std, meta)
}
