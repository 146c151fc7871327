//! Binary checkpoint format.
//!
//! Layout (little endian): magic `DTSF`, `u32` format version, `u64` length
//! plus JSON architecture descriptor, `u32` tensor count, then per tensor a
//! `u32`-prefixed UTF-8 name, `u32` rank, `u64` extents and `f64` values.
//! A SHA-256 digest of all preceding bytes closes the file.

use std::path::Path;

use sha2::{Digest, Sha256};

use super::NetworkArch;
use crate::autodiff::{ParamSet, Tensor};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"DTSF";
pub const FORMAT_VERSION: u32 = 1;
const DIGEST: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub arch: NetworkArch,
    pub params: ParamSet,
}

pub fn checkpoint_bytes(ck: &Checkpoint) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let arch = serde_json::to_vec(&ck.arch)?;
    out.extend_from_slice(&(arch.len() as u64).to_le_bytes());
    out.extend_from_slice(&arch);
    out.extend_from_slice(&(ck.params.len() as u32).to_le_bytes());
    for i in 0..ck.params.len() {
        let name = ck.params.names()[i].as_bytes();
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name);
        let shape = ck.params.shape(i);
        out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
        for &d in shape {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in ck.params.values(i) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    Ok(out)
}

/// Write via a temporary sibling and rename, so readers never see a partial file.
pub fn save_checkpoint(ck: &Checkpoint, path: &Path) -> Result<()> {
    let bytes = checkpoint_bytes(ck)?;
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, &bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    parse_checkpoint(&std::fs::read(path)?)
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.at < n {
            return Err(Error::Corruption("unexpected end of checkpoint body".into()));
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn len(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Corruption("length overflows usize".into()))
    }
}

pub fn parse_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < MAGIC.len() + 4 + DIGEST {
        return Err(Error::Corruption(format!("file of {} bytes is too short", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Corruption("bad magic, not a checkpoint".into()));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Corruption("checksum mismatch".into()));
    }
    let mut r = Reader { bytes: body, at: 4 };
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Version { found: version, expected: FORMAT_VERSION });
    }
    let arch_len = r.len()?;
    let arch: NetworkArch = serde_json::from_slice(r.take(arch_len)?)
        .map_err(|e| Error::Corruption(format!("architecture descriptor: {e}")))?;
    let count = r.u32()?;
    let mut params = ParamSet::new();
    for _ in 0..count {
        let name_len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| Error::Corruption("parameter name is not UTF-8".into()))?
            .to_string();
        let rank = r.u32()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.len()?);
        }
        let n = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or_else(|| Error::Corruption("shape overflow".into()))?;
        let raw = r.take(n.checked_mul(8).ok_or_else(|| Error::Corruption("shape overflow".into()))?)?;
        let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        let t = Tensor::new(shape, values).map_err(|e| Error::Corruption(e.to_string()))?;
        params.push(name, t);
    }
    if r.at != body.len() {
        return Err(Error::Corruption("trailing bytes after parameters".into()));
    }
    check_against_arch(&arch, &params)?;
    Ok(Checkpoint { arch, params })
}

fn check_against_arch(arch: &NetworkArch, params: &ParamSet) -> Result<()> {
    super::check_params(&arch.param_specs()?, params)
}
