//! Parameter checkpoints: magic "TSDP", version, then length-prefixed
//! (name, shape, payload) records, all little-endian. Same container family
//! as the clip format so one set of robustness tests covers both.

use crate::nets::ModelParams;
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use crate::{Error, Result};
use std::io::Read;
use std::path::Path;

const MAGIC: &[u8; 4] = b"TSDP";
const VERSION: u32 = 1;

pub fn save<S: Scalar>(path: &Path, params: &ModelParams<S>) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(S::DTYPE_CODE);
    buf.extend_from_slice(&[0, 0, 0]);
    let count = params.iter().count() as u32;
    buf.extend_from_slice(&count.to_le_bytes());
    for (name, tensor) in params.iter() {
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&(tensor.rank() as u32).to_le_bytes());
        for &e in tensor.shape() {
            buf.extend_from_slice(&(e as u32).to_le_bytes());
        }
        for &v in tensor.data() {
            v.write_le(&mut buf);
        }
    }
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load<S: Scalar>(path: &Path) -> Result<ModelParams<S>> {
    let mut file = std::fs::File::open(path)?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    parse(&bytes)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format {
                offset: self.pos as u64,
                msg: format!("truncated while reading {what}"),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn parse<S: Scalar>(bytes: &[u8]) -> Result<ModelParams<S>> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4, "magic")? != MAGIC {
        return Err(Error::Format { offset: 0, msg: "bad magic, expected \"TSDP\"".into() });
    }
    let version = c.u32("version")?;
    if version != VERSION {
        return Err(Error::Format { offset: 4, msg: format!("unsupported version {version}") });
    }
    let dtype_off = c.pos as u64;
    let dtype = c.take(4, "dtype")?[0];
    if dtype != S::DTYPE_CODE {
        return Err(Error::Format {
            offset: dtype_off,
            msg: format!("dtype code {dtype} does not match reader"),
        });
    }
    let count = c.u32("record count")?;
    let mut params = ModelParams::new();
    for _ in 0..count {
        let name_len = c.u32("name length")? as usize;
        if name_len > 4096 {
            return Err(Error::Format {
                offset: (c.pos - 4) as u64,
                msg: format!("implausible name length {name_len}"),
            });
        }
        let name_off = c.pos as u64;
        let name = std::str::from_utf8(c.take(name_len, "name")?)
            .map_err(|_| Error::Format { offset: name_off, msg: "name is not UTF-8".into() })?
            .to_string();
        if params.get(&name).is_some() {
            return Err(Error::Format {
                offset: name_off,
                msg: format!("duplicate parameter name {name}"),
            });
        }
        let rank = c.u32("rank")? as usize;
        if rank > 8 {
            return Err(Error::Format {
                offset: (c.pos - 4) as u64,
                msg: format!("implausible rank {rank}"),
            });
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(c.u32("extent")? as usize);
        }
        let shape_off = c.pos as u64;
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or(Error::Format { offset: shape_off, msg: "shape product overflows".into() })?;
        let payload_len = n
            .checked_mul(S::BYTES)
            .ok_or(Error::Format { offset: shape_off, msg: "payload size overflows".into() })?;
        let payload = c.take(payload_len, "payload")?;
        let data: Vec<S> = payload.chunks_exact(S::BYTES).map(S::read_le).collect();
        params.insert(&name, Tensor::from_vec(&shape, data)?);
    }
    if c.pos != bytes.len() {
        return Err(Error::Format {
            offset: c.pos as u64,
            msg: format!("{} trailing bytes", bytes.len() - c.pos),
        });
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::{init_params, NetConfig};
    use crate::train::seeded_rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let params = init_params::<f32, _>(&NetConfig::default(), &mut seeded_rng(1));
        let path = dir.path().join("p.tsdp");
        save(&path, &params).unwrap();
        let back: ModelParams<f32> = load(&path).unwrap();
        assert_eq!(params, back);
    }

    #[test]
    fn corrupted_checkpoints_are_format_errors() {
        let dir = tempfile::tempdir().unwrap();
        let params = init_params::<f32, _>(&NetConfig::default(), &mut seeded_rng(2));
        let path = dir.path().join("p.tsdp");
        save(&path, &params).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        assert!(matches!(parse::<f32>(&bytes[..10]), Err(Error::Format { .. })));
        assert!(matches!(parse::<f32>(b"nope"), Err(Error::Format { .. })));

        let mut huge = bytes.clone();
        // corrupt the first record's name length
        huge[16..20].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(matches!(parse::<f32>(&huge), Err(Error::Format { .. })));

        let mut trailing = bytes;
        trailing.push(0);
        assert!(matches!(parse::<f32>(&trailing), Err(Error::Format { .. })));
    }
}
