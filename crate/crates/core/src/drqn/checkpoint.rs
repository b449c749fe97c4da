//! Binary checkpoint: little-endian header followed by named `f64` tensors.
//!
//! ```text
//! magic "AOIDRQN\0" | u32 version | u32 features | u32 hidden | u32 dense | u32 actions
//! u64 config hash | [u8; 32] rng seed | u64 rng stream | u128 rng word position
//! u32 tensor count, then per tensor: u16 name length | name | u32 rank | u64 dims.. | f64 data..
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::network::{DrqnParams, NetShape, TENSOR_NAMES};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"AOIDRQN\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        Self {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: DrqnParams,
    pub config_hash: u64,
    pub rng: RngState,
}

fn put_u32(w: &mut impl Write, v: u32) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Checkpoint(format!("truncated file: {e}")))?;
    Ok(buf)
}

fn take_u32(r: &mut impl Read) -> Result<u32> {
    Ok(u32::from_le_bytes(take(r)?))
}

fn take_u64(r: &mut impl Read) -> Result<u64> {
    Ok(u64::from_le_bytes(take(r)?))
}

impl Checkpoint {
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let shape = self.params.shape();
        w.write_all(MAGIC)?;
        put_u32(w, FORMAT_VERSION)?;
        for dim in [shape.features, shape.hidden, shape.dense, shape.actions] {
            put_u32(w, dim as u32)?;
        }
        w.write_all(&self.config_hash.to_le_bytes())?;
        w.write_all(&self.rng.seed)?;
        w.write_all(&self.rng.stream.to_le_bytes())?;
        w.write_all(&self.rng.word_pos.to_le_bytes())?;
        put_u32(w, TENSOR_NAMES.len() as u32)?;
        let shapes = self.params.tensor_shapes();
        for ((name, data), dims) in TENSOR_NAMES.iter().zip(self.params.slices()).zip(shapes) {
            w.write_all(&(name.len() as u16).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            put_u32(w, dims.len() as u32)?;
            for d in dims {
                w.write_all(&(d as u64).to_le_bytes())?;
            }
            for x in data {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        if &take::<8>(r)? != MAGIC {
            return Err(Error::Checkpoint("not a DRQN checkpoint".into()));
        }
        let version = take_u32(r)?;
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported format version {version}")));
        }
        let mut dims = [0usize; 4];
        for d in &mut dims {
            *d = take_u32(r)? as usize;
        }
        let shape = NetShape {
            features: dims[0],
            hidden: dims[1],
            dense: dims[2],
            actions: dims[3],
        };
        let config_hash = take_u64(r)?;
        let rng = RngState {
            seed: take(r)?,
            stream: take_u64(r)?,
            word_pos: u128::from_le_bytes(take(r)?),
        };
        let count = take_u32(r)? as usize;
        if count != TENSOR_NAMES.len() {
            return Err(Error::Checkpoint(format!("expected {} tensors, found {count}", TENSOR_NAMES.len())));
        }
        let mut params = DrqnParams::zeros(shape);
        let expected_shapes = params.tensor_shapes();
        for ((name, slot), expected) in TENSOR_NAMES.iter().zip(params.slices_mut()).zip(expected_shapes) {
            let len = u16::from_le_bytes(take(r)?) as usize;
            let mut raw = vec![0u8; len];
            r.read_exact(&mut raw)
                .map_err(|e| Error::Checkpoint(format!("truncated file: {e}")))?;
            if raw != name.as_bytes() {
                return Err(Error::Checkpoint(format!(
                    "expected tensor `{name}`, found `{}`",
                    String::from_utf8_lossy(&raw)
                )));
            }
            let rank = take_u32(r)? as usize;
            let found: Vec<usize> = (0..rank).map(|_| take_u64(r).map(|d| d as usize)).collect::<Result<_>>()?;
            if found != expected {
                return Err(Error::Checkpoint(format!(
                    "tensor `{name}` has shape {found:?}, header implies {expected:?}"
                )));
            }
            for x in slot.iter_mut() {
                *x = f64::from_le_bytes(take(r)?);
            }
        }
        if !params.is_finite() {
            return Err(Error::Checkpoint("non-finite parameter values".into()));
        }
        Ok(Self { params, config_hash, rng })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use rand::RngCore;

    use super::*;

    #[test]
    fn round_trip_and_rng_resume() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let params = DrqnParams::init(NetShape { features: 9, hidden: 4, dense: 3, actions: 6 }, &mut rng);
        let ck = Checkpoint { params, config_hash: 0xfeed, rng: RngState::capture(&rng) };
        let mut bytes = Vec::new();
        ck.write_to(&mut bytes).unwrap();
        let back = Checkpoint::read_from(&mut bytes.as_slice()).unwrap();
        assert_eq!(back, ck);
        let mut resumed = back.rng.restore();
        assert_eq!(resumed.next_u64(), rng.next_u64());
    }

    #[test]
    fn corrupt_files_are_rejected() {
        assert!(Checkpoint::read_from(&mut &b"nope"[..]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = DrqnParams::init(NetShape { features: 2, hidden: 2, dense: 2, actions: 2 }, &mut rng);
        let ck = Checkpoint { params, config_hash: 1, rng: RngState::capture(&rng) };
        let mut bytes = Vec::new();
        ck.write_to(&mut bytes).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(Checkpoint::read_from(&mut bytes.as_slice()), Err(Error::Checkpoint(_))));
    }
}
