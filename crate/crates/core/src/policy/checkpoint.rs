//! Binary policy checkpoints.
//!
//! Layout (little endian): magic `RISLOCP1`, `u32` version, `u64` scenario
//! hash, `u64` training seed, `u32` training stages, dims (`u32` BS count,
//! `u32` antennas, `u32` RIS count then one `u32` per RIS), network config
//! (`u32` hidden, head width, head layers, position-head depth, then each
//! hidden width), `u32` feature code, `u32` loss code, `u32` weight count and
//! the `f64` weights, seven `f64` of I/O scaling, `u32` block count, then per
//! block `u32` rows, `u32` cols and `rows·cols` `f64` values in
//! [`PolicyParams::blocks`] order.

use std::io::{Read, Write};
use std::path::Path;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};

use super::loss::LossMode;
use super::params::{FeatureMode, IoScaling, PolicyConfig, PolicyParams, SensingDims};

const MAGIC: &[u8; 8] = b"RISLOCP1";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: PolicyParams,
    pub scenario_hash: u64,
    pub train_seed: u64,
    pub stages: usize,
    pub loss: LossMode,
}

pub(crate) struct Writer<W: Write>(pub W);

impl<W: Write> Writer<W> {
    pub fn u32(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit u32")))?;
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    pub fn u64(&mut self, v: u64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    pub fn f64(&mut self, v: f64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    pub fn f64s(&mut self, v: &[f64]) -> Result<()> {
        let mut buf = Vec::with_capacity(8 * v.len());
        v.iter().for_each(|x| buf.extend_from_slice(&x.to_le_bytes()));
        Ok(self.0.write_all(&buf)?)
    }
}

pub(crate) struct Reader<R: Read>(pub R);

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.0.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated file: {e}")))?;
        Ok(b)
    }
    pub fn magic(&mut self, want: &[u8; 8]) -> Result<()> {
        if &self.bytes::<8>()? != want {
            return Err(Error::Format("bad magic".into()));
        }
        Ok(())
    }
    pub fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.bytes()?) as usize)
    }
    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let mut buf = vec![0u8; 8 * n];
        self.0.read_exact(&mut buf).map_err(|e| Error::Format(format!("truncated file: {e}")))?;
        Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub(crate) fn write_blocks<W: Write>(w: &mut Writer<W>, blocks: &[&Tensor]) -> Result<()> {
    w.u32(blocks.len())?;
    for b in blocks {
        w.u32(b.rows)?;
        w.u32(b.cols)?;
        w.f64s(&b.data)?;
    }
    Ok(())
}

/// Reads blocks into `dst`, checking count and shapes.
pub(crate) fn read_blocks<R: Read>(r: &mut Reader<R>, dst: Vec<&mut Tensor>) -> Result<()> {
    let n = r.u32()?;
    if n != dst.len() {
        return Err(Error::Format(format!("{n} parameter blocks, expected {}", dst.len())));
    }
    for (i, t) in dst.into_iter().enumerate() {
        let (rows, cols) = (r.u32()?, r.u32()?);
        if (rows, cols) != t.shape() {
            return Err(Error::Format(format!("block {i} is {rows}x{cols}, expected {:?}", t.shape())));
        }
        t.data = r.f64s(rows * cols)?;
    }
    Ok(())
}

impl Checkpoint {
    pub fn write_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = Writer(out);
        w.0.write_all(MAGIC)?;
        w.u32(CHECKPOINT_VERSION as usize)?;
        w.u64(self.scenario_hash)?;
        w.u64(self.train_seed)?;
        w.u32(self.stages)?;
        let p = &self.params;
        w.u32(p.dims.num_bs)?;
        w.u32(p.dims.bs_antennas)?;
        w.u32(p.dims.ris_elements.len())?;
        for &n in &p.dims.ris_elements {
            w.u32(n)?;
        }
        let c = &p.config;
        w.u32(c.hidden)?;
        w.u32(c.head_width)?;
        w.u32(c.head_layers)?;
        w.u32(c.pos_hidden.len())?;
        for &k in &c.pos_hidden {
            w.u32(k)?;
        }
        w.u32(c.feature_mode.code() as usize)?;
        w.u32(self.loss.code() as usize)?;
        match &self.loss {
            LossMode::Final => w.u32(0)?,
            LossMode::Weighted(a) => {
                w.u32(a.len())?;
                w.f64s(a)?;
            }
        }
        w.f64(p.io.feature_scale)?;
        w.f64s(&p.io.position_offset)?;
        w.f64s(&p.io.position_scale)?;
        write_blocks(&mut w, &p.blocks())?;
        w.0.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(input: R) -> Result<Self> {
        let mut r = Reader(input);
        r.magic(MAGIC)?;
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION as usize {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let scenario_hash = r.u64()?;
        let train_seed = r.u64()?;
        let stages = r.u32()?;
        let num_bs = r.u32()?;
        let bs_antennas = r.u32()?;
        let k = r.u32()?;
        let ris_elements = (0..k).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let hidden = r.u32()?;
        let head_width = r.u32()?;
        let head_layers = r.u32()?;
        let depth = r.u32()?;
        let pos_hidden = (0..depth).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let feature_mode = FeatureMode::from_code(r.u32()? as u32)?;
        let loss_code = r.u32()?;
        let na = r.u32()?;
        let alpha = r.f64s(na)?;
        let loss = match loss_code {
            0 => LossMode::Final,
            1 => LossMode::Weighted(alpha),
            c => return Err(Error::Format(format!("unknown loss code {c}"))),
        };
        let feature_scale = r.f64()?;
        let off = r.f64s(3)?;
        let sc = r.f64s(3)?;
        let io = IoScaling {
            feature_scale,
            position_offset: [off[0], off[1], off[2]],
            position_scale: [sc[0], sc[1], sc[2]],
        };
        let config = PolicyConfig { hidden, head_width, head_layers, pos_hidden, feature_mode };
        let dims = SensingDims { num_bs, bs_antennas, ris_elements };
        let mut params = PolicyParams::with_dims(config, dims, io, 0);
        read_blocks(&mut r, params.blocks_mut())?;
        Ok(Self { params, scenario_hash, train_seed, stages, loss })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::presets::preset;

    #[test]
    fn round_trip() {
        let s = preset("miso-2ris").unwrap();
        let cfg = PolicyConfig { hidden: 5, head_width: 7, head_layers: 2, pos_hidden: vec![4, 3], feature_mode: FeatureMode::Rss };
        let ck = Checkpoint {
            params: PolicyParams::new(cfg, &s, 8).unwrap(),
            scenario_hash: s.hash(),
            train_seed: 42,
            stages: 6,
            loss: LossMode::uniform(6),
        };
        let mut buf = Vec::new();
        ck.write_to(&mut buf).unwrap();
        assert_eq!(Checkpoint::read_from(&buf[..]).unwrap(), ck);
        assert!(Checkpoint::read_from(&buf[..buf.len() - 3]).is_err());
        buf[0] = b'X';
        assert!(matches!(Checkpoint::read_from(&buf[..]), Err(Error::Format(_))));
    }
}
