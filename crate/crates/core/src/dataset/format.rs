//! WFS sample files: little-endian header, JSON metadata, f32 channels,
//! labels, CRC32 trailer.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::wavefield::{Provenance, WavefieldGrid};

pub const WFS_MAGIC: [u8; 4] = *b"WFS1";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 49;

#[derive(Debug, Clone, PartialEq)]
pub struct Labels {
    pub stiffness: Vec<f32>,
    pub crack: Vec<u8>,
}

/// Raw content of one WFS file. Unlabelled files store NaN stiffness and
/// zero crack labels and carry `"labelled": false` in their metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct WfsRecord {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub freq_hz: f64,
    pub provenance: Provenance,
    pub meta: Value,
    pub channels: Vec<Vec<f32>>,
    pub labels: Option<Labels>,
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::CorruptFile(format!("truncated: need {} bytes at offset {}, have {}", n, self.pos, self.buf.len()))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        Ok(self
            .take(4 * n)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
            .collect())
    }
}

impl WfsRecord {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn meta_bytes(&self) -> Result<Vec<u8>> {
        let mut meta = self.meta.clone();
        if let Value::Object(m) = &mut meta {
            m.insert("labelled".into(), Value::Bool(self.labels.is_some()));
        }
        Ok(serde_json::to_vec(&meta)?)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let n = self.len();
        if self.channels.iter().any(|c| c.len() != n)
            || self.labels.as_ref().is_some_and(|l| l.stiffness.len() != n || l.crack.len() != n)
        {
            return Err(Error::ShapeMismatch {
                expected: format!("{n} values per channel and label"),
                found: "inconsistent record".into(),
            });
        }
        let json = self.meta_bytes()?;
        let mut out = Vec::with_capacity(HEADER_LEN + json.len() + 4 * n * (self.channels.len() + 1) + n + 4);
        out.extend_from_slice(&WFS_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.nx as u32).to_le_bytes());
        out.extend_from_slice(&(self.ny as u32).to_le_bytes());
        out.extend_from_slice(&self.dx.to_le_bytes());
        out.extend_from_slice(&self.dy.to_le_bytes());
        out.extend_from_slice(&self.freq_hz.to_le_bytes());
        out.extend_from_slice(&(self.channels.len() as u32).to_le_bytes());
        out.push(self.provenance as u8);
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for c in &self.channels {
            c.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
        }
        match &self.labels {
            Some(l) => {
                l.stiffness.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
                out.extend_from_slice(&l.crack);
            }
            None => {
                (0..n).for_each(|_| out.extend_from_slice(&f32::NAN.to_le_bytes()));
                out.resize(out.len() + n, 0);
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        Ok(out)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader { buf, pos: 0 };
        if r.array::<4>()? != WFS_MAGIC {
            return Err(Error::CorruptFile("bad magic, not a WFS file".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::CorruptFile(format!(
                "unsupported format version {version} (expected {FORMAT_VERSION})"
            )));
        }
        let nx = r.u32()? as usize;
        let ny = r.u32()? as usize;
        let dx = r.f64()?;
        let dy = r.f64()?;
        let freq_hz = r.f64()?;
        let cc = r.u32()? as usize;
        let prov = r.array::<1>()?[0];
        let provenance =
            Provenance::from_u8(prov).ok_or_else(|| Error::CorruptFile(format!("unknown provenance tag {prov}")))?;
        let json_len = r.u32()? as usize;
        let n = nx
            .checked_mul(ny)
            .ok_or_else(|| Error::CorruptFile("grid size overflows".into()))?;
        let expected = HEADER_LEN as u128 + json_len as u128 + 4 * n as u128 * (cc as u128 + 1) + n as u128 + 4;
        if buf.len() as u128 != expected {
            return Err(Error::CorruptFile(format!(
                "length {} does not match the header ({expected} bytes expected)",
                buf.len()
            )));
        }
        let body = buf.len() - 4;
        let stored = u32::from_le_bytes(buf[body..].try_into().expect("4 bytes"));
        let actual = crc32fast::hash(&buf[..body]);
        if stored != actual {
            return Err(Error::CorruptFile(format!(
                "checksum mismatch (stored {stored:08x}, computed {actual:08x})"
            )));
        }
        let meta: Value = serde_json::from_slice(r.take(json_len)?)
            .map_err(|e| Error::CorruptFile(format!("metadata is not valid JSON: {e}")))?;
        let channels = (0..cc).map(|_| r.f32s(n)).collect::<Result<Vec<_>>>()?;
        let stiffness = r.f32s(n)?;
        let crack = r.take(n)?.to_vec();
        let labelled = meta.get("labelled").and_then(Value::as_bool).unwrap_or(true);
        Ok(Self {
            nx,
            ny,
            dx,
            dy,
            freq_hz,
            provenance,
            meta,
            channels,
            labels: labelled.then_some(Labels { stiffness, crack }),
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&buf)
    }

    /// Two-channel (Re, Im) record of a complex grid; the origin goes into
    /// the metadata.
    pub fn from_field(grid: &WavefieldGrid, mut meta: Value) -> Self {
        if !meta.is_object() {
            meta = Value::Object(Default::default());
        }
        if let Value::Object(m) = &mut meta {
            m.insert("origin".into(), serde_json::json!(grid.origin));
        }
        Self {
            nx: grid.nx,
            ny: grid.ny,
            dx: grid.dx,
            dy: grid.dy,
            freq_hz: grid.omega / (2.0 * std::f64::consts::PI),
            provenance: grid.provenance,
            meta,
            channels: vec![
                grid.values.iter().map(|v| v.re as f32).collect(),
                grid.values.iter().map(|v| v.im as f32).collect(),
            ],
            labels: None,
        }
    }

    /// Complex field of a record: the first two channels, rescaled by
    /// `channel_scale` when present.
    pub fn to_field(&self) -> Result<WavefieldGrid> {
        if self.channels.len() < 2 {
            return Err(Error::ShapeMismatch {
                expected: "at least 2 channels".into(),
                found: format!("{}", self.channels.len()),
            });
        }
        let scale = self.meta.get("channel_scale").and_then(Value::as_f64).unwrap_or(1.0);
        let origin = self
            .meta
            .get("origin")
            .and_then(|v| serde_json::from_value::<[f64; 2]>(v.clone()).ok())
            .unwrap_or([0.0, 0.0]);
        let values = self.channels[0]
            .iter()
            .zip(&self.channels[1])
            .map(|(&re, &im)| Complex64::new(f64::from(re), f64::from(im)) * scale)
            .collect();
        WavefieldGrid::new(
            self.nx,
            self.ny,
            self.dx,
            self.dy,
            origin,
            2.0 * std::f64::consts::PI * self.freq_hz,
            self.provenance,
            values,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> WfsRecord {
        let n = 64;
        WfsRecord {
            nx: 8,
            ny: 8,
            dx: 1e-3,
            dy: 2e-3,
            freq_hz: 225e3,
            provenance: Provenance::Em,
            meta: serde_json::json!({"a": 1.5, "b": [1, 2]}),
            channels: (0..9).map(|c| (0..n).map(|i| (c * n + i) as f32 * 0.25).collect()).collect(),
            labels: Some(Labels {
                stiffness: vec![0.9; n],
                crack: (0..n).map(|i| (i % 2) as u8).collect(),
            }),
        }
    }

    #[test]
    fn round_trip_and_corruption() {
        let r = record();
        let bytes = r.to_bytes().unwrap();
        let back = WfsRecord::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes().unwrap(), bytes);
        assert_eq!(back.channels, r.channels);
        assert_eq!(back.labels, r.labels);

        assert!(matches!(WfsRecord::from_bytes(&bytes[..bytes.len() - 7]), Err(Error::CorruptFile(_))));
        let mut v = bytes.clone();
        v[4] = 2;
        match WfsRecord::from_bytes(&v) {
            Err(Error::CorruptFile(msg)) => assert!(msg.contains("version 2")),
            other => panic!("{other:?}"),
        }
        let mut c = bytes.clone();
        c[100] ^= 1;
        assert!(matches!(WfsRecord::from_bytes(&c), Err(Error::CorruptFile(_))));
    }

    #[test]
    fn unlabelled_field() {
        let g = WavefieldGrid::new(
            8,
            9,
            1e-3,
            1e-3,
            [0.5, -0.25],
            3.0,
            Provenance::Scan,
            (0..72).map(|i| Complex64::new(i as f64, -0.5)).collect(),
        )
        .unwrap();
        let r = WfsRecord::from_field(&g, Value::Null);
        let back = WfsRecord::from_bytes(&r.to_bytes().unwrap()).unwrap();
        assert!(back.labels.is_none());
        let f = back.to_field().unwrap();
        assert_eq!(f.values, g.values);
        assert_eq!(f.origin, g.origin);
        assert_eq!(f.provenance, Provenance::Scan);
    }
}
