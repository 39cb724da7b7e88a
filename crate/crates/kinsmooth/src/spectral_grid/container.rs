//! Flat binary snapshot container.
//!
//! ```text
//! offset size  field
//!  0      8    magic "KSFIELD\0"
//!  8      4    version (u32) = 1
//! 12      4    endianness marker 0x01020304 (u32, written in the file's byte order)
//! 16      1    kind: 0 = space-time field, 1 = phase-space data
//! 17      1    domain: 0 = physical, 1 = frequency
//! 18      1    d (2 or 3)
//! 19      1    measure kind: 0 = none, 1 = sphere, 2 = kappa ball
//! 20      4    n_x (u32)
//! 24      4    n_t (u32)
//! 28      4    n_nodes (u32; 0 for space-time fields)
//! 32      8    len_x (f64)
//! 40      8    len_t (f64)
//! 48      8    kappa (f64; 0 when unused)
//! 56     16    layout: four u32 (velocity rule tag and sizes; zero when unused);
//!              bit 31 of the first word marks velocity-independent (broadcast) data
//! 72      .    payload: complex64 samples as (f32 re, f32 im) pairs
//!              space-time: n_t * n_x^d, index it * n_x^d + ix (x_d fastest)
//!              phase-space: n_nodes * n_x^d, node-major (n_x^d when broadcast)
//!  .      .    phase-space only: n_nodes records of (d coordinates, weight), f64 each
//! ```
//! Writers emit little-endian; readers accept either byte order via the marker.

use super::{Domain, GridSpec, SpaceTimeField, C64};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"KSFIELD\0";
pub const VERSION: u32 = 1;
pub const MARKER: u32 = 0x0102_0304;
pub const HEADER_LEN: usize = 72;
pub const BROADCAST_FLAG: u32 = 1 << 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    SpaceTime,
    PhaseSpace,
}

/// Decoded container contents before interpretation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawContainer {
    pub kind: Kind,
    pub domain: Domain,
    pub grid: GridSpec,
    pub measure_kind: u8,
    pub kappa: f64,
    pub layout: [u32; 4],
    pub n_nodes: usize,
    pub payload: Vec<C64>,
    /// Flattened node records, (d + 1) values each.
    pub nodes: Vec<f64>,
}

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Container(msg.into()))
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    big: bool,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return err(format!("truncated at byte {}", self.pos));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        let b: [u8; 4] = self.take(4)?.try_into().unwrap();
        Ok(if self.big { u32::from_be_bytes(b) } else { u32::from_le_bytes(b) })
    }
    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_bits(self.u32()?))
    }
    fn f64(&mut self) -> Result<f64> {
        let b: [u8; 8] = self.take(8)?.try_into().unwrap();
        Ok(f64::from_bits(if self.big { u64::from_be_bytes(b) } else { u64::from_le_bytes(b) }))
    }
}

pub fn encode(raw: &RawContainer) -> Vec<u8> {
    let g = &raw.grid;
    let mut out = Vec::with_capacity(HEADER_LEN + raw.payload.len() * 8 + raw.nodes.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&MARKER.to_le_bytes());
    out.push(match raw.kind {
        Kind::SpaceTime => 0,
        Kind::PhaseSpace => 1,
    });
    out.push(match raw.domain {
        Domain::Physical => 0,
        Domain::Frequency => 1,
    });
    out.push(g.d as u8);
    out.push(raw.measure_kind);
    out.extend_from_slice(&(g.n_x as u32).to_le_bytes());
    out.extend_from_slice(&(g.n_t as u32).to_le_bytes());
    out.extend_from_slice(&(raw.n_nodes as u32).to_le_bytes());
    out.extend_from_slice(&g.len_x.to_le_bytes());
    out.extend_from_slice(&g.len_t.to_le_bytes());
    out.extend_from_slice(&raw.kappa.to_le_bytes());
    for l in raw.layout {
        out.extend_from_slice(&l.to_le_bytes());
    }
    for z in &raw.payload {
        out.extend_from_slice(&(z.re as f32).to_le_bytes());
        out.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    for v in &raw.nodes {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(buf: &[u8]) -> Result<RawContainer> {
    if buf.len() < HEADER_LEN {
        return err("shorter than header");
    }
    if &buf[..8] != MAGIC {
        return err("bad magic");
    }
    let marker_le = u32::from_le_bytes(buf[12..16].try_into().unwrap());
    let big = match marker_le {
        MARKER => false,
        m if m.swap_bytes() == MARKER => true,
        _ => return err("bad endianness marker"),
    };
    let mut r = Reader { buf, pos: 8, big };
    let version = r.u32()?;
    if version != VERSION {
        return err(format!("unsupported version {version}"));
    }
    r.u32()?;
    let kind = match r.u8()? {
        0 => Kind::SpaceTime,
        1 => Kind::PhaseSpace,
        k => return err(format!("bad kind {k}")),
    };
    let domain = match r.u8()? {
        0 => Domain::Physical,
        1 => Domain::Frequency,
        k => return err(format!("bad domain {k}")),
    };
    let d = r.u8()? as usize;
    let measure_kind = r.u8()?;
    let n_x = r.u32()? as usize;
    let n_t = r.u32()? as usize;
    let n_nodes = r.u32()? as usize;
    let len_x = r.f64()?;
    let len_t = r.f64()?;
    let kappa = r.f64()?;
    let mut layout = [0u32; 4];
    for l in &mut layout {
        *l = r.u32()?;
    }
    let grid = GridSpec::new(d, n_x, len_x, n_t, len_t).map_err(|e| Error::Container(e.to_string()))?;
    if !kappa.is_finite() {
        return err("non-finite kappa");
    }
    let n_space = grid.n_space();
    let count = match kind {
        Kind::SpaceTime => {
            if n_nodes != 0 || measure_kind != 0 {
                return err("space-time field with velocity nodes");
            }
            n_space.checked_mul(n_t)
        }
        Kind::PhaseSpace => {
            if n_nodes == 0 || !(1..=2).contains(&measure_kind) {
                return err("phase-space data needs nodes and a measure kind");
            }
            if layout[0] & BROADCAST_FLAG != 0 {
                Some(n_space)
            } else {
                n_space.checked_mul(n_nodes)
            }
        }
    };
    let count = count.ok_or_else(|| Error::Container("size overflow".into()))?;
    let node_vals = if kind == Kind::PhaseSpace { n_nodes.checked_mul(d + 1) } else { Some(0) };
    let node_vals = node_vals.ok_or_else(|| Error::Container("size overflow".into()))?;
    let need = count
        .checked_mul(8)
        .and_then(|p| node_vals.checked_mul(8).and_then(|n| p.checked_add(n)))
        .ok_or_else(|| Error::Container("size overflow".into()))?;
    if buf.len() - HEADER_LEN != need {
        return err(format!("payload length {} does not match header ({need})", buf.len() - HEADER_LEN));
    }
    let mut payload = Vec::with_capacity(count);
    for _ in 0..count {
        let re = r.f32()?;
        let im = r.f32()?;
        payload.push(C64::new(re as f64, im as f64));
    }
    let mut nodes = Vec::with_capacity(node_vals);
    for _ in 0..node_vals {
        let v = r.f64()?;
        if !v.is_finite() {
            return err("non-finite node record");
        }
        nodes.push(v);
    }
    Ok(RawContainer { kind, domain, grid, measure_kind, kappa, layout, n_nodes, payload, nodes })
}

impl SpaceTimeField {
    pub fn to_bytes(&self) -> Vec<u8> {
        encode(&RawContainer {
            kind: Kind::SpaceTime,
            domain: self.domain,
            grid: self.grid,
            measure_kind: 0,
            kappa: 0.0,
            layout: [0; 4],
            n_nodes: 0,
            payload: self.samples.clone(),
            nodes: Vec::new(),
        })
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let raw = decode(buf)?;
        if raw.kind != Kind::SpaceTime {
            return err("not a space-time field");
        }
        Ok(Self { grid: raw.grid, samples: raw.payload, domain: raw.domain })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field() -> SpaceTimeField {
        let g = GridSpec::new(2, 8, 3.0, 8, 5.0).unwrap();
        SpaceTimeField::from_physical_fn(g, |x, t| C64::new(x[0] + 0.5 * t, x[1] - t))
    }

    #[test]
    fn round_trip() {
        let f = field();
        let bytes = f.to_bytes();
        assert_eq!(bytes.len(), HEADER_LEN + 8 * 8 * 8 * 8);
        let back = SpaceTimeField::from_bytes(&bytes).unwrap();
        assert_eq!(back.grid, f.grid);
        for (a, b) in back.samples.iter().zip(&f.samples) {
            assert!((a - b).norm() < 1e-6 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn big_endian_files_decode() {
        let f = field();
        let le = f.to_bytes();
        let mut be = le.clone();
        // Swap every multi-byte header field and payload word.
        let swap = |v: &mut [u8], at: usize, n: usize| v[at..at + n].reverse();
        for at in [8, 12, 20, 24, 28, 56, 60, 64, 68] {
            swap(&mut be, at, 4);
        }
        for at in [32, 40, 48] {
            swap(&mut be, at, 8);
        }
        let mut at = HEADER_LEN;
        while at < be.len() {
            swap(&mut be, at, 4);
            at += 4;
        }
        assert_eq!(SpaceTimeField::from_bytes(&be).unwrap(), SpaceTimeField::from_bytes(&le).unwrap());
    }

    #[test]
    fn rejects_corruption() {
        let bytes = field().to_bytes();
        assert!(decode(&bytes[..40]).is_err());
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut b = bytes.clone();
        b[0] = b'X';
        assert!(decode(&b).is_err());
        let mut b = bytes.clone();
        b[18] = 4;
        assert!(decode(&b).is_err());
        let mut b = bytes.clone();
        b[20] = 12;
        assert!(decode(&b).is_err());
        let mut b = bytes;
        b[16] = 1;
        assert!(decode(&b).is_err());
    }
}
