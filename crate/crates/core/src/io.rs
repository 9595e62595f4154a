//! Binary field (`WF01`) and observation-stack (`OB01`) files.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! WF01 | rows: u32 | cols: u32 | pitch: f64 | rows*cols * (re: f64, im: f64)
//! OB01 | K: u32 | rows: u32 | cols: u32 | K * (z: f64 | sigma: f64 | rows*cols * f64)
//! ```

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{RealGrid, WaveField};
use crate::observe::ObservationStack;

pub const FIELD_MAGIC: [u8; 4] = *b"WF01";
pub const OBSERVATION_MAGIC: [u8; 4] = *b"OB01";
pub const FIELD_HEADER_LEN: usize = 20;
pub const OBSERVATION_HEADER_LEN: usize = 16;

pub fn encode_field(field: &WaveField) -> Vec<u8> {
    let mut out = Vec::with_capacity(FIELD_HEADER_LEN + field.len() * 16);
    out.extend_from_slice(&FIELD_MAGIC);
    out.extend_from_slice(&(field.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(field.cols() as u32).to_le_bytes());
    out.extend_from_slice(&field.pitch().to_le_bytes());
    for s in field.samples() {
        out.extend_from_slice(&s.re.to_le_bytes());
        out.extend_from_slice(&s.im.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let mut b = [0u8; N];
        b.copy_from_slice(&self.buf[self.pos..self.pos + N]);
        self.pos += N;
        b
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
}

fn check_magic(buf: &[u8], expected: [u8; 4]) -> Result<()> {
    if buf.len() < 4 {
        return Err(Error::Truncated {
            expected: 4,
            found: buf.len() as u64,
        });
    }
    let found: [u8; 4] = buf[..4].try_into().unwrap();
    if found != expected {
        return Err(Error::BadMagic { expected, found });
    }
    Ok(())
}

fn check_len(buf: &[u8], expected: u64) -> Result<()> {
    let found = buf.len() as u64;
    if found < expected {
        Err(Error::Truncated { expected, found })
    } else if found > expected {
        Err(Error::TrailingBytes(found - expected))
    } else {
        Ok(())
    }
}

/// Payload size `count * cells * bytes_per_cell`, or an overflow error.
fn payload_len(rows: u32, cols: u32, bytes_per_cell: u64, count: u64) -> Result<u64> {
    let overflow = Error::DimensionOverflow {
        rows: rows as u64,
        cols: cols as u64,
    };
    if rows == 0 || cols == 0 {
        return Err(overflow);
    }
    (rows as u64)
        .checked_mul(cols as u64)
        .and_then(|n| n.checked_mul(bytes_per_cell))
        .and_then(|n| n.checked_mul(count))
        .filter(|n| usize::try_from(*n).is_ok())
        .ok_or(overflow)
}

pub fn decode_field(buf: &[u8]) -> Result<WaveField> {
    check_magic(buf, FIELD_MAGIC)?;
    if buf.len() < FIELD_HEADER_LEN {
        return Err(Error::Truncated {
            expected: FIELD_HEADER_LEN as u64,
            found: buf.len() as u64,
        });
    }
    let mut r = Reader { buf, pos: 4 };
    let rows = r.u32();
    let cols = r.u32();
    let pitch = r.f64();
    let payload = payload_len(rows, cols, 16, 1)?;
    check_len(buf, FIELD_HEADER_LEN as u64 + payload)?;
    let n = rows as usize * cols as usize;
    let samples = (0..n)
        .map(|_| {
            let re = r.f64();
            let im = r.f64();
            Complex64::new(re, im)
        })
        .collect();
    WaveField::new(rows as usize, cols as usize, pitch, samples)
}

pub fn write_field(field: &WaveField, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_field(field))?;
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<WaveField> {
    decode_field(&fs::read(path)?)
}

pub fn encode_observations(obs: &ObservationStack) -> Vec<u8> {
    let (rows, cols) = obs.shape();
    let k = obs.num_planes();
    let mut out = Vec::with_capacity(OBSERVATION_HEADER_LEN + k * (16 + rows * cols * 8));
    out.extend_from_slice(&OBSERVATION_MAGIC);
    out.extend_from_slice(&(k as u32).to_le_bytes());
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    for ((plane, sigma), z) in obs.planes().iter().zip(obs.sigmas()).zip(obs.distances()) {
        out.extend_from_slice(&z.to_le_bytes());
        out.extend_from_slice(&sigma.to_le_bytes());
        for v in plane.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_observations(buf: &[u8]) -> Result<ObservationStack> {
    check_magic(buf, OBSERVATION_MAGIC)?;
    if buf.len() < OBSERVATION_HEADER_LEN {
        return Err(Error::Truncated {
            expected: OBSERVATION_HEADER_LEN as u64,
            found: buf.len() as u64,
        });
    }
    let mut r = Reader { buf, pos: 4 };
    let k = r.u32();
    let rows = r.u32();
    let cols = r.u32();
    if k == 0 {
        return Err(Error::InvalidParameter("observation file declares zero planes".into()));
    }
    let plane = payload_len(rows, cols, 8, 1)?;
    let total = plane
        .checked_add(16)
        .and_then(|p| p.checked_mul(k as u64))
        .and_then(|p| p.checked_add(OBSERVATION_HEADER_LEN as u64))
        .ok_or(Error::DimensionOverflow {
            rows: rows as u64,
            cols: cols as u64,
        })?;
    check_len(buf, total)?;
    let n = rows as usize * cols as usize;
    let mut planes = Vec::with_capacity(k as usize);
    let mut sigmas = Vec::with_capacity(k as usize);
    let mut distances = Vec::with_capacity(k as usize);
    for _ in 0..k {
        distances.push(r.f64());
        sigmas.push(r.f64());
        let data = (0..n).map(|_| r.f64()).collect();
        planes.push(RealGrid::new(rows as usize, cols as usize, data)?);
    }
    ObservationStack::new(planes, sigmas, distances)
}

pub fn write_observations(obs: &ObservationStack, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_observations(obs))?;
    Ok(())
}

pub fn read_observations(path: impl AsRef<Path>) -> Result<ObservationStack> {
    decode_observations(&fs::read(path)?)
}
