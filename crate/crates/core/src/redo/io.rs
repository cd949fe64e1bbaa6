//! Binary table files.
//!
//! Layout, all little-endian: magic, format version (u32), spec fields,
//! build method (u8), frame flag (u8), dimension (u32), generator, optional
//! frame, operator count (u32), operators, then a SHA-256 of everything
//! before it. Matrices are stored row-major as (re, im) f64 pairs.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{CoarseGrainSpec, DiscreteOperatorTable, RedoError};
use crate::linalg::{ComplexMatrix, ExpmMethod, C64};

pub const TABLE_MAGIC: [u8; 8] = *b"REDOTBL\0";
pub const TABLE_FORMAT_VERSION: u32 = 1;

// refuse to allocate absurd matrices from a corrupt header
const MAX_DIM: u32 = 1 << 14;

impl DiscreteOperatorTable {
    pub fn to_bytes(&self) -> Vec<u8> {
        let spec = self.spec();
        let mut buf = Vec::new();
        buf.extend_from_slice(&TABLE_MAGIC);
        buf.extend_from_slice(&TABLE_FORMAT_VERSION.to_le_bytes());
        buf.extend_from_slice(&spec.base().to_le_bytes());
        buf.extend_from_slice(&spec.low().to_le_bytes());
        buf.extend_from_slice(&spec.high().to_le_bytes());
        buf.extend_from_slice(&spec.precision().to_le_bytes());
        buf.extend_from_slice(&spec.max_coefficient().to_le_bytes());
        buf.extend_from_slice(&spec.dt().to_le_bytes());
        buf.push(spec.signed() as u8);
        buf.push(method_code(self.method()));
        buf.push(self.frame().is_some() as u8);
        buf.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        put_matrix(&mut buf, self.generator());
        if let Some(f) = self.frame() {
            put_matrix(&mut buf, f);
        }
        buf.extend_from_slice(&(self.len() as u32).to_le_bytes());
        for op in self.operators() {
            put_matrix(&mut buf, op);
        }
        let digest = Sha256::digest(&buf);
        buf.extend_from_slice(&digest);
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, RedoError> {
        if bytes.len() < TABLE_MAGIC.len() + 4 + 32 {
            return Err(RedoError::Format("file too short".into()));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        let mut r = Cursor { bytes: body, pos: 0 };
        if r.take(8)? != TABLE_MAGIC {
            return Err(RedoError::Format("not a table file".into()));
        }
        let version = r.u32()?;
        if version != TABLE_FORMAT_VERSION {
            return Err(RedoError::Format(format!(
                "unsupported format version {version}"
            )));
        }
        if Sha256::digest(body).as_slice() != digest {
            return Err(RedoError::Checksum);
        }
        let base = r.u32()?;
        let low = r.i32()?;
        let high = r.i32()?;
        let precision = r.f64()?;
        let max_coefficient = r.f64()?;
        let dt = r.f64()?;
        let signed = r.flag()?;
        let method = method_from_code(r.u8()?)?;
        let framed = r.flag()?;
        let dim = r.u32()?;
        if dim == 0 || dim > MAX_DIM {
            return Err(RedoError::Format(format!("bad dimension {dim}")));
        }
        let spec = CoarseGrainSpec::with_precision(
            base,
            low,
            high,
            precision,
            max_coefficient,
            dt,
            signed,
        )?;
        let dim = dim as usize;
        let generator = r.matrix(dim)?;
        let frame = if framed { Some(r.matrix(dim)?) } else { None };
        let count = r.u32()? as usize;
        if count != spec.cost().stored {
            return Err(RedoError::Format(format!(
                "{count} operators stored, spec requires {}",
                spec.cost().stored
            )));
        }
        let ops = (0..count)
            .map(|_| r.matrix(dim))
            .collect::<Result<Vec<_>, _>>()?;
        if r.pos != body.len() {
            return Err(RedoError::Format("trailing bytes".into()));
        }
        DiscreteOperatorTable::from_parts(spec, generator, method, ops, frame)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), RedoError> {
        w.write_all(&self.to_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, RedoError> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RedoError> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RedoError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn method_code(m: ExpmMethod) -> u8 {
    match m {
        ExpmMethod::Pade => 0,
        ExpmMethod::Eigen => 1,
        ExpmMethod::Taylor => 2,
    }
}

fn method_from_code(c: u8) -> Result<ExpmMethod, RedoError> {
    Ok(match c {
        0 => ExpmMethod::Pade,
        1 => ExpmMethod::Eigen,
        2 => ExpmMethod::Taylor,
        _ => return Err(RedoError::Format(format!("unknown method code {c}"))),
    })
}

fn put_matrix(buf: &mut Vec<u8>, m: &ComplexMatrix) {
    for z in m.as_slice() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], RedoError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| RedoError::Format("unexpected end of file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], RedoError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8, RedoError> {
        Ok(self.take(1)?[0])
    }

    fn flag(&mut self) -> Result<bool, RedoError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(RedoError::Format(format!("bad flag byte {v}"))),
        }
    }

    fn u32(&mut self) -> Result<u32, RedoError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn i32(&mut self) -> Result<i32, RedoError> {
        Ok(i32::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64, RedoError> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn matrix(&mut self, dim: usize) -> Result<ComplexMatrix, RedoError> {
        let mut data = Vec::with_capacity(dim * dim);
        for _ in 0..dim * dim {
            let re = self.f64()?;
            let im = self.f64()?;
            data.push(C64::new(re, im));
        }
        Ok(ComplexMatrix::from_vec(dim, data)?)
    }
}
