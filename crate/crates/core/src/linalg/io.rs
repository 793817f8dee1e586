//! Serialization of vectors and matrices.
//!
//! JSON: `{"rows": r, "cols": c, "entries": [[re, im], ...]}` in row-major
//! order (vectors carry only `entries`). Binary: the 4-byte magic `CPRL`,
//! little-endian `u32` rows and cols, then row-major little-endian `f64`
//! pairs `re, im`. Both round-trip finite values bit-exactly.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::types::{ComplexMatrix, ComplexVector, HermitianMatrix, C64};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CPRL";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorRepr {
    entries: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixRepr {
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
}

fn pairs(entries: &[C64]) -> Vec<[f64; 2]> {
    entries.iter().map(|z| [z.re, z.im]).collect()
}

fn complexes(pairs: Vec<[f64; 2]>) -> Vec<C64> {
    pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect()
}

impl From<ComplexVector> for VectorRepr {
    fn from(v: ComplexVector) -> Self {
        Self {
            entries: pairs(v.as_slice()),
        }
    }
}

impl TryFrom<VectorRepr> for ComplexVector {
    type Error = Error;
    fn try_from(r: VectorRepr) -> Result<Self> {
        ComplexVector::new(complexes(r.entries))
    }
}

impl From<ComplexMatrix> for MatrixRepr {
    fn from(m: ComplexMatrix) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            entries: pairs(m.as_slice()),
        }
    }
}

impl TryFrom<MatrixRepr> for ComplexMatrix {
    type Error = Error;
    fn try_from(r: MatrixRepr) -> Result<Self> {
        ComplexMatrix::new(r.rows, r.cols, complexes(r.entries))
    }
}

impl From<HermitianMatrix> for MatrixRepr {
    fn from(h: HermitianMatrix) -> Self {
        Self {
            rows: h.dim(),
            cols: h.dim(),
            entries: pairs(h.as_slice()),
        }
    }
}

impl TryFrom<MatrixRepr> for HermitianMatrix {
    type Error = Error;
    fn try_from(r: MatrixRepr) -> Result<Self> {
        if r.rows != r.cols {
            return Err(Error::DimensionMismatch {
                expected: r.rows,
                got: r.cols,
            });
        }
        HermitianMatrix::new(r.rows, complexes(r.entries))
    }
}

pub fn write_binary<W: Write>(mut w: W, rows: usize, cols: usize, entries: &[C64]) -> Result<()> {
    let r = u32::try_from(rows).map_err(|_| Error::Format("rows exceed u32".into()))?;
    let c = u32::try_from(cols).map_err(|_| Error::Format("cols exceed u32".into()))?;
    w.write_all(MAGIC)?;
    w.write_all(&r.to_le_bytes())?;
    w.write_all(&c.to_le_bytes())?;
    for z in entries {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a binary blob into `(rows, cols, entries)`.
pub fn read_binary<R: Read>(mut r: R) -> Result<(usize, usize, Vec<C64>)> {
    let mut head = [0u8; 12];
    r.read_exact(&mut head)?;
    if &head[..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let rows = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() != count * 16 {
        return Err(Error::Format(format!(
            "expected {} payload bytes, found {}",
            count * 16,
            buf.len()
        )));
    }
    let entries = buf
        .chunks_exact(16)
        .map(|c| {
            C64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    Ok((rows, cols, entries))
}

impl ComplexMatrix {
    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 16 * self.as_slice().len());
        write_binary(&mut out, self.rows(), self.cols(), self.as_slice()).unwrap();
        out
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        let (r, c, e) = read_binary(bytes)?;
        ComplexMatrix::new(r, c, e)
    }
}

impl HermitianMatrix {
    pub fn to_binary(&self) -> Vec<u8> {
        self.to_matrix().to_binary()
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        HermitianMatrix::from_matrix(&ComplexMatrix::from_binary(bytes)?)
    }
}

impl ComplexVector {
    /// Binary form as an `n x 1` matrix.
    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 16 * self.len());
        write_binary(&mut out, self.len(), 1, self.as_slice()).unwrap();
        out
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        let (r, c, e) = read_binary(bytes)?;
        if c != 1 {
            return Err(Error::Format(format!("expected a column vector, got {r}x{c}")));
        }
        ComplexVector::new(e)
    }
}
