//! `TWSR0001` binary arrays: 8-byte magic, little-endian `u32` rank and
//! dimensions, a one-byte dtype code (0 = f64, 1 = complex f64 stored as
//! re,im pairs), then the row-major payload.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use faer::Mat;

use crate::{Complex64, Error, Result};

pub const MAGIC: &[u8; 8] = b"TWSR0001";

#[derive(Clone, Debug, PartialEq)]
pub enum ArrayData {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl ArrayData {
    pub fn len(&self) -> usize {
        match self {
            ArrayData::Real(v) => v.len(),
            ArrayData::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn code(&self) -> u8 {
        match self {
            ArrayData::Real(_) => 0,
            ArrayData::Complex(_) => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Array {
    pub dims: Vec<usize>,
    pub data: ArrayData,
}

impl Array {
    pub fn new(dims: Vec<usize>, data: ArrayData) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(Error::DimensionMismatch {
                expected,
                got: data.len(),
            });
        }
        Ok(Self { dims, data })
    }

    pub fn real(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        Self::new(dims, ArrayData::Real(data))
    }

    pub fn complex(dims: Vec<usize>, data: Vec<Complex64>) -> Result<Self> {
        Self::new(dims, ArrayData::Complex(data))
    }

    pub fn from_mat(m: &Mat<Complex64>) -> Self {
        let data = (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect();
        Self {
            dims: vec![m.nrows(), m.ncols()],
            data: ArrayData::Complex(data),
        }
    }

    pub fn to_mat(&self) -> Result<Mat<Complex64>> {
        let (ArrayData::Complex(v), [r, c]) = (&self.data, self.dims.as_slice()) else {
            return Err(Error::Format("expected a complex matrix".into()));
        };
        Ok(Mat::from_fn(*r, *c, |i, j| v[i * c + j]))
    }

    pub fn into_complex(self) -> Result<Vec<Complex64>> {
        match self.data {
            ArrayData::Complex(v) => Ok(v),
            ArrayData::Real(_) => Err(Error::Format("expected complex data".into())),
        }
    }

    pub fn into_real(self) -> Result<Vec<f64>> {
        match self.data {
            ArrayData::Real(v) => Ok(v),
            ArrayData::Complex(_) => Err(Error::Format("expected real data".into())),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let width = if self.data.code() == 0 { 8 } else { 16 };
        let mut out = Vec::with_capacity(13 + 4 * self.dims.len() + width * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.dims.len() as u32).to_le_bytes());
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        out.push(self.data.code());
        match &self.data {
            ArrayData::Real(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            ArrayData::Complex(v) => v.iter().for_each(|z| {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }),
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let ndim = r.u32()? as usize;
        let dims = (0..ndim).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let n = dims
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
        let data = match r.take(1)?[0] {
            0 => ArrayData::Real((0..n).map(|_| r.f64()).collect::<Result<_>>()?),
            1 => ArrayData::Complex(
                (0..n)
                    .map(|_| Ok(Complex64::new(r.f64()?, r.f64()?)))
                    .collect::<Result<_>>()?,
            ),
            c => return Err(Error::Format(format!("unknown dtype code {c}"))),
        };
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after payload".into()));
        }
        Ok(Self { dims, data })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let s = self
            .bytes
            .get(self.pos..self.pos + n)
            .ok_or_else(|| Error::Format("truncated payload".into()))?;
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn write_array(path: impl AsRef<Path>, array: &Array) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&array.to_bytes())?;
    Ok(())
}

pub fn read_array(path: impl AsRef<Path>) -> Result<Array> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    Array::from_bytes(&bytes)
}
