//! Named-tensor checkpoint container.
//!
//! Binary layout (all integers little-endian):
//!
//! ```text
//! [u8 format version = 1]
//! [u32 header length][header bytes, UTF-8 key=value lines]
//! [u32 tensor count]
//! per tensor: [u16 name length][name][u32 rows][u32 cols][rows*cols f64]
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::matrix::Matrix;
use super::NumericsError;

const FORMAT_VERSION: u8 = 1;

/// A header string plus named tensors, in serialization order.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub header: String,
    pub tensors: Vec<(String, Matrix)>,
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<(), NumericsError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&[FORMAT_VERSION])?;
    let header = ckpt.header.as_bytes();
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(header)?;
    w.write_all(&(ckpt.tensors.len() as u32).to_le_bytes())?;
    for (name, m) in &ckpt.tensors {
        let nb = name.as_bytes();
        if nb.len() > u16::MAX as usize {
            return Err(NumericsError::CheckpointFormat(format!(
                "tensor name too long: {name}"
            )));
        }
        w.write_all(&(nb.len() as u16).to_le_bytes())?;
        w.write_all(nb)?;
        w.write_all(&(m.rows() as u32).to_le_bytes())?;
        w.write_all(&(m.cols() as u32).to_le_bytes())?;
        for v in m.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, NumericsError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut version = [0u8; 1];
    r.read_exact(&mut version)?;
    if version[0] != FORMAT_VERSION {
        return Err(NumericsError::CheckpointFormat(format!(
            "unsupported checkpoint version {}",
            version[0]
        )));
    }
    let header_len = read_u32(&mut r)? as usize;
    let mut header = vec![0u8; header_len];
    r.read_exact(&mut header)?;
    let header = String::from_utf8(header)
        .map_err(|_| NumericsError::CheckpointFormat("header is not UTF-8".into()))?;
    let count = read_u32(&mut r)? as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = read_u16(&mut r)? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name)
            .map_err(|_| NumericsError::CheckpointFormat("tensor name is not UTF-8".into()))?;
        let rows = read_u32(&mut r)? as usize;
        let cols = read_u32(&mut r)? as usize;
        let mut data = Vec::with_capacity(rows * cols);
        let mut buf = [0u8; 8];
        for _ in 0..rows * cols {
            r.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        tensors.push((name, Matrix::new(rows, cols, data)));
    }
    Ok(Checkpoint { header, tensors })
}

fn read_u32(r: &mut impl Read) -> Result<u32, NumericsError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u16(r: &mut impl Read) -> Result<u16, NumericsError> {
    let mut buf = [0u8; 2];
    r.read_exact(&mut buf)?;
    Ok(u16::from_le_bytes(buf))
}
