//! Binary tensor files.
//!
//! Layout: `b"DPPM"`, format version `u32`, rank `u32`, one `u32` per
//! dimension, then the payload as little-endian `f32` in row-major order.
//! All integers are little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayD, IxDyn};

use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"DPPM";
pub const TENSOR_FORMAT_VERSION: u32 = 1;

pub(crate) fn write_u32(w: &mut impl Write, x: u32) -> Result<()> {
    w.write_all(&x.to_le_bytes())?;
    Ok(())
}

pub(crate) fn write_u64(w: &mut impl Write, x: u64) -> Result<()> {
    w.write_all(&x.to_le_bytes())?;
    Ok(())
}

pub(crate) fn write_f32s(w: &mut impl Write, xs: impl IntoIterator<Item = f64>) -> Result<()> {
    for x in xs {
        w.write_all(&(x as f32).to_le_bytes())?;
    }
    Ok(())
}

pub(crate) fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(truncated)?;
    Ok(u32::from_le_bytes(buf))
}

pub(crate) fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(truncated)?;
    Ok(u64::from_le_bytes(buf))
}

pub(crate) fn read_f32s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 4];
    r.read_exact(&mut bytes).map_err(truncated)?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

pub(crate) fn read_magic(r: &mut impl Read) -> Result<()> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    Ok(())
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("file is truncated".into())
    } else {
        Error::Io(e)
    }
}

pub fn write_tensor_to(w: &mut impl Write, tensor: &ArrayD<f64>) -> Result<()> {
    w.write_all(MAGIC)?;
    write_u32(w, TENSOR_FORMAT_VERSION)?;
    write_u32(w, tensor.ndim() as u32)?;
    for &d in tensor.shape() {
        write_u32(w, u32::try_from(d).map_err(|_| Error::Format("dimension too large".into()))?)?;
    }
    write_f32s(w, tensor.as_standard_layout().iter().copied())
}

pub fn read_tensor_from(r: &mut impl Read) -> Result<ArrayD<f64>> {
    read_magic(r)?;
    let version = read_u32(r)?;
    if version != TENSOR_FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported tensor version {version}")));
    }
    let rank = read_u32(r)? as usize;
    if rank > 8 {
        return Err(Error::Format(format!("implausible rank {rank}")));
    }
    let dims = (0..rank)
        .map(|_| read_u32(r).map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    let n = dims.iter().product();
    let data = read_f32s(r, n)?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    ArrayD::from_shape_vec(IxDyn(&dims), data).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_tensor(path: &Path, tensor: &ArrayD<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tensor_to(&mut w, tensor)?;
    w.flush()?;
    Ok(())
}

pub fn read_tensor(path: &Path) -> Result<ArrayD<f64>> {
    read_tensor_from(&mut BufReader::new(File::open(path)?))
}

pub fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<()> {
    write_tensor(path, &m.clone().into_dyn())
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    read_tensor(path)?
        .into_dimensionality()
        .map_err(|_| Error::Format("expected a rank-2 tensor".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn header_layout_is_exact() {
        let t = array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.5]].into_dyn();
        let mut buf = Vec::new();
        write_tensor_to(&mut buf, &t).unwrap();
        assert_eq!(&buf[..4], b"DPPM");
        assert_eq!(&buf[4..8], &1u32.to_le_bytes());
        assert_eq!(&buf[8..12], &2u32.to_le_bytes());
        assert_eq!(&buf[12..16], &2u32.to_le_bytes());
        assert_eq!(&buf[16..20], &3u32.to_le_bytes());
        assert_eq!(&buf[20..24], &1.0f32.to_le_bytes());
        assert_eq!(&buf[40..44], &6.5f32.to_le_bytes());
        assert_eq!(buf.len(), 20 + 6 * 4);
        assert_eq!(read_tensor_from(&mut buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(matches!(
            read_tensor_from(&mut &b"NOPE\x01\0\0\0"[..]),
            Err(Error::Format(_))
        ));
        let mut buf = Vec::new();
        write_tensor_to(&mut buf, &array![1.0, 2.0].into_dyn()).unwrap();
        buf.pop();
        assert!(matches!(read_tensor_from(&mut buf.as_slice()), Err(Error::Format(_))));
    }
}
