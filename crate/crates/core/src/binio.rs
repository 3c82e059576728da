//! Little-endian binary primitives shared by the model file, the corpus
//! bundle, and the embedding resource. All multi-byte values are
//! little-endian; strings are u32-length-prefixed UTF-8.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub fn write_u8<W: Write>(w: &mut W, v: u8, path: &Path) -> Result<()> {
    w.write_all(&[v]).map_err(|e| Error::io(path, e))
}

pub fn write_u16<W: Write>(w: &mut W, v: u16, path: &Path) -> Result<()> {
    w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))
}

pub fn write_u32<W: Write>(w: &mut W, v: u32, path: &Path) -> Result<()> {
    w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))
}

pub fn write_u64<W: Write>(w: &mut W, v: u64, path: &Path) -> Result<()> {
    w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))
}

pub fn write_f32<W: Write>(w: &mut W, v: f32, path: &Path) -> Result<()> {
    w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))
}

pub fn write_f64<W: Write>(w: &mut W, v: f64, path: &Path) -> Result<()> {
    w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))
}

pub fn write_str<W: Write>(w: &mut W, s: &str, path: &Path) -> Result<()> {
    let bytes = s.as_bytes();
    write_u32(w, bytes.len() as u32, path)?;
    w.write_all(bytes).map_err(|e| Error::io(path, e))
}

pub fn read_u8<R: Read>(r: &mut R, path: &Path) -> Result<u8> {
    let mut buf = [0u8; 1];
    r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    Ok(buf[0])
}

pub fn read_u16<R: Read>(r: &mut R, path: &Path) -> Result<u16> {
    let mut buf = [0u8; 2];
    r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    Ok(u16::from_le_bytes(buf))
}

pub fn read_u32<R: Read>(r: &mut R, path: &Path) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    Ok(u32::from_le_bytes(buf))
}

pub fn read_u64<R: Read>(r: &mut R, path: &Path) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    Ok(u64::from_le_bytes(buf))
}

pub fn read_f32<R: Read>(r: &mut R, path: &Path) -> Result<f32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    Ok(f32::from_le_bytes(buf))
}

pub fn read_f64<R: Read>(r: &mut R, path: &Path) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    Ok(f64::from_le_bytes(buf))
}

pub fn read_str<R: Read>(r: &mut R, path: &Path) -> Result<String> {
    let len = read_u32(r, path)? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    String::from_utf8(buf)
        .map_err(|_| Error::Format { path: path.to_path_buf(), msg: "invalid UTF-8 string".into() })
}

pub fn expect_magic<R: Read>(r: &mut R, magic: &[u8; 4], path: &Path) -> Result<()> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    if &buf != magic {
        return Err(Error::Format {
            path: path.to_path_buf(),
            msg: format!("bad magic bytes {:?}, expected {:?}", buf, magic),
        });
    }
    Ok(())
}
