//! Middlebury `.flo` flow-file interchange.
//!
//! Layout: 4 magic bytes "PIEH", little-endian i32 width and height, then
//! row-major interleaved `(u, v)` pairs as little-endian f32.

use crate::types::FlowField;
use crate::{Error, Result, Scalar};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"PIEH";

pub fn write_flo<S: Scalar>(flow: &FlowField<S>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_i32::<LittleEndian>(flow.width() as i32)?;
    w.write_i32::<LittleEndian>(flow.height() as i32)?;
    for y in 0..flow.height() {
        for x in 0..flow.width() {
            w.write_f32::<LittleEndian>(flow.u()[[y, x]].to_f64c() as f32)?;
            w.write_f32::<LittleEndian>(flow.v()[[y, x]].to_f64c() as f32)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_flo<S: Scalar>(path: &Path) -> Result<FlowField<S>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format(format!("{}: truncated header", path.display())))?;
    if &magic != MAGIC {
        return Err(Error::Format(format!(
            "{}: bad magic {magic:?}",
            path.display()
        )));
    }
    let w = r
        .read_i32::<LittleEndian>()
        .map_err(|_| Error::Format(format!("{}: truncated header", path.display())))?;
    let h = r
        .read_i32::<LittleEndian>()
        .map_err(|_| Error::Format(format!("{}: truncated header", path.display())))?;
    if w <= 0 || h <= 0 || w > 1 << 16 || h > 1 << 16 {
        return Err(Error::Format(format!(
            "{}: implausible dimensions {w}×{h}",
            path.display()
        )));
    }
    let (w, h) = (w as usize, h as usize);
    let mut u = Array2::zeros((h, w));
    let mut v = Array2::zeros((h, w));
    for y in 0..h {
        for x in 0..w {
            let uu = r
                .read_f32::<LittleEndian>()
                .map_err(|_| Error::Format(format!("{}: truncated payload", path.display())))?;
            let vv = r
                .read_f32::<LittleEndian>()
                .map_err(|_| Error::Format(format!("{}: truncated payload", path.display())))?;
            u[[y, x]] = S::of(uu as f64);
            v[[y, x]] = S::of(vv as f64);
        }
    }
    FlowField::new(u, v)
}
