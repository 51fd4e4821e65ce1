//! IDX image-file ingestion (big-endian, magic-tagged headers).
//!
//! Image files carry magic `0x00000803` followed by count, rows and cols as
//! big-endian u32, then row-major u8 pixels. Label files carry magic
//! `0x00000801`, a count, then one u8 per item. Parse failures report the
//! byte offset of the problem.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use crate::error::{LosseError, Result};

pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

/// Raw images: `count` images of `rows x cols` u8 pixels.
#[derive(Debug, Clone)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
    pub count: usize,
}

impl IdxImages {
    /// Pixels of image `i` as `[0, 1]`-normalized floats (divide by 255).
    pub fn normalized(&self, i: usize) -> Vec<f64> {
        let len = self.rows * self.cols;
        self.pixels[i * len..(i + 1) * len]
            .iter()
            .map(|&p| p as f64 / 255.0)
            .collect()
    }
}

struct Cursor<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Cursor<R> {
    fn read_exact(&mut self, buf: &mut [u8]) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| LosseError::Parse {
            offset: self.offset,
            message: format!("unexpected end of file: {e}"),
        })?;
        self.offset += buf.len() as u64;
        Ok(())
    }

    fn read_u32_be(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.read_exact(&mut b)?;
        Ok(u32::from_be_bytes(b))
    }
}

/// Parses an IDX image file from a reader.
pub fn read_idx_images<R: Read>(reader: R) -> Result<IdxImages> {
    let mut cur = Cursor {
        inner: reader,
        offset: 0,
    };
    let magic = cur.read_u32_be()?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(LosseError::Parse {
            offset: 0,
            message: format!("bad image magic {magic:#010x}, expected {IDX_IMAGE_MAGIC:#010x}"),
        });
    }
    let count = cur.read_u32_be()? as usize;
    let rows = cur.read_u32_be()? as usize;
    let cols = cur.read_u32_be()? as usize;
    if rows == 0 || cols == 0 {
        return Err(LosseError::Parse {
            offset: 8,
            message: format!("degenerate image shape {rows}x{cols}"),
        });
    }
    let mut pixels = vec![0u8; count * rows * cols];
    cur.read_exact(&mut pixels)?;
    Ok(IdxImages {
        rows,
        cols,
        pixels,
        count,
    })
}

/// Parses an IDX label file from a reader.
pub fn read_idx_labels<R: Read>(reader: R) -> Result<Vec<u8>> {
    let mut cur = Cursor {
        inner: reader,
        offset: 0,
    };
    let magic = cur.read_u32_be()?;
    if magic != IDX_LABEL_MAGIC {
        return Err(LosseError::Parse {
            offset: 0,
            message: format!("bad label magic {magic:#010x}, expected {IDX_LABEL_MAGIC:#010x}"),
        });
    }
    let count = cur.read_u32_be()? as usize;
    let mut labels = vec![0u8; count];
    cur.read_exact(&mut labels)?;
    Ok(labels)
}

/// Opens and parses an IDX image file from disk.
pub fn read_idx_images_file(path: &Path) -> Result<IdxImages> {
    let file = File::open(path)?;
    read_idx_images(BufReader::new(file))
}
