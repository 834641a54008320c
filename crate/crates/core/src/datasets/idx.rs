//! Reader for the IDX format used by the MNIST family of datasets.
//!
//! Layout (all integers big-endian): a 4-byte magic whose low byte gives
//! the rank, then one u32 per dimension, then the payload of unsigned
//! bytes in row-major order. Supported magics: `0x00000801` (rank-1
//! label vectors) and `0x00000803` (rank-3 image stacks). Images are
//! flattened to `n x (rows * cols)` and scaled from `[0, 255]` to
//! `[0, 1]`; the payload length must match the header exactly.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;

const MAGIC_LABELS: u32 = 0x0000_0801;
const MAGIC_IMAGES: u32 = 0x0000_0803;

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(Error::BadFormat(format!(
            "IDX header truncated at byte {offset}"
        )));
    }
    Ok(u32::from_be_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ]))
}

fn payload<'a>(bytes: &'a [u8], dims: &[u32], header_len: usize) -> Result<&'a [u8]> {
    let expected: usize = dims.iter().try_fold(1usize, |acc, &d| {
        acc.checked_mul(d as usize)
            .ok_or_else(|| Error::BadFormat("IDX dimensions overflow".into()))
    })?;
    let body = &bytes[header_len..];
    if body.len() < expected {
        return Err(Error::BadFormat(format!(
            "IDX payload holds {} bytes but the header claims {expected}",
            body.len()
        )));
    }
    if body.len() > expected {
        return Err(Error::BadFormat(format!(
            "IDX file has {} trailing bytes after the declared payload",
            body.len() - expected
        )));
    }
    Ok(body)
}

/// Read a rank-3 IDX image file into an `n x (rows * cols)` matrix with
/// pixel values scaled to `[0, 1]`.
pub fn read_idx_images<T: Real>(path: &Path) -> Result<Matrix<T>> {
    let bytes = fs::read(path)?;
    let magic = be_u32(&bytes, 0)?;
    if magic != MAGIC_IMAGES {
        return Err(Error::UnsupportedIdxMagic(magic));
    }
    let n = be_u32(&bytes, 4)?;
    let h = be_u32(&bytes, 8)?;
    let w = be_u32(&bytes, 12)?;
    let body = payload(&bytes, &[n, h, w], 16)?;
    let cols = (h as usize) * (w as usize);
    if cols == 0 {
        return Err(Error::BadFormat("IDX images with zero pixels".into()));
    }
    let scale = 1.0 / 255.0;
    let data: Vec<T> = body.iter().map(|&b| T::of(b as f64 * scale)).collect();
    Matrix::new(n as usize, cols, data)
}

/// Read a rank-1 IDX label file as raw class ids.
pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = fs::read(path)?;
    let magic = be_u32(&bytes, 0)?;
    if magic != MAGIC_LABELS {
        return Err(Error::UnsupportedIdxMagic(magic));
    }
    let n = be_u32(&bytes, 4)?;
    let body = payload(&bytes, &[n], 8)?;
    Ok(body.to_vec())
}
