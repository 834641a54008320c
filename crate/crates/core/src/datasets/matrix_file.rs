//! A small binary container for feature matrices with optional labels,
//! used to persist pools and sampled batches.
//!
//! Layout (all little-endian):
//!
//! ```text
//! bytes 0..4    magic "MDPU"
//! bytes 4..8    version, u32 (currently 1)
//! bytes 8..16   rows, u64
//! bytes 16..24  cols, u64
//! then          rows * cols payload values, f32, row-major
//! then (opt.)   rows label bytes, i8 (+1 / -1)
//! ```
//!
//! The file length must be exactly header + payload or header + payload
//! + labels; anything else is rejected. Values are stored as `f32`
//! bit-exactly, so a write/read round trip preserves every bit of an
//! `f32` matrix. Generic pools and batches narrow to `f32` on write.

use std::fs;
use std::path::Path;

use crate::coeffs::ProblemSpec;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;
use crate::tuplegen::{LabeledPool, MTupleBatch, UnlabeledBatch};

const MAGIC: &[u8; 4] = b"MDPU";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

/// Write an `f32` matrix, optionally with one `i8` label per row.
pub fn write_matrix(path: &Path, matrix: &Matrix<f32>, labels: Option<&[i8]>) -> Result<()> {
    if let Some(l) = labels {
        if l.len() != matrix.rows() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} rows",
                l.len(),
                matrix.rows()
            )));
        }
    }
    let mut bytes = Vec::with_capacity(
        HEADER_LEN + 4 * matrix.data().len() + labels.map_or(0, <[i8]>::len),
    );
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(matrix.rows() as u64).to_le_bytes());
    bytes.extend_from_slice(&(matrix.cols() as u64).to_le_bytes());
    for &v in matrix.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    if let Some(l) = labels {
        bytes.extend(l.iter().map(|&y| y as u8));
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Read a matrix file; returns the matrix and the labels if present.
pub fn read_matrix(path: &Path) -> Result<(Matrix<f32>, Option<Vec<i8>>)> {
    let bytes = fs::read(path)?;
    if bytes.len() < HEADER_LEN {
        return Err(Error::BadFormat("file shorter than the header".into()));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::BadFormat("bad magic (expected \"MDPU\")".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::BadFormat(format!(
            "unsupported version {version} (expected {VERSION})"
        )));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let payload_len = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::BadFormat("declared shape overflows".into()))?;

    let body = &bytes[HEADER_LEN..];
    let labels = if body.len() == payload_len {
        None
    } else if body.len() == payload_len + rows {
        Some(
            body[payload_len..]
                .iter()
                .map(|&b| b as i8)
                .collect::<Vec<i8>>(),
        )
    } else {
        return Err(Error::BadFormat(format!(
            "{} payload bytes fit neither {payload_len} (bare) nor {} (labeled)",
            body.len(),
            payload_len + rows
        )));
    };

    let data: Vec<f32> = body[..payload_len]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((Matrix::new(rows, cols, data)?, labels))
}

fn to_f32<T: Real>(values: &[T]) -> Vec<f32> {
    values.iter().map(|&v| v.as_f64() as f32).collect()
}

fn from_f32<T: Real>(values: &[f32]) -> Vec<T> {
    values.iter().map(|&v| T::of(v as f64)).collect()
}

/// Persist a labeled pool (features narrowed to `f32`).
pub fn write_pool<T: Real>(path: &Path, pool: &LabeledPool<T>) -> Result<()> {
    let m = Matrix::new(
        pool.len(),
        pool.dim(),
        to_f32(pool.features().data()),
    )?;
    write_matrix(path, &m, Some(pool.labels()))
}

/// Load a labeled pool; the file must carry labels.
pub fn read_pool<T: Real>(path: &Path) -> Result<LabeledPool<T>> {
    let (m, labels) = read_matrix(path)?;
    let labels = labels.ok_or_else(|| {
        Error::BadFormat("pool file carries no label block".into())
    })?;
    LabeledPool::new(Matrix::new(m.rows(), m.cols(), from_f32(m.data()))?, labels)
}

/// Persist a tuple batch: one row per tuple position (`n * m` rows of
/// `dim` columns) plus the position labels. The tuple size `m` is not
/// stored and must be supplied again on read.
pub fn write_tuple_batch<T: Real>(path: &Path, batch: &MTupleBatch<T>) -> Result<()> {
    let rows = batch.n() * batch.m();
    let m = Matrix::new(rows, batch.dim(), to_f32(batch.features_flat()))?;
    let labels: Vec<i8> = (0..batch.n())
        .flat_map(|i| (0..batch.m()).map(move |j| (i, j)))
        .map(|(i, j)| {
            // Reading back through the stats-side accessor keeps the
            // label block consistent with the features by construction.
            batch_label(batch, i, j)
        })
        .collect();
    write_matrix(path, &m, Some(&labels))
}

fn batch_label<T: Real>(batch: &MTupleBatch<T>, i: usize, j: usize) -> i8 {
    batch.hidden_labels()[i * batch.m() + j]
}

/// Load a tuple batch written by [`write_tuple_batch`]; `spec` supplies
/// the tuple size and dominance is re-validated.
pub fn read_tuple_batch<T: Real>(path: &Path, spec: &ProblemSpec<T>) -> Result<MTupleBatch<T>> {
    let (m, labels) = read_matrix(path)?;
    let labels =
        labels.ok_or_else(|| Error::BadFormat("tuple file carries no label block".into()))?;
    if m.rows() % spec.m() != 0 {
        return Err(Error::ShapeMismatch(format!(
            "{} rows do not divide into tuples of size {}",
            m.rows(),
            spec.m()
        )));
    }
    MTupleBatch::from_parts(spec.m(), m.cols(), from_f32(m.data()), labels)
}

/// Persist an unlabeled batch (the private labels ride along so that
/// verification statistics survive the round trip).
pub fn write_unlabeled<T: Real>(path: &Path, batch: &UnlabeledBatch<T>) -> Result<()> {
    let m = Matrix::new(batch.n(), batch.dim(), to_f32(batch.features().data()))?;
    write_matrix(path, &m, Some(batch.hidden_labels()))
}

/// Load an unlabeled batch written by [`write_unlabeled`].
pub fn read_unlabeled<T: Real>(path: &Path) -> Result<UnlabeledBatch<T>> {
    let (m, labels) = read_matrix(path)?;
    let labels =
        labels.ok_or_else(|| Error::BadFormat("batch file carries no label block".into()))?;
    UnlabeledBatch::from_parts(Matrix::new(m.rows(), m.cols(), from_f32(m.data()))?, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tuplegen::{empirical_position_stats, sample_mdp_tuples, sample_unlabeled};

    fn temp(name: &str) -> std::path::PathBuf {
        std::env::temp_dir().join(format!("mdpu-mf-{}-{name}", std::process::id()))
    }

    #[test]
    fn bare_matrix_round_trips_bit_exactly() {
        let m = Matrix::new(3, 2, vec![0.1_f32, -2.5, 1e-7, 4.0, -0.0, 3.25]).unwrap();
        let path = temp("bare");
        write_matrix(&path, &m, None).unwrap();
        let (back, labels) = read_matrix(&path).unwrap();
        fs::remove_file(&path).unwrap();
        assert!(labels.is_none());
        assert_eq!(back.rows(), 3);
        assert_eq!(back.cols(), 2);
        for (a, b) in m.data().iter().zip(back.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn labeled_matrix_round_trips() {
        let m = Matrix::new(2, 1, vec![1.0_f32, -1.0]).unwrap();
        let path = temp("labeled");
        write_matrix(&path, &m, Some(&[1, -1])).unwrap();
        let (_, labels) = read_matrix(&path).unwrap();
        fs::remove_file(&path).unwrap();
        assert_eq!(labels, Some(vec![1, -1]));
    }

    #[test]
    fn corrupted_files_are_rejected() {
        let m = Matrix::new(2, 2, vec![1.0_f32; 4]).unwrap();
        let path = temp("corrupt");
        write_matrix(&path, &m, None).unwrap();
        let mut bytes = fs::read(&path).unwrap();

        // Truncate one payload byte.
        bytes.pop();
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_matrix(&path), Err(Error::BadFormat(_))));

        // Break the magic.
        let mut bad = fs::read(&path).unwrap();
        bad.push(0);
        bad[0] = b'X';
        fs::write(&path, &bad).unwrap();
        assert!(matches!(read_matrix(&path), Err(Error::BadFormat(_))));

        // Unsupported version.
        write_matrix(&path, &m, None).unwrap();
        let mut v2 = fs::read(&path).unwrap();
        v2[4] = 9;
        fs::write(&path, &v2).unwrap();
        assert!(matches!(read_matrix(&path), Err(Error::BadFormat(_))));

        fs::remove_file(&path).unwrap();
    }

    #[test]
    fn pool_and_batches_round_trip_through_files() {
        let pool = crate::datasets::gen_gaussians::<f64>(
            50,
            &[1.5, 1.5],
            &[-1.5, -1.5],
            1.0,
            1,
        )
        .unwrap();
        let spec = ProblemSpec::new(0.5_f64, 2).unwrap();
        let tuples = sample_mdp_tuples(&pool, &spec, 40, 2).unwrap();
        let unlabeled = sample_unlabeled(&pool, 0.5, 30, 3).unwrap();

        let p1 = temp("pool");
        write_pool(&p1, &pool).unwrap();
        let pool2: LabeledPool<f64> = read_pool(&p1).unwrap();
        fs::remove_file(&p1).unwrap();
        assert_eq!(pool2.len(), pool.len());
        assert_eq!(pool2.labels(), pool.labels());
        // f64 -> f32 -> f64 narrows: equality at f32 precision.
        for (a, b) in pool.features().data().iter().zip(pool2.features().data()) {
            assert!((a - b).abs() <= a.abs() * 1e-6 + 1e-7);
        }

        let p2 = temp("tuples");
        write_tuple_batch(&p2, &tuples).unwrap();
        let tuples2: MTupleBatch<f64> = read_tuple_batch(&p2, &spec).unwrap();
        fs::remove_file(&p2).unwrap();
        assert_eq!(tuples2.n(), tuples.n());
        assert_eq!(
            empirical_position_stats(&tuples2).unwrap().negative_count_hist,
            empirical_position_stats(&tuples).unwrap().negative_count_hist,
        );

        let p3 = temp("unlabeled");
        write_unlabeled(&p3, &unlabeled).unwrap();
        let unlabeled2: UnlabeledBatch<f64> = read_unlabeled(&p3).unwrap();
        fs::remove_file(&p3).unwrap();
        assert_eq!(unlabeled2.n(), unlabeled.n());
        assert_eq!(unlabeled2.positive_fraction(), unlabeled.positive_fraction());
    }

    #[test]
    fn reading_a_pool_requires_labels() {
        let m = Matrix::new(2, 1, vec![1.0_f32, -1.0]).unwrap();
        let path = temp("nolabels");
        write_matrix(&path, &m, None).unwrap();
        assert!(matches!(
            read_pool::<f64>(&path),
            Err(Error::BadFormat(_))
        ));
        fs::remove_file(&path).unwrap();
    }

    #[test]
    fn tuple_read_validates_divisibility_and_dominance() {
        // Three rows cannot form pairs.
        let m = Matrix::new(3, 1, vec![1.0_f32, 2.0, 3.0]).unwrap();
        let path = temp("ragged");
        write_matrix(&path, &m, Some(&[1, 1, 1])).unwrap();
        let spec = ProblemSpec::new(0.5_f64, 2).unwrap();
        assert!(matches!(
            read_tuple_batch::<f64>(&path, &spec),
            Err(Error::ShapeMismatch(_))
        ));

        // A pair of negatives violates dominance on read.
        let m = Matrix::new(2, 1, vec![1.0_f32, 2.0]).unwrap();
        write_matrix(&path, &m, Some(&[-1, -1])).unwrap();
        assert!(matches!(
            read_tuple_batch::<f64>(&path, &spec),
            Err(Error::InvalidArgument(_))
        ));
        fs::remove_file(&path).unwrap();
    }
}
