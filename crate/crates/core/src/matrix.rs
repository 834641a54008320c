//! Minimal dense row-major matrix used for feature storage.
//!
//! This is deliberately not a linear-algebra type: the crate only ever
//! needs contiguous row access, so the representation is a flat buffer
//! plus a shape, and anything resembling BLAS lives with the models.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy> Matrix<T> {
    /// Wrap a flat row-major buffer. Errors if the buffer length is not
    /// `rows * cols` or `cols` is zero while rows are present.
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows > 0 && cols == 0 {
            return Err(Error::ShapeMismatch(
                "matrix with rows must have at least one column".into(),
            ));
        }
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "buffer of {} values cannot be {rows} x {cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        assert!(i < self.rows, "row {i} out of {} rows", self.rows);
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.cols.max(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_validates_shape() {
        assert!(Matrix::new(2, 3, vec![0.0_f64; 6]).is_ok());
        assert!(Matrix::new(2, 3, vec![0.0_f64; 5]).is_err());
        assert!(Matrix::new(2, 0, vec![0.0_f64; 0]).is_err());
        assert!(Matrix::new(0, 0, Vec::<f64>::new()).is_ok());
    }

    #[test]
    fn row_access_is_contiguous_and_ordered() {
        let m = Matrix::new(2, 2, vec![1.0_f64, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.row(0), &[1.0, 2.0]);
        assert_eq!(m.row(1), &[3.0, 4.0]);
        let rows: Vec<&[f64]> = m.iter_rows().collect();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1], &[3.0, 4.0]);
    }

    #[test]
    #[should_panic(expected = "out of")]
    fn out_of_bounds_row_panics() {
        let m = Matrix::new(1, 2, vec![1.0_f64, 2.0]).unwrap();
        m.row(1);
    }
}
