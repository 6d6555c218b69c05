//! Dense row-major matrices and the small set of norms the solvers need.

use std::ops::Deref;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmfrError};

/// A row-major matrix whose entries are all finite.
///
/// Finiteness is checked once at construction; every routine downstream may
/// assume it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Array2<f64>", into = "Array2<f64>")]
pub struct DenseMatrix(Array2<f64>);

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(SmfrError::BadLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        let arr = Array2::from_shape_vec((rows, cols), data).expect("length checked above");
        Self::from_array(arr)
    }

    pub fn from_array(arr: Array2<f64>) -> Result<Self> {
        if let Some(((row, col), _)) = arr.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(SmfrError::NonFinite { row, col });
        }
        Ok(Self(arr.as_standard_layout().into_owned()))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(Array2::zeros((rows, cols)))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

impl Deref for DenseMatrix {
    type Target = Array2<f64>;

    fn deref(&self) -> &Array2<f64> {
        &self.0
    }
}

impl TryFrom<Array2<f64>> for DenseMatrix {
    type Error = SmfrError;

    fn try_from(arr: Array2<f64>) -> Result<Self> {
        Self::from_array(arr)
    }
}

impl From<DenseMatrix> for Array2<f64> {
    fn from(m: DenseMatrix) -> Self {
        m.0
    }
}

pub fn frobenius_sq(m: ArrayView2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum()
}

pub fn frobenius(m: ArrayView2<f64>) -> f64 {
    frobenius_sq(m).sqrt()
}

/// Entrywise l1 norm, `sum |m_ij|`.
pub fn l11(m: ArrayView2<f64>) -> f64 {
    m.iter().map(|v| v.abs()).sum()
}

pub fn max_abs(m: ArrayView2<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn count_nonzero(m: ArrayView2<f64>) -> usize {
    m.iter().filter(|v| **v != 0.0).count()
}

pub(crate) fn dims(m: ArrayView2<f64>) -> String {
    format!("{}x{}", m.nrows(), m.ncols())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_non_finite_entries() {
        let err = DenseMatrix::new(2, 2, vec![1.0, f64::NAN, 0.0, 1.0]).unwrap_err();
        assert_eq!(err, SmfrError::NonFinite { row: 0, col: 1 });
        assert!(DenseMatrix::new(1, 1, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn rejects_bad_length() {
        assert!(matches!(
            DenseMatrix::new(2, 3, vec![0.0; 5]),
            Err(SmfrError::BadLength { .. })
        ));
    }

    #[test]
    fn norms() {
        let m = array![[1.0, -2.0], [0.0, 2.0]];
        assert_eq!(frobenius_sq(m.view()), 9.0);
        assert_eq!(l11(m.view()), 5.0);
        assert_eq!(max_abs(m.view()), 2.0);
        assert_eq!(count_nonzero(m.view()), 3);
    }

    #[test]
    fn serde_rejects_nan_through_try_from() {
        let m = DenseMatrix::new(1, 2, vec![1.0, 2.0]).unwrap();
        let arr: Array2<f64> = m.clone().into();
        assert_eq!(DenseMatrix::try_from(arr).unwrap(), m);
    }
}
