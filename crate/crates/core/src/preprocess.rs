//! Column centering and unit-norm scaling.
//!
//! Predictor columns are scaled to unit Euclidean norm (not unit standard
//! deviation), so `x_i^T x_j` is the sample correlation directly.

use ndarray::{Array1, Array2, Axis};

use crate::error::{shape_err, Result, SmfrError};
use crate::matrix::{dims, DenseMatrix};
use crate::model::PreprocessStats;

/// Normalized predictors, centered responses and the statistics needed to
/// map new data the same way.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub xn: Array2<f64>,
    pub yc: Array2<f64>,
    pub stats: PreprocessStats,
}

pub fn center_and_normalize(x: &DenseMatrix, y: &DenseMatrix) -> Result<Preprocessed> {
    if x.rows() != y.rows() {
        return Err(shape_err(
            "center_and_normalize",
            format!("{} rows in Y", x.rows()),
            dims(y.view()),
        ));
    }
    let n = x.rows();
    if n < 2 {
        return Err(SmfrError::TooFewRows { needed: 2, found: n });
    }

    let x_means = x.mean_axis(Axis(0)).expect("n >= 2");
    let y_means = y.mean_axis(Axis(0)).expect("n >= 2");

    let mut xn = x.as_array() - &x_means;
    let mut x_norms = Array1::zeros(x.cols());
    for (j, mut col) in xn.columns_mut().into_iter().enumerate() {
        let nrm = col.dot(&col).sqrt();
        let scale = x.column(j).iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        if nrm <= 1e-12 * scale * (n as f64).sqrt() {
            return Err(SmfrError::ConstantColumn(j));
        }
        col /= nrm;
        x_norms[j] = nrm;
    }
    let yc = y.as_array() - &y_means;

    Ok(Preprocessed {
        xn,
        yc,
        stats: PreprocessStats {
            x_means,
            x_norms,
            y_means,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    fn dm(a: Array2<f64>) -> DenseMatrix {
        DenseMatrix::from_array(a).unwrap()
    }

    #[test]
    fn hand_column() {
        let x = dm(array![[1.0], [2.0], [3.0]]);
        let y = dm(array![[1.0], [1.0], [4.0]]);
        let pre = center_and_normalize(&x, &y).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert_abs_diff_eq!(pre.xn[[0, 0]], -h, epsilon = 1e-15);
        assert_abs_diff_eq!(pre.xn[[1, 0]], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pre.xn[[2, 0]], h, epsilon = 1e-15);
        assert_eq!(pre.stats.x_means[0], 2.0);
        assert_abs_diff_eq!(pre.stats.x_norms[0], 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(pre.yc, array![[-1.0], [-1.0], [2.0]]);
    }

    #[test]
    fn already_normalized_is_identity() {
        let h = 1.0 / 2f64.sqrt();
        let x = dm(array![[-h, h], [0.0, -h], [h, 0.0]]);
        let y = dm(array![[0.0], [1.0], [-1.0]]);
        let pre = center_and_normalize(&x, &y).unwrap();
        for (a, b) in pre.xn.iter().zip(x.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        for v in pre.stats.x_means.iter() {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-15);
        }
        for v in pre.stats.x_norms.iter() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn constant_column_rejected() {
        let x = dm(array![[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]);
        let y = dm(array![[1.0], [2.0], [3.0]]);
        assert_eq!(
            center_and_normalize(&x, &y).unwrap_err(),
            SmfrError::ConstantColumn(1)
        );
    }

    #[test]
    fn row_mismatch_rejected() {
        let x = dm(array![[1.0], [2.0]]);
        let y = dm(array![[1.0], [2.0], [3.0]]);
        assert!(matches!(
            center_and_normalize(&x, &y),
            Err(SmfrError::ShapeMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn columns_are_centered_and_unit_norm(
            data in proptest::collection::vec(-100.0f64..100.0, 12),
            ydata in proptest::collection::vec(-10.0f64..10.0, 8),
        ) {
            let x = dm(Array2::from_shape_vec((4, 3), data).unwrap());
            let y = dm(Array2::from_shape_vec((4, 2), ydata).unwrap());
            if let Ok(pre) = center_and_normalize(&x, &y) {
                for col in pre.xn.columns() {
                    prop_assert!(col.sum().abs() < 1e-10);
                    prop_assert!((col.dot(&col) - 1.0).abs() < 1e-10);
                }
                for col in pre.yc.columns() {
                    prop_assert!(col.sum().abs() < 1e-10);
                }
                let back = pre.stats.transform_x(x.view()).unwrap();
                for (a, b) in back.iter().zip(pre.xn.iter()) {
                    prop_assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }
}
