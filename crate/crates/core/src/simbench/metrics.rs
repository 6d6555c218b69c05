use ndarray::ArrayView2;

use crate::error::{shape_err, Result, SmfrError};
use crate::matrix::dims;

/// `||X D - Y||_F^2 / (n q)`.
pub fn mse(x: ArrayView2<f64>, y: ArrayView2<f64>, d: ArrayView2<f64>) -> Result<f64> {
    if x.ncols() != d.nrows() || x.nrows() != y.nrows() || d.ncols() != y.ncols() {
        return Err(shape_err(
            "mse",
            format!("X n x p, D p x q, Y n x q with X {} and Y {}", dims(x), dims(y)),
            dims(d),
        ));
    }
    prediction_mse(x.dot(&d).view(), y)
}

/// Mean squared difference of two equally shaped matrices.
pub fn prediction_mse(pred: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<f64> {
    if pred.dim() != y.dim() {
        return Err(shape_err("prediction_mse", dims(y), dims(pred)));
    }
    if y.is_empty() {
        return Err(SmfrError::UndefinedMetric("mse of an empty matrix"));
    }
    let ss: f64 = pred.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(ss / y.len() as f64)
}

fn same_shape(context: &'static str, truth: ArrayView2<f64>, est: ArrayView2<f64>) -> Result<()> {
    if truth.dim() != est.dim() {
        return Err(shape_err(context, dims(truth), dims(est)));
    }
    Ok(())
}

/// Fraction of nonzero true entries whose estimate has the same sign.
pub fn signed_sensitivity(truth: ArrayView2<f64>, est: ArrayView2<f64>) -> Result<f64> {
    same_shape("signed_sensitivity", truth, est)?;
    let mut hits = 0usize;
    let mut total = 0usize;
    for (t, e) in truth.iter().zip(est.iter()) {
        if *t != 0.0 {
            total += 1;
            if t * e > 0.0 {
                hits += 1;
            }
        }
    }
    if total == 0 {
        return Err(SmfrError::UndefinedMetric("signed sensitivity with no true nonzeros"));
    }
    Ok(hits as f64 / total as f64)
}

/// Fraction of zero true entries estimated as exactly zero.
pub fn specificity(truth: ArrayView2<f64>, est: ArrayView2<f64>) -> Result<f64> {
    same_shape("specificity", truth, est)?;
    let mut hits = 0usize;
    let mut total = 0usize;
    for (t, e) in truth.iter().zip(est.iter()) {
        if *t == 0.0 {
            total += 1;
            if *e == 0.0 {
                hits += 1;
            }
        }
    }
    if total == 0 {
        return Err(SmfrError::UndefinedMetric("specificity with no true zeros"));
    }
    Ok(hits as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn mse_examples() {
        let x = array![[1.0], [1.0]];
        let y = array![[1.0], [3.0]];
        assert_eq!(mse(x.view(), y.view(), array![[1.0]].view()).unwrap(), 2.0);
        assert_eq!(mse(x.view(), y.view(), array![[0.0]].view()).unwrap(), 5.0);
        let d = array![[2.0, -1.0], [0.5, 0.0]];
        let x2 = array![[1.0, 2.0], [0.0, -1.0], [3.0, 1.0]];
        assert_eq!(mse(x2.view(), x2.dot(&d).view(), d.view()).unwrap(), 0.0);
        assert!(mse(x2.view(), y.view(), d.view()).is_err());
    }

    #[test]
    fn support_metrics() {
        let truth = array![[1.0, 0.0], [0.0, -1.0]];
        let est = array![[2.0, 0.0], [0.0, 1.0]];
        assert_eq!(signed_sensitivity(truth.view(), est.view()).unwrap(), 0.5);
        assert_eq!(specificity(truth.view(), est.view()).unwrap(), 1.0);
        assert_eq!(signed_sensitivity(truth.view(), truth.view()).unwrap(), 1.0);
        let zero = Array2::zeros((2, 2));
        assert_eq!(signed_sensitivity(truth.view(), zero.view()).unwrap(), 0.0);
        assert_eq!(specificity(truth.view(), zero.view()).unwrap(), 1.0);
    }

    #[test]
    fn undefined_denominators() {
        let zero = Array2::<f64>::zeros((2, 2));
        assert!(matches!(
            signed_sensitivity(zero.view(), zero.view()),
            Err(SmfrError::UndefinedMetric(_))
        ));
        let full = Array2::<f64>::ones((2, 2));
        assert!(matches!(specificity(full.view(), full.view()), Err(SmfrError::UndefinedMetric(_))));
    }
}
