//! Thin bridge to nalgebra for the dense decompositions (SVD, symmetric
//! eigen, Cholesky). Everything else in the crate works on ndarray.

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Result, SmfrError};

pub(crate) fn to_na(m: ArrayView2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

pub(crate) fn from_na(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Thin SVD `M = U diag(s) Vt` with singular values in descending order.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: Array2<f64>,
    pub s: Array1<f64>,
    pub vt: Array2<f64>,
}

pub fn thin_svd(m: ArrayView2<f64>) -> ThinSvd {
    if m.is_empty() {
        let k = m.nrows().min(m.ncols());
        return ThinSvd {
            u: Array2::zeros((m.nrows(), k)),
            s: Array1::zeros(k),
            vt: Array2::zeros((k, m.ncols())),
        };
    }
    let svd = SVD::new(to_na(m), true, true);
    ThinSvd {
        u: from_na(svd.u.as_ref().expect("U requested")),
        s: Array1::from_iter(svd.singular_values.iter().copied()),
        vt: from_na(svd.v_t.as_ref().expect("Vt requested")),
    }
}

/// Singular values in descending order.
pub fn singular_values(m: ArrayView2<f64>) -> Array1<f64> {
    if m.is_empty() {
        return Array1::zeros(0);
    }
    let mut s: Vec<f64> = SVD::new_unordered(to_na(m), false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Array1::from(s)
}

/// Symmetric square root `V diag(sqrt(max(l, 0))) V^T` of a symmetric
/// positive semidefinite matrix.
pub fn sym_sqrt(sigma: ArrayView2<f64>) -> Array2<f64> {
    let eig = SymmetricEigen::new(to_na(sigma));
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    let root = &eig.eigenvectors * d * eig.eigenvectors.transpose();
    from_na(&root)
}

/// Solves `A X = B` for symmetric positive definite `A` by Cholesky.
pub fn solve_spd(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<Array2<f64>> {
    let chol = nalgebra::Cholesky::new(to_na(a)).ok_or(SmfrError::SingularSystem)?;
    let x = chol.solve(&to_na(b));
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SmfrError::SingularSystem);
    }
    Ok(from_na(&x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn svd_reconstructs_and_sorts() {
        let m = array![[0.0, 2.0, 0.0], [3.0, 0.0, 1.0]];
        let svd = thin_svd(m.view());
        assert!(svd.s[0] >= svd.s[1]);
        let rec = svd.u.dot(&Array2::from_diag(&svd.s)).dot(&svd.vt);
        for (a, b) in rec.iter().zip(m.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let s = singular_values(m.view());
        assert_abs_diff_eq!(s[0], svd.s[0], epsilon = 1e-12);
    }

    #[test]
    fn sqrt_squares_back() {
        let s = array![[2.0, 0.5], [0.5, 1.0]];
        let r = sym_sqrt(s.view());
        let back = r.dot(&r);
        for (a, b) in back.iter().zip(s.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn spd_solve_and_singular() {
        let a = array![[4.0, 1.0], [1.0, 3.0]];
        let b = array![[1.0], [2.0]];
        let x = solve_spd(a.view(), b.view()).unwrap();
        let back = a.dot(&x);
        assert_abs_diff_eq!(back[[0, 0]], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(back[[1, 0]], 2.0, epsilon = 1e-12);
        let sing = array![[1.0, 1.0], [1.0, 1.0]];
        assert_eq!(solve_spd(sing.view(), b.view()), Err(SmfrError::SingularSystem));
    }
}
