//! The penalized objective
//! `f(A, B) = 1/2 ||Y - X A B||_F^2 + l1 ||A||_1 + l2 ||B||_1 + l3 ||A||_F^2`,
//! the gradients of its smooth part, and soft-thresholding.

use ndarray::{Array2, ArrayView2};

use crate::error::{shape_err, Result};
use crate::matrix::{dims, frobenius_sq, l11};
use crate::model::Penalties;

pub(crate) fn check_shapes(
    context: &'static str,
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    a: ArrayView2<f64>,
    b: ArrayView2<f64>,
) -> Result<()> {
    let (n, p) = x.dim();
    let q = y.ncols();
    let m = a.ncols();
    if y.nrows() != n {
        return Err(shape_err(context, format!("Y with {n} rows"), dims(y)));
    }
    if a.nrows() != p {
        return Err(shape_err(context, format!("A with {p} rows"), dims(a)));
    }
    if b.dim() != (m, q) {
        return Err(shape_err(context, format!("B {m}x{q}"), dims(b)));
    }
    Ok(())
}

/// `Y - X A B`.
pub fn residual(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    a: ArrayView2<f64>,
    b: ArrayView2<f64>,
) -> Array2<f64> {
    let xab = x.dot(&a).dot(&b);
    &y - &xab
}

pub fn objective(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    a: ArrayView2<f64>,
    b: ArrayView2<f64>,
    pen: &Penalties,
) -> Result<f64> {
    check_shapes("objective", x, y, a, b)?;
    let r = residual(x, y, a, b);
    Ok(objective_from_residual(r.view(), a, b, pen))
}

pub(crate) fn objective_from_residual(
    r: ArrayView2<f64>,
    a: ArrayView2<f64>,
    b: ArrayView2<f64>,
    pen: &Penalties,
) -> f64 {
    0.5 * frobenius_sq(r)
        + pen.lambda1 * l11(a)
        + pen.lambda2 * l11(b)
        + pen.lambda3 * frobenius_sq(a)
}

/// Gradient in `B` of `1/2 ||Y - X A B||_F^2`: `-A^T X^T Y + A^T X^T X A B`.
pub fn grad_b(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    a: ArrayView2<f64>,
    b: ArrayView2<f64>,
) -> Result<Array2<f64>> {
    check_shapes("grad_b", x, y, a, b)?;
    let xa = x.dot(&a);
    let r = xa.dot(&b) - y;
    Ok(xa.t().dot(&r))
}

/// Gradient in `A` of `1/2 ||Y - X A B||_F^2 + l3 ||A||_F^2`:
/// `-X^T Y B^T + X^T X A B B^T + 2 l3 A`.
pub fn grad_a(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    a: ArrayView2<f64>,
    b: ArrayView2<f64>,
    lambda3: f64,
) -> Result<Array2<f64>> {
    check_shapes("grad_a", x, y, a, b)?;
    let r = x.dot(&a).dot(&b) - y;
    let mut g = x.t().dot(&r.dot(&b.t()));
    g.scaled_add(2.0 * lambda3, &a);
    Ok(g)
}

/// `sign(v) * max(|v| - tau, 0)`.
#[inline]
pub fn soft_threshold(v: f64, tau: f64) -> f64 {
    debug_assert!(tau >= 0.0);
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        0.0
    }
}

pub fn soft_threshold_matrix(m: &mut Array2<f64>, tau: f64) {
    m.mapv_inplace(|v| soft_threshold(v, tau));
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn randn(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Array2<f64> {
        Array2::from_shape_simple_fn((r, c), || StandardNormal.sample(rng))
    }

    fn pen(l1: f64, l2: f64, l3: f64) -> Penalties {
        Penalties::new(l1, l2, l3).unwrap()
    }

    #[test]
    fn zero_factors_give_half_response_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = randn(&mut rng, 5, 4);
        let y = randn(&mut rng, 5, 3);
        let f = objective(x.view(), y.view(), Array2::zeros((4, 2)).view(), Array2::zeros((2, 3)).view(), &pen(1.0, 2.0, 3.0)).unwrap();
        assert_abs_diff_eq!(f, 0.5 * frobenius_sq(y.view()), epsilon = 1e-12);
    }

    #[test]
    fn identity_instance_hand_value() {
        let i2 = Array2::eye(2);
        let f = objective(i2.view(), i2.view(), i2.view(), i2.view(), &pen(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(f, 6.0);
    }

    #[test]
    fn penalty_free_equals_residual_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (x, y, a, b) = (randn(&mut rng, 6, 4), randn(&mut rng, 6, 3), randn(&mut rng, 4, 2), randn(&mut rng, 2, 3));
        let f = objective(x.view(), y.view(), a.view(), b.view(), &pen(0.0, 0.0, 0.0)).unwrap();
        let r = &y - &x.dot(&a).dot(&b);
        assert_eq!(f, 0.5 * frobenius_sq(r.view()));
    }

    #[test]
    fn shape_mismatch() {
        let x = Array2::zeros((3, 2));
        let y = Array2::zeros((3, 2));
        let a = Array2::zeros((3, 1));
        let b = Array2::zeros((1, 2));
        assert!(objective(x.view(), y.view(), a.view(), b.view(), &pen(0.0, 0.0, 0.0)).is_err());
        assert!(grad_b(x.view(), y.view(), a.view(), b.view()).is_err());
        assert!(grad_a(x.view(), y.view(), a.view(), Array2::zeros((2, 2)).view(), 0.0).is_err());
    }

    #[test]
    fn grad_b_zero_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = randn(&mut rng, 6, 4);
        let y = randn(&mut rng, 6, 3);
        let g = grad_b(x.view(), y.view(), Array2::zeros((4, 2)).view(), randn(&mut rng, 2, 3).view()).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));

        // exact fit: Y = X A B
        let a = randn(&mut rng, 4, 2);
        let b = randn(&mut rng, 2, 3);
        let y = x.dot(&a).dot(&b);
        let g = grad_b(x.view(), y.view(), a.view(), b.view()).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn grad_a_zero_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = randn(&mut rng, 6, 4);
        let y = randn(&mut rng, 6, 3);
        let a = randn(&mut rng, 4, 2);
        let zb = Array2::zeros((2, 3));
        let g = grad_a(x.view(), y.view(), a.view(), zb.view(), 0.0).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
        let g = grad_a(x.view(), y.view(), a.view(), zb.view(), 1.0).unwrap();
        assert_eq!(g, &a * 2.0);
    }

    #[test]
    fn soft_threshold_examples() {
        assert_abs_diff_eq!(soft_threshold(1.2, 0.5), 0.7, epsilon = 1e-15);
        assert_eq!(soft_threshold(-0.3, 0.5), 0.0);
        assert_eq!(soft_threshold(-2.5, 0.0), -2.5);
        let mut m = array![[1.0, -1.0], [0.2, 3.0]];
        soft_threshold_matrix(&mut m, 0.5);
        assert_eq!(m, array![[0.5, -0.5], [0.0, 2.5]]);
    }

    proptest! {
        #[test]
        fn soft_threshold_odd_and_nonexpansive(a in -10.0f64..10.0, b in -10.0f64..10.0, tau in 0.0f64..5.0) {
            prop_assert_eq!(soft_threshold(-a, tau), -soft_threshold(a, tau));
            prop_assert!((soft_threshold(a, tau) - soft_threshold(b, tau)).abs() <= (a - b).abs() + 1e-15);
            prop_assert_eq!(soft_threshold(a, 0.0), a);
        }

        #[test]
        fn objective_bounded_by_penalties_and_relabel_invariant(seed in 0u64..1000, l1 in 0.0f64..2.0, l2 in 0.0f64..2.0, l3 in 0.0f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (x, y, a, b) = (randn(&mut rng, 5, 4), randn(&mut rng, 5, 3), randn(&mut rng, 4, 3), randn(&mut rng, 3, 3));
            let pen = pen(l1, l2, l3);
            let f = objective(x.view(), y.view(), a.view(), b.view(), &pen).unwrap();
            let floor = l1 * l11(a.view()) + l2 * l11(b.view()) + l3 * frobenius_sq(a.view());
            prop_assert!(f >= floor - 1e-12 && floor >= 0.0);

            // permute factors: columns of A and rows of B together
            let perm = [2usize, 0, 1];
            let ap = Array2::from_shape_fn((4, 3), |(i, k)| a[[i, perm[k]]]);
            let bp = Array2::from_shape_fn((3, 3), |(k, j)| b[[perm[k], j]]);
            let fp = objective(x.view(), y.view(), ap.view(), bp.view(), &pen).unwrap();
            prop_assert!((f - fp).abs() <= 1e-10 * f.max(1.0));
        }
    }
}
