//! Exact solutions of tiny l1-penalized quadratics by enumerating sign
//! patterns.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

/// Solves `m x = rhs` by Gaussian elimination with partial pivoting.
/// Returns `None` for a (numerically) singular matrix.
pub fn gauss_solve(m: ArrayView2<f64>, rhs: ArrayView1<f64>) -> Option<Array1<f64>> {
    let n = m.nrows();
    let mut a = m.to_owned();
    let mut b = rhs.to_owned();
    let scale = a.iter().fold(0.0_f64, |s, v| s.max(v.abs())).max(1e-300);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[[i, col]].abs().total_cmp(&a[[j, col]].abs()))?;
        if a[[piv, col]].abs() <= 1e-13 * scale {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap([piv, k], [col, k]);
            }
            b.swap(piv, col);
        }
        for row in col + 1..n {
            let f = a[[row, col]] / a[[col, col]];
            for k in col..n {
                a[[row, k]] -= f * a[[col, k]];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = Array1::zeros(n);
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[[row, k]] * x[k];
        }
        x[row] = s / a[[row, row]];
    }
    Some(x)
}

/// `1/2 v^T G v - c^T v + lambda ||v||_1`.
pub fn l1_quadratic(g: ArrayView2<f64>, c: ArrayView1<f64>, lambda: f64, v: ArrayView1<f64>) -> f64 {
    0.5 * v.dot(&g.dot(&v)) - c.dot(&v) + lambda * v.iter().map(|x| x.abs()).sum::<f64>()
}

/// Minimizer of `1/2 v^T G v - c^T v + lambda ||v||_1` over all `3^k` sign
/// patterns, for positive definite `G` with `k <= 12`.
///
/// For each pattern the stationarity equations on its support are solved;
/// the candidate is kept when its signs match the pattern and the zero
/// coordinates satisfy `|c_j - (G v)_j| <= lambda`. Among the survivors the
/// one with the smallest objective is returned.
pub fn enumerate_l1_quadratic(g: ArrayView2<f64>, c: ArrayView1<f64>, lambda: f64) -> Array1<f64> {
    let k = c.len();
    assert!(k <= 12, "enumeration is exponential in the dimension");
    let slack = 1e-9 * (1.0 + lambda + c.iter().fold(0.0_f64, |s, v| s.max(v.abs())));
    let mut best: Option<(f64, Array1<f64>)> = None;
    for code in 0..3usize.pow(k as u32) {
        let mut signs = vec![0i8; k];
        let mut rest = code;
        for s in signs.iter_mut() {
            *s = (rest % 3) as i8 - 1;
            rest /= 3;
        }
        let support: Vec<usize> = (0..k).filter(|&i| signs[i] != 0).collect();
        let mut v = Array1::zeros(k);
        if !support.is_empty() {
            let sub = Array2::from_shape_fn((support.len(), support.len()), |(a, b)| g[[support[a], support[b]]]);
            let rhs = Array1::from_iter(support.iter().map(|&i| c[i] - lambda * signs[i] as f64));
            let Some(sol) = gauss_solve(sub.view(), rhs.view()) else { continue };
            if support.iter().zip(sol.iter()).any(|(&i, &x)| x * signs[i] as f64 <= 0.0) {
                continue;
            }
            for (&i, &x) in support.iter().zip(sol.iter()) {
                v[i] = x;
            }
        }
        let grad = g.dot(&v) - c;
        if (0..k).any(|j| signs[j] == 0 && grad[j].abs() > lambda + slack) {
            continue;
        }
        let f = l1_quadratic(g, c, lambda, v.view());
        if best.as_ref().map_or(true, |(bf, _)| f < *bf) {
            best = Some((f, v));
        }
    }
    best.expect("a positive definite problem has a minimizer").1
}

/// `B^T (x) X`, the matrix with `vec(X A B) = (B^T (x) X) vec(A)` for
/// column-major `vec`.
pub fn kron_bt_x(b: ArrayView2<f64>, x: ArrayView2<f64>) -> Array2<f64> {
    let (m, q) = b.dim();
    let (n, p) = x.dim();
    Array2::from_shape_fn((n * q, p * m), |(r, c)| {
        let (row_x, col_y) = (r % n, r / n);
        let (col_x, k) = (c % p, c / p);
        b[[k, col_y]] * x[[row_x, col_x]]
    })
}

/// Column-major `vec`.
pub fn vec_cm(m: ArrayView2<f64>) -> Array1<f64> {
    Array1::from_iter(m.t().iter().copied())
}

/// Lasso `min_b 1/2 ||y - H b||^2 + lambda ||b||_1`.
pub fn lasso_oracle(h: ArrayView2<f64>, y: ArrayView1<f64>, lambda: f64) -> Array1<f64> {
    let g = h.t().dot(&h);
    let c = h.t().dot(&y);
    enumerate_l1_quadratic(g.view(), c.view(), lambda)
}

/// `min_A 1/2 ||Y - X A B||_F^2 + lambda3 ||A||_F^2 + lambda1 ||A||_1`,
/// solved on `vec(A)`.
pub fn elastic_net_oracle(x: ArrayView2<f64>, y: ArrayView2<f64>, b: ArrayView2<f64>, lambda1: f64, lambda3: f64) -> Array2<f64> {
    let h = kron_bt_x(b, x);
    let mut g = h.t().dot(&h);
    for i in 0..g.nrows() {
        g[[i, i]] += 2.0 * lambda3;
    }
    let c = h.t().dot(&vec_cm(y));
    let v = enumerate_l1_quadratic(g.view(), c.view(), lambda1);
    let (p, m) = (x.ncols(), b.nrows());
    Array2::from_shape_fn((p, m), |(i, k)| v[i + p * k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn gauss_matches_hand_solution() {
        let m = array![[0.0, 2.0], [3.0, 1.0]];
        let x = gauss_solve(m.view(), array![4.0, 5.0].view()).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        assert!(gauss_solve(array![[1.0, 2.0], [2.0, 4.0]].view(), array![1.0, 1.0].view()).is_none());
    }

    #[test]
    fn scalar_lasso_is_soft_threshold() {
        for (c, lam, want) in [(3.0, 1.0, 1.0), (-3.0, 1.0, -1.0), (0.5, 1.0, 0.0)] {
            let v = enumerate_l1_quadratic(array![[2.0]].view(), array![c].view(), lam);
            assert!((v[0] - want).abs() < 1e-15, "{c} {lam}");
        }
    }

    #[test]
    fn kron_identity() {
        let x = array![[1.0, 2.0], [0.5, -1.0], [3.0, 0.0]];
        let a = array![[1.0, -2.0], [0.25, 4.0]];
        let b = array![[1.0, 0.0, 2.0], [-1.0, 3.0, 0.5]];
        let lhs = vec_cm(x.dot(&a).dot(&b).view());
        let rhs = kron_bt_x(b.view(), x.view()).dot(&vec_cm(a.view()));
        for (l, r) in lhs.iter().zip(rhs.iter()) {
            assert!((l - r).abs() < 1e-12);
        }
    }
}
