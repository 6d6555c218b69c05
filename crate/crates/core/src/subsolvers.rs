//! Exact solvers for the two convex subproblems of an alternating step.
//!
//! With `A` fixed, the `B` subproblem splits into `q` independent lassos on
//! the design `H = X A`. With `B` fixed, the `A` subproblem is an elastic
//! net on `vec(A)` whose Hessian is `(B B^T) kron (X^T X) + 2 l3 I`. Both are
//! solved by cyclic coordinate descent in ascending index order and stop on
//! the entrywise KKT residual, so the stopping rule does not depend on the
//! iteration path.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Zip};

use crate::error::{shape_err, Result, SmfrError};
use crate::linalg::solve_spd;
use crate::matrix::{dims, frobenius_sq, l11};
use crate::objective::soft_threshold;

/// Stopping rule for the coordinate-descent solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerOptions {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_sweeps: 10_000,
        }
    }
}

impl InnerOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_sweeps == 0 {
            return Err(SmfrError::InvalidConfig(format!(
                "inner tolerance must be positive and the sweep cap at least 1 (tol {}, cap {})",
                self.tol, self.max_sweeps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerSolveReport {
    /// Largest number of sweeps used by any independent block.
    pub iterations: usize,
    pub kkt_residual: f64,
    pub objective_value: f64,
    pub converged: bool,
}

impl InnerSolveReport {
    /// Turns a non-converged report into [`SmfrError::NoConvergence`].
    pub fn ensure_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(SmfrError::NoConvergence {
                iterations: self.iterations,
                residual: self.kkt_residual,
            })
        }
    }
}

/// Subgradient violation of `min 1/2 v^T G v - c^T v + lambda ||v||_1` for one
/// coordinate with smooth gradient `grad`.
#[inline]
fn violation(grad: f64, value: f64, lambda: f64) -> f64 {
    if value > 0.0 {
        (grad + lambda).abs()
    } else if value < 0.0 {
        (grad - lambda).abs()
    } else {
        (grad.abs() - lambda).max(0.0)
    }
}

/// Quadratic proximal term `weight * ||V - center||_F^2` added to a subproblem.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Prox<'a> {
    pub weight: f64,
    pub center: ArrayView2<'a, f64>,
}

/// Coordinate descent for `min 1/2 v^T G v - c^T v + lambda ||v||_1`,
/// starting from `v`. Returns `(sweeps, kkt, converged)`.
fn gram_lasso(
    g: ArrayView2<f64>,
    c: ArrayView1<f64>,
    lambda: f64,
    v: &mut Array1<f64>,
    opts: &InnerOptions,
) -> (usize, f64, bool) {
    let m = v.len();
    let kkt = |gv: &Array1<f64>, v: &Array1<f64>| {
        (0..m).fold(0.0_f64, |acc, k| acc.max(violation(gv[k] - c[k], v[k], lambda)))
    };
    let objective = |gv: &Array1<f64>, v: &Array1<f64>| {
        (0..m).map(|k| v[k] * (0.5 * gv[k] - c[k]) + lambda * v[k].abs()).sum::<f64>()
    };
    let mut gv = g.dot(v);
    let mut res = kkt(&gv, v);
    if res <= opts.tol {
        return (0, res, true);
    }
    let mut last_pattern: Vec<i8> = Vec::new();
    for sweep in 1..=opts.max_sweeps {
        let mut moved = false;
        for k in 0..m {
            let gkk = g[[k, k]];
            let old = v[k];
            let new = if gkk > 0.0 {
                soft_threshold(c[k] - gv[k] + gkk * old, lambda) / gkk
            } else {
                0.0
            };
            if new != old {
                moved = true;
                v[k] = new;
                gv.scaled_add(new - old, &g.column(k));
            }
        }
        res = kkt(&gv, v);
        let pattern: Vec<i8> = v.iter().map(|x| sign_of(*x)).collect();
        if res > opts.tol && moved && pattern == last_pattern {
            if let Some(target) = support_solve(g, c, lambda, &pattern) {
                let cand = Array1::from(face_step(v.as_slice().expect("contiguous"), &target));
                let gv_cand = g.dot(&cand);
                let res_cand = kkt(&gv_cand, &cand);
                if objective(&gv_cand, &cand) < objective(&gv, v) {
                    *v = cand;
                    gv = gv_cand;
                    res = res_cand;
                }
            }
        }
        last_pattern = pattern;
        if res <= opts.tol || !moved {
            // confirm against an exact gradient before stopping
            gv = g.dot(v);
            res = kkt(&gv, v);
            if res <= opts.tol || !moved {
                return (sweep, res, res <= opts.tol);
            }
        }
    }
    (opts.max_sweeps, res, false)
}

/// Minimizer of the lasso objective over the affine span of the current
/// support with the current signs fixed. Signs are not checked.
fn support_solve(g: ArrayView2<f64>, c: ArrayView1<f64>, lambda: f64, pattern: &[i8]) -> Option<Vec<f64>> {
    let active: Vec<usize> = (0..pattern.len()).filter(|&k| pattern[k] != 0).collect();
    let na = active.len();
    if na == 0 || na > ACTIVE_SET_LIMIT {
        return None;
    }
    let h = Array2::from_shape_fn((na, na), |(u, v)| g[[active[u], active[v]]]);
    let rhs = Array2::from_shape_fn((na, 1), |(u, _)| c[active[u]] - lambda * f64::from(pattern[active[u]]));
    let sol = solve_spd(h.view(), rhs.view()).ok()?;
    let mut out = vec![0.0; pattern.len()];
    for (u, &k) in active.iter().enumerate() {
        out[k] = sol[[u, 0]];
    }
    Some(out)
}

/// Moves from `from` toward `target` until the first coordinate reaches
/// zero, which is then dropped; reaches `target` if no sign changes.
fn face_step(from: &[f64], target: &[f64]) -> Vec<f64> {
    let mut t = 1.0_f64;
    for (&a, &b) in from.iter().zip(target) {
        if a != 0.0 && sign_of(a) != sign_of(b) {
            t = t.min(a / (a - b));
        }
    }
    from.iter()
        .zip(target)
        .map(|(&a, &b)| {
            if a != 0.0 && sign_of(a) != sign_of(b) && a / (a - b) <= t {
                0.0
            } else {
                a + t * (b - a)
            }
        })
        .collect()
}

/// Solves the `B` subproblem given Gram matrix `G = H^T H` and `C = H^T Y`,
/// optionally with a proximal term. `b` holds the starting point and
/// receives the solution.
pub(crate) fn solve_b_gram(
    g: ArrayView2<f64>,
    c: ArrayView2<f64>,
    lambda2: f64,
    prox: Option<Prox<'_>>,
    b: &mut Array2<f64>,
    opts: &InnerOptions,
) -> (usize, f64, bool) {
    let (m, q) = c.dim();
    if m == 0 || q == 0 {
        return (0, 0.0, true);
    }
    if g.iter().all(|v| *v == 0.0) && prox.is_none() {
        b.fill(0.0);
        return (0, 0.0, true);
    }
    let mut gs = g.to_owned();
    let mut cs = c.to_owned();
    if let Some(px) = prox {
        for k in 0..m {
            gs[[k, k]] += 2.0 * px.weight;
        }
        cs.scaled_add(2.0 * px.weight, &px.center);
    }
    let mut worst = (0usize, 0.0_f64, true);
    for j in 0..q {
        let mut col = b.column(j).to_owned();
        let (sw, res, ok) = gram_lasso(gs.view(), cs.column(j), lambda2, &mut col, opts);
        b.column_mut(j).assign(&col);
        worst = (worst.0.max(sw), worst.1.max(res), worst.2 && ok);
    }
    worst
}

/// Coordinate descent for the `A` subproblem
/// `min 1/2 tr(A^T S A M) - <C, A> + rho ||A||_F^2 + lambda1 ||A||_1`
/// with `S = X^T X`, `M = B B^T`, `C = X^T Y B^T`, where `rho = lambda3`
/// plus any proximal weight. `a` holds the starting point.
#[allow(clippy::too_many_arguments)]
pub(crate) fn solve_a_gram(
    s: ArrayView2<f64>,
    xty: ArrayView2<f64>,
    bmat: ArrayView2<f64>,
    lambda1: f64,
    lambda3: f64,
    prox: Option<Prox<'_>>,
    a: &mut Array2<f64>,
    opts: &InnerOptions,
) -> (usize, f64, bool) {
    let (p, m) = a.dim();
    if p == 0 || m == 0 {
        return (0, 0.0, true);
    }
    if bmat.iter().all(|v| *v == 0.0) && prox.is_none() {
        a.fill(0.0);
        return (0, 0.0, true);
    }
    let mm = bmat.dot(&bmat.t());
    let mut cc = xty.dot(&bmat.t());
    let mut rho = lambda3;
    if let Some(px) = prox {
        rho += px.weight;
        cc.scaled_add(2.0 * px.weight, &px.center);
    }
    let s = s.as_standard_layout();
    let mm = mm.as_standard_layout();
    let s_sl = s.as_slice().expect("standard layout");
    let m_sl = mm.as_slice().expect("standard layout");
    let c_sl = cc.as_slice().expect("standard layout");
    let mut a_std = a.as_standard_layout().into_owned();
    let a_sl = a_std.as_slice_mut().expect("standard layout");

    let kkt = |q: &[f64], a: &[f64]| {
        let mut worst = 0.0_f64;
        for idx in 0..p * m {
            let g = q[idx] - c_sl[idx] + 2.0 * rho * a[idx];
            worst = worst.max(violation(g, a[idx], lambda1));
        }
        worst
    };
    let objective = |q: &[f64], a: &[f64]| {
        let mut total = 0.0;
        for idx in 0..p * m {
            total += a[idx] * (0.5 * q[idx] - c_sl[idx] + rho * a[idx]) + lambda1 * a[idx].abs();
        }
        total
    };
    let exact_q = |a: &[f64]| {
        let av = ArrayView2::from_shape((p, m), a).expect("p x m");
        let q = s.dot(&av).dot(&mm);
        q.into_raw_vec_and_offset().0
    };

    let mut q = exact_q(a_sl);
    let mut res = kkt(&q, a_sl);
    let mut outcome = (0, res, res <= opts.tol);
    if !outcome.2 {
        outcome = (opts.max_sweeps, res, false);
        let mut last_pattern: Vec<i8> = Vec::new();
        for sweep in 1..=opts.max_sweeps {
            let mut moved = false;
            for k in 0..m {
                let mkk = m_sl[k * m + k];
                let m_row = &m_sl[k * m..(k + 1) * m];
                for i in 0..p {
                    let sii = s_sl[i * p + i];
                    let idx = i * m + k;
                    let old = a_sl[idx];
                    let z = c_sl[idx] - q[idx] + sii * mkk * old;
                    let new = soft_threshold(z, lambda1) / (sii * mkk + 2.0 * rho);
                    if new != old {
                        moved = true;
                        a_sl[idx] = new;
                        let delta = new - old;
                        let s_row = &s_sl[i * p..(i + 1) * p];
                        for (r, &sr) in s_row.iter().enumerate() {
                            if sr != 0.0 {
                                let w = delta * sr;
                                let q_row = &mut q[r * m..(r + 1) * m];
                                for (qv, &mv) in q_row.iter_mut().zip(m_row) {
                                    *qv += w * mv;
                                }
                            }
                        }
                    }
                }
            }
            res = kkt(&q, a_sl);
            let pattern: Vec<i8> = a_sl.iter().map(|v| sign_of(*v)).collect();
            if res > opts.tol && moved && pattern == last_pattern {
                if let Some(target) = active_set_solve(s_sl, m_sl, c_sl, rho, lambda1, p, m, &pattern) {
                    let cand = face_step(a_sl, &target);
                    let q_cand = exact_q(&cand);
                    let res_cand = kkt(&q_cand, &cand);
                    if objective(&q_cand, &cand) < objective(&exact_q(a_sl), a_sl) {
                        a_sl.copy_from_slice(&cand);
                        q = q_cand;
                        res = res_cand;
                    }
                }
            }
            last_pattern = pattern;
            if res <= opts.tol || !moved {
                q = exact_q(a_sl);
                res = kkt(&q, a_sl);
                if res <= opts.tol || !moved {
                    outcome = (sweep, res, res <= opts.tol);
                    break;
                }
            }
            outcome = (sweep, res, false);
        }
    }
    a.assign(&a_std);
    outcome
}

const ACTIVE_SET_LIMIT: usize = 400;

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Minimizer of the A-step objective over the current support with the
/// current signs fixed. Signs are not checked.
#[allow(clippy::too_many_arguments)]
fn active_set_solve(
    s: &[f64],
    mm: &[f64],
    c: &[f64],
    rho: f64,
    lambda1: f64,
    p: usize,
    m: usize,
    pattern: &[i8],
) -> Option<Vec<f64>> {
    let active: Vec<usize> = (0..p * m).filter(|&idx| pattern[idx] != 0).collect();
    let na = active.len();
    if na == 0 || na > ACTIVE_SET_LIMIT {
        return None;
    }
    let mut h = Array2::<f64>::zeros((na, na));
    let mut rhs = Array2::<f64>::zeros((na, 1));
    for (u, &iu) in active.iter().enumerate() {
        let (i, k) = (iu / m, iu % m);
        for (v, &iv) in active.iter().enumerate() {
            let (j, l) = (iv / m, iv % m);
            h[[u, v]] = s[i * p + j] * mm[k * m + l];
        }
        h[[u, u]] += 2.0 * rho;
        rhs[[u, 0]] = c[iu] - lambda1 * f64::from(pattern[iu]);
    }
    let sol = solve_spd(h.view(), rhs.view()).ok()?;
    let mut out = vec![0.0; p * m];
    for (u, &iu) in active.iter().enumerate() {
        out[iu] = sol[[u, 0]];
    }
    Some(out)
}

/// Column-by-column lasso `min_B 1/2 ||Y - H B||_F^2 + lambda2 ||B||_1`,
/// started from zero.
pub fn lasso_columns(
    h: ArrayView2<f64>,
    y: ArrayView2<f64>,
    lambda2: f64,
    opts: &InnerOptions,
) -> Result<(Array2<f64>, InnerSolveReport)> {
    let start = Array2::zeros((h.ncols(), y.ncols()));
    lasso_columns_from(h, y, lambda2, start, opts)
}

/// [`lasso_columns`] from an explicit starting point.
pub fn lasso_columns_from(
    h: ArrayView2<f64>,
    y: ArrayView2<f64>,
    lambda2: f64,
    start: Array2<f64>,
    opts: &InnerOptions,
) -> Result<(Array2<f64>, InnerSolveReport)> {
    opts.validate()?;
    check_penalty("lambda2", lambda2)?;
    if h.nrows() != y.nrows() {
        return Err(shape_err("lasso_columns", format!("Y with {} rows", h.nrows()), dims(y)));
    }
    if start.dim() != (h.ncols(), y.ncols()) {
        return Err(shape_err(
            "lasso_columns",
            format!("start {}x{}", h.ncols(), y.ncols()),
            dims(start.view()),
        ));
    }
    let g = h.t().dot(&h);
    let c = h.t().dot(&y);
    let mut b = start;
    let (iterations, kkt_residual, converged) = solve_b_gram(g.view(), c.view(), lambda2, None, &mut b, opts);
    let objective_value = 0.5 * frobenius_sq((&y - &h.dot(&b)).view()) + lambda2 * l11(b.view());
    Ok((
        b,
        InnerSolveReport {
            iterations,
            kkt_residual,
            objective_value,
            converged,
        },
    ))
}

/// Elastic-net `A` step
/// `min_A 1/2 ||Y - X A B||_F^2 + lambda3 ||A||_F^2 + lambda1 ||A||_1`, started
/// from zero. The objective is strongly convex for `lambda3 > 0`.
pub fn elastic_net_a(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    b: ArrayView2<f64>,
    lambda1: f64,
    lambda3: f64,
    opts: &InnerOptions,
) -> Result<(Array2<f64>, InnerSolveReport)> {
    opts.validate()?;
    check_penalty("lambda1", lambda1)?;
    if !(lambda3 > 0.0 && lambda3.is_finite()) {
        return Err(SmfrError::InvalidConfig(format!("lambda3 must be positive, got {lambda3}")));
    }
    if x.nrows() != y.nrows() {
        return Err(shape_err("elastic_net_a", format!("Y with {} rows", x.nrows()), dims(y)));
    }
    if b.ncols() != y.ncols() {
        return Err(shape_err("elastic_net_a", format!("B with {} columns", y.ncols()), dims(b)));
    }
    let s = x.t().dot(&x);
    let xty = x.t().dot(&y);
    let mut a = Array2::zeros((x.ncols(), b.nrows()));
    let (iterations, kkt_residual, converged) =
        solve_a_gram(s.view(), xty.view(), b, lambda1, lambda3, None, &mut a, opts);
    let r = &y - &x.dot(&a).dot(&b);
    let objective_value =
        0.5 * frobenius_sq(r.view()) + lambda3 * frobenius_sq(a.view()) + lambda1 * l11(a.view());
    Ok((
        a,
        InnerSolveReport {
            iterations,
            kkt_residual,
            objective_value,
            converged,
        },
    ))
}

fn check_penalty(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(SmfrError::InvalidConfig(format!("{name} must be non-negative, got {v}")))
    }
}

/// Largest entrywise subgradient violation of the `B` subproblem at `B`.
pub fn kkt_residual_b(h: ArrayView2<f64>, y: ArrayView2<f64>, b: ArrayView2<f64>, lambda2: f64) -> f64 {
    let grad = h.t().dot(&(h.dot(&b) - y));
    max_violation(grad.view(), b, lambda2)
}

/// Largest entrywise subgradient violation of the `A` subproblem at `A`.
pub fn kkt_residual_a(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    a: ArrayView2<f64>,
    b: ArrayView2<f64>,
    lambda1: f64,
    lambda3: f64,
) -> f64 {
    let r = x.dot(&a).dot(&b) - y;
    let mut grad = x.t().dot(&r.dot(&b.t()));
    grad.scaled_add(2.0 * lambda3, &a);
    max_violation(grad.view(), a, lambda1)
}

pub(crate) fn max_violation(grad: ArrayView2<f64>, v: ArrayView2<f64>, lambda: f64) -> f64 {
    let mut worst = 0.0_f64;
    Zip::from(grad)
        .and(v)
        .for_each(|&g, &x| worst = worst.max(violation(g, x, lambda)));
    worst
}
