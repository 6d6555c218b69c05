//! Alternating minimization for a fixed number of factors.
//!
//! Each outer iteration updates `B` with `A` fixed, then `A` with the new `B`
//! fixed. Three update rules are available:
//!
//! * `Basic` solves both convex subproblems exactly;
//! * `Proximal` adds `beta ||B - B_i||^2` and `alpha ||A - A_i||^2` to them;
//! * `ProxLinear` takes one extrapolated, soft-thresholded gradient step per
//!   block with step sizes from Lipschitz bounds, and retries without
//!   extrapolation whenever the objective fails to decrease.
//!
//! The objective is evaluated with [`crate::objective`] after every
//! half-step, so the trace is the same quantity the tests assert on.

use ndarray::{Array2, ArrayView2};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Result, SmfrError};
use crate::linalg::thin_svd;
use crate::matrix::{dims, frobenius, frobenius_sq, l11};
use crate::model::Penalties;
use crate::objective::{check_shapes, objective_from_residual, soft_threshold_matrix};
use crate::rng::rng_for;
use crate::subsolvers::{solve_a_gram, solve_b_gram, InnerOptions, Prox};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UpdateScheme {
    Basic,
    Proximal { alpha: f64, beta: f64 },
    ProxLinear { delta_omega: f64 },
}

impl Default for UpdateScheme {
    fn default() -> Self {
        UpdateScheme::ProxLinear { delta_omega: 0.99 }
    }
}

/// Starting point for `A` (and `B`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Init {
    /// `A0` with i.i.d. standard normal entries, `B0 = 0`.
    RandomNormal,
    /// Explicit matrices; with a factor search, the leading `m` columns of
    /// `a0` and rows of `b0` are used.
    FromMatrices { a0: Array2<f64>, b0: Array2<f64> },
    /// Leading singular triplets of a baseline coefficient matrix, padded
    /// with random columns when its rank falls short.
    Baseline { d: Array2<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub scheme: UpdateScheme,
    /// Stop once `|f_i - f_{i+1}| / f_i < epsilon`.
    pub epsilon: f64,
    pub max_outer_iters: usize,
    pub seed: u64,
    pub init: Init,
    pub inner_tol: f64,
    pub inner_max_sweeps: usize,
    /// Allowed range for the proximal multipliers.
    pub prox_bounds: (f64, f64),
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            scheme: UpdateScheme::default(),
            epsilon: 1e-5,
            max_outer_iters: 2000,
            seed: 0,
            init: Init::RandomNormal,
            inner_tol: 1e-8,
            inner_max_sweeps: 10_000,
            prox_bounds: (1e-4, 1e4),
        }
    }
}

impl SolverConfig {
    pub fn with_scheme(scheme: UpdateScheme) -> Self {
        Self {
            scheme,
            ..Self::default()
        }
    }

    pub fn inner(&self) -> InnerOptions {
        InnerOptions {
            tol: self.inner_tol,
            max_sweeps: self.inner_max_sweeps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SmfrError::InvalidConfig(msg));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.max_outer_iters == 0 {
            return bad("max_outer_iters must be at least 1".into());
        }
        if !(self.inner_tol > 0.0) || self.inner_max_sweeps == 0 {
            return bad("inner tolerance must be positive and the sweep cap at least 1".into());
        }
        let (lo, hi) = self.prox_bounds;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("invalid proximal bounds [{lo}, {hi}]"));
        }
        match self.scheme {
            UpdateScheme::Basic => {}
            UpdateScheme::Proximal { alpha, beta } => {
                if !(lo..=hi).contains(&alpha) || !(lo..=hi).contains(&beta) {
                    return bad(format!(
                        "proximal multipliers alpha={alpha}, beta={beta} outside [{lo}, {hi}]"
                    ));
                }
            }
            UpdateScheme::ProxLinear { delta_omega } => {
                if !(0.0..1.0).contains(&delta_omega) {
                    return bad(format!("delta_omega must lie in [0, 1), got {delta_omega}"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Relative change in `f` fell below epsilon.
    Converged,
    /// `f` reached exactly zero.
    PerfectFit,
    IterationCap,
}

/// One outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// `f(A_i, B_{i+1})`, after the `B` half-step.
    pub f_half: f64,
    /// `f(A_{i+1}, B_{i+1})`.
    pub f: f64,
    pub step_a: f64,
    pub step_b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub omega_a: f64,
    pub omega_b: f64,
    pub restarted: bool,
    pub inner_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitTrace {
    /// Objective at the starting point.
    pub f0: f64,
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
}

impl FitTrace {
    pub fn final_f(&self) -> f64 {
        self.records.last().map_or(self.f0, |r| r.f)
    }

    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn restarts(&self) -> usize {
        self.records.iter().filter(|r| r.restarted).count()
    }

    pub fn inner_failures(&self) -> usize {
        self.records.iter().filter(|r| !r.inner_converged).count()
    }

    /// Objective values `f0, f1, ...`.
    pub fn f_values(&self) -> Vec<f64> {
        std::iter::once(self.f0)
            .chain(self.records.iter().map(|r| r.f))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct FitOutput {
    pub a: Array2<f64>,
    pub b: Array2<f64>,
    pub trace: FitTrace,
}

/// Data-dependent quantities reused by every iteration of a fit.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    x: ArrayView2<'a, f64>,
    y: ArrayView2<'a, f64>,
    xtx: Array2<f64>,
    xty: Array2<f64>,
    xtx_norm: f64,
    pen: Penalties,
}

impl<'a> Problem<'a> {
    pub fn new(x: ArrayView2<'a, f64>, y: ArrayView2<'a, f64>, pen: Penalties) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(shape_err("Problem", format!("Y with {} rows", x.nrows()), dims(y)));
        }
        pen.validate_for_fit()?;
        let xtx = x.t().dot(&x);
        let xty = x.t().dot(&y);
        // ||X X^T||_F equals ||X^T X||_F
        let xtx_norm = frobenius(xtx.view());
        Ok(Self {
            x,
            y,
            xtx,
            xty,
            xtx_norm,
            pen,
        })
    }

    pub fn penalties(&self) -> &Penalties {
        &self.pen
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn q(&self) -> usize {
        self.y.ncols()
    }

    fn wide(&self) -> bool {
        self.x.nrows() < self.x.ncols()
    }

    pub fn objective(&self, a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
        let r = &self.y - &self.x.dot(&a).dot(&b);
        objective_from_residual(r.view(), a, b, &self.pen)
    }

    /// `f(A_old, B_old) - f(A_new, B_new)`, evaluated from the iterate
    /// differences so that it keeps full relative precision when the change
    /// is far below the rounding level of `f` itself.
    pub fn objective_decrease(
        &self,
        a_old: ArrayView2<f64>,
        b_old: ArrayView2<f64>,
        a_new: ArrayView2<f64>,
        b_new: ArrayView2<f64>,
    ) -> f64 {
        let da = &a_new - &a_old;
        let db = &b_new - &b_old;
        let dd = da.dot(&b_new) + a_old.dot(&db);
        let xdd = self.x.dot(&dd);
        let r_old = &self.y - &self.x.dot(&a_old).dot(&b_old);
        let mut fit = 0.0;
        for (d, r) in xdd.iter().zip(r_old.iter()) {
            fit += d * r - 0.5 * d * d;
        }
        let abs_change = |new: ArrayView2<f64>, old: ArrayView2<f64>| -> f64 {
            new.iter().zip(old.iter()).map(|(n, o)| o.abs() - n.abs()).sum()
        };
        let ridge: f64 = a_new.iter().zip(a_old.iter()).map(|(n, o)| (o - n) * (o + n)).sum();
        fit + self.pen.lambda1 * abs_change(a_new, a_old) + self.pen.lambda2 * abs_change(b_new, b_old) + self.pen.lambda3 * ridge
    }

    /// `(A^T X^T X A, A^T X^T Y)`.
    fn b_system(&self, a: ArrayView2<f64>) -> (Array2<f64>, Array2<f64>) {
        if self.wide() {
            let xa = self.x.dot(&a);
            (xa.t().dot(&xa), xa.t().dot(&self.y))
        } else {
            (a.t().dot(&self.xtx.dot(&a)), a.t().dot(&self.xty))
        }
    }

    /// Smooth gradient in `B`, given `b_system(A)`.
    fn grad_b_from(gram: &Array2<f64>, cross: &Array2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
        gram.dot(&b) - cross
    }

    /// Smooth gradient in `A` including the ridge term.
    fn grad_a(&self, a: ArrayView2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
        let mut g = if self.wide() {
            let r = self.x.dot(&a).dot(&b) - self.y;
            self.x.t().dot(&r.dot(&b.t()))
        } else {
            let bbt = b.dot(&b.t());
            self.xtx.dot(&a).dot(&bbt) - self.xty.dot(&b.t())
        };
        g.scaled_add(2.0 * self.pen.lambda3, &a);
        g
    }
}

/// Iterate of the outer loop, with the history needed for extrapolation.
#[derive(Debug, Clone)]
pub struct AltMinState {
    pub a: Array2<f64>,
    pub b: Array2<f64>,
    pub f: f64,
    a_prev: Option<Array2<f64>>,
    b_prev: Option<Array2<f64>>,
    t_prev: f64,
    alpha_prev: Option<f64>,
    beta_prev: Option<f64>,
}

impl AltMinState {
    pub fn new(problem: &Problem<'_>, a: Array2<f64>, b: Array2<f64>) -> Result<Self> {
        check_shapes("AltMinState", problem.x, problem.y, a.view(), b.view())?;
        let f = problem.objective(a.view(), b.view());
        Ok(Self {
            a,
            b,
            f,
            a_prev: None,
            b_prev: None,
            t_prev: 1.0,
            alpha_prev: None,
            beta_prev: None,
        })
    }

    fn advance(&mut self, a: Array2<f64>, b: Array2<f64>, f: f64) -> (f64, f64) {
        let step_a = frobenius((&a - &self.a).view());
        let step_b = frobenius((&b - &self.b).view());
        self.a_prev = Some(std::mem::replace(&mut self.a, a));
        self.b_prev = Some(std::mem::replace(&mut self.b, b));
        self.f = f;
        (step_a, step_b)
    }
}

/// Exact `B` then exact `A` update.
pub fn step_basic(problem: &Problem<'_>, state: &mut AltMinState, inner: &InnerOptions) -> IterationRecord {
    step_exact(problem, state, inner, None)
}

/// Exact updates with proximal terms `beta ||B - B_i||^2`, `alpha ||A - A_i||^2`.
pub fn step_proximal(
    problem: &Problem<'_>,
    state: &mut AltMinState,
    alpha: f64,
    beta: f64,
    inner: &InnerOptions,
) -> IterationRecord {
    step_exact(problem, state, inner, Some((alpha, beta)))
}

fn step_exact(
    problem: &Problem<'_>,
    state: &mut AltMinState,
    inner: &InnerOptions,
    prox: Option<(f64, f64)>,
) -> IterationRecord {
    let pen = problem.pen;
    let (gram, cross) = problem.b_system(state.a.view());
    let mut b = state.b.clone();
    let b_prox = prox.map(|(_, beta)| Prox {
        weight: beta,
        center: state.b.view(),
    });
    let (_, _, ok_b) = solve_b_gram(gram.view(), cross.view(), pen.lambda2, b_prox, &mut b, inner);
    let f_half = problem.objective(state.a.view(), b.view());

    let mut a = state.a.clone();
    let a_prox = prox.map(|(alpha, _)| Prox {
        weight: alpha,
        center: state.a.view(),
    });
    let (_, _, ok_a) = solve_a_gram(
        problem.xtx.view(),
        problem.xty.view(),
        b.view(),
        pen.lambda1,
        pen.lambda3,
        a_prox,
        &mut a,
        inner,
    );
    let f = problem.objective(a.view(), b.view());
    let (step_a, step_b) = state.advance(a, b, f);
    let (alpha, beta) = prox.unwrap_or((0.0, 0.0));
    IterationRecord {
        f_half,
        f,
        step_a,
        step_b,
        alpha,
        beta,
        omega_a: 0.0,
        omega_b: 0.0,
        restarted: false,
        inner_converged: ok_a && ok_b,
    }
}

/// `t_i = (1 + sqrt(1 + 4 t_{i-1}^2)) / 2`.
pub fn next_t(t_prev: f64) -> f64 {
    (1.0 + (1.0 + 4.0 * t_prev * t_prev).sqrt()) / 2.0
}

/// Floor for the `B` step multiplier when `A_i = 0` makes its Lipschitz
/// bound vanish.
fn beta_floor(problem: &Problem<'_>) -> f64 {
    1e-8 * (1.0 + problem.xtx_norm)
}

struct LinearizedStep {
    a: Array2<f64>,
    b: Array2<f64>,
    f_half: f64,
    f: f64,
    alpha: f64,
    beta: f64,
    omega_a: f64,
    omega_b: f64,
}

fn linearized_step(problem: &Problem<'_>, state: &AltMinState, base_omega: f64, delta_omega: f64) -> LinearizedStep {
    let pen = problem.pen;
    let (gram, cross) = problem.b_system(state.a.view());
    let mut beta = frobenius(gram.view());
    if beta <= 0.0 {
        beta = beta_floor(problem);
    }
    let omega_b = match (state.beta_prev, &state.b_prev) {
        (Some(bp), Some(_)) if base_omega > 0.0 => base_omega.min(delta_omega * (bp / beta).sqrt()),
        _ => 0.0,
    };
    let b_tilde = match &state.b_prev {
        Some(prev) if omega_b > 0.0 => &state.b + &((&state.b - prev) * omega_b),
        _ => state.b.clone(),
    };
    let grad = Problem::grad_b_from(&gram, &cross, b_tilde.view());
    let mut b = b_tilde - grad / beta;
    soft_threshold_matrix(&mut b, pen.lambda2 / beta);
    let f_half = problem.objective(state.a.view(), b.view());

    let bbt = b.dot(&b.t());
    let alpha = problem.xtx_norm * frobenius(bbt.view()) + 2.0 * pen.lambda3;
    let omega_a = match (state.alpha_prev, &state.a_prev) {
        (Some(ap), Some(_)) if base_omega > 0.0 => base_omega.min(delta_omega * (ap / alpha).sqrt()),
        _ => 0.0,
    };
    let a_tilde = match &state.a_prev {
        Some(prev) if omega_a > 0.0 => &state.a + &((&state.a - prev) * omega_a),
        _ => state.a.clone(),
    };
    let grad = problem.grad_a(a_tilde.view(), b.view());
    let mut a = a_tilde - grad / alpha;
    soft_threshold_matrix(&mut a, pen.lambda1 / alpha);
    let f = problem.objective(a.view(), b.view());
    LinearizedStep {
        a,
        b,
        f_half,
        f,
        alpha,
        beta,
        omega_a,
        omega_b,
    }
}

/// One extrapolated prox-linear iteration. If the objective does not
/// decrease, both block updates are redone without extrapolation.
pub fn step_proxlinear(problem: &Problem<'_>, state: &mut AltMinState, delta_omega: f64) -> IterationRecord {
    let t = next_t(state.t_prev);
    let base_omega = (state.t_prev - 1.0) / t;
    let mut step = linearized_step(problem, state, base_omega, delta_omega);
    let mut restarted = false;
    if step.f >= state.f && (step.omega_a > 0.0 || step.omega_b > 0.0) {
        step = linearized_step(problem, state, 0.0, delta_omega);
        restarted = true;
    }
    state.t_prev = t;
    state.alpha_prev = Some(step.alpha);
    state.beta_prev = Some(step.beta);
    let (step_a, step_b) = state.advance(step.a, step.b, step.f);
    IterationRecord {
        f_half: step.f_half,
        f: step.f,
        step_a,
        step_b,
        alpha: step.alpha,
        beta: step.beta,
        omega_a: step.omega_a,
        omega_b: step.omega_b,
        restarted,
        inner_converged: true,
    }
}

/// `A0` with i.i.d. standard normal entries and `B0 = 0`.
pub fn init_random(p: usize, m: usize, q: usize, seed: u64) -> (Array2<f64>, Array2<f64>) {
    init_random_with(p, m, q, &mut rng_for(seed, 0))
}

pub fn init_random_with(p: usize, m: usize, q: usize, rng: &mut ChaCha8Rng) -> (Array2<f64>, Array2<f64>) {
    let a0 = Array2::from_shape_simple_fn((p, m), || StandardNormal.sample(rng));
    (a0, Array2::zeros((m, q)))
}

/// `A0 = U_m S_m`, `B0 = (V^T)_m` from the SVD of a baseline coefficient
/// matrix `D`.
pub fn init_from_baseline(d: ArrayView2<f64>, m: usize) -> Result<(Array2<f64>, Array2<f64>)> {
    let (a0, b0, rank) = baseline_factors(d, m)?;
    if rank < m {
        return Err(SmfrError::RankDeficientBaseline { rank, requested: m });
    }
    Ok((a0, b0))
}

/// Like [`init_from_baseline`], but columns beyond the numerical rank of `D`
/// are filled from the random initializer.
pub fn init_from_baseline_padded(
    d: ArrayView2<f64>,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let (mut a0, b0, rank) = baseline_factors(d, m)?;
    if rank < m {
        let (fill, _) = init_random_with(d.nrows(), m - rank, d.ncols(), rng);
        a0.slice_mut(ndarray::s![.., rank..]).assign(&fill);
    }
    Ok((a0, b0))
}

fn baseline_factors(d: ArrayView2<f64>, m: usize) -> Result<(Array2<f64>, Array2<f64>, usize)> {
    let (p, q) = d.dim();
    if m == 0 || m > p.min(q) {
        return Err(SmfrError::InvalidConfig(format!(
            "baseline initialization needs 1 <= m <= min(p, q) = {}, got {m}",
            p.min(q)
        )));
    }
    let svd = thin_svd(d);
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let rank = svd.s.iter().filter(|s| **s > 1e-12 * smax && **s > 0.0).count();
    let mut a0 = Array2::zeros((p, m));
    let mut b0 = Array2::zeros((m, q));
    for k in 0..m.min(rank) {
        a0.column_mut(k).assign(&(&svd.u.column(k) * svd.s[k]));
        b0.row_mut(k).assign(&svd.vt.row(k));
    }
    Ok((a0, b0, rank))
}

/// Resolves the configured initializer for `m` factors. `stream` separates
/// random draws between different calls under one seed.
pub(crate) fn initial_point(
    config: &SolverConfig,
    p: usize,
    m: usize,
    q: usize,
    stream: u64,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let mut rng = rng_for(config.seed, stream);
    match &config.init {
        Init::RandomNormal => Ok(init_random_with(p, m, q, &mut rng)),
        Init::FromMatrices { a0, b0 } => {
            if a0.nrows() != p || b0.ncols() != q || a0.ncols() < m || b0.nrows() < m {
                return Err(shape_err(
                    "initial matrices",
                    format!("A0 {p}x(>={m}), B0 (>={m})x{q}"),
                    format!("{} and {}", dims(a0.view()), dims(b0.view())),
                ));
            }
            Ok((
                a0.slice(ndarray::s![.., ..m]).to_owned(),
                b0.slice(ndarray::s![..m, ..]).to_owned(),
            ))
        }
        Init::Baseline { d } => init_from_baseline_padded(d.view(), m, &mut rng),
    }
}

/// Runs alternating minimization for `m` factors from the configured
/// initializer.
pub fn fit_fixed_m(
    xn: ArrayView2<f64>,
    yc: ArrayView2<f64>,
    m: usize,
    pen: &Penalties,
    config: &SolverConfig,
) -> Result<FitOutput> {
    if m == 0 {
        return Err(SmfrError::InvalidConfig("m must be at least 1".into()));
    }
    let (a0, b0) = initial_point(config, xn.ncols(), m, yc.ncols(), m as u64)?;
    fit_from(xn, yc, a0, b0, pen, config)
}

/// Runs alternating minimization from an explicit starting point.
pub fn fit_from(
    xn: ArrayView2<f64>,
    yc: ArrayView2<f64>,
    a0: Array2<f64>,
    b0: Array2<f64>,
    pen: &Penalties,
    config: &SolverConfig,
) -> Result<FitOutput> {
    config.validate()?;
    let problem = Problem::new(xn.reborrow(), yc.reborrow(), *pen)?;
    if a0.ncols() == 0 {
        return Err(SmfrError::InvalidConfig("m must be at least 1".into()));
    }
    if a0.iter().all(|v| *v == 0.0) {
        return Err(SmfrError::InvalidConfig("initial A must be nonzero".into()));
    }
    let inner = config.inner();
    let mut state = AltMinState::new(&problem, a0, b0)?;
    let f0 = state.f;
    let mut records = Vec::new();
    let mut termination = Termination::IterationCap;
    let mut best = (state.a.clone(), state.b.clone(), state.f);

    for _ in 0..config.max_outer_iters {
        if state.f == 0.0 {
            termination = Termination::PerfectFit;
            break;
        }
        let f_prev = state.f;
        let (a_prev, b_prev) = (state.a.clone(), state.b.clone());
        let rec = match config.scheme {
            UpdateScheme::Basic => step_basic(&problem, &mut state, &inner),
            UpdateScheme::Proximal { alpha, beta } => step_proximal(&problem, &mut state, alpha, beta, &inner),
            UpdateScheme::ProxLinear { delta_omega } => step_proxlinear(&problem, &mut state, delta_omega),
        };
        records.push(rec);
        if state.f <= best.2 {
            best = (state.a.clone(), state.b.clone(), state.f);
        }
        if state.f == 0.0 {
            termination = Termination::PerfectFit;
            break;
        }
        let decrease = problem.objective_decrease(a_prev.view(), b_prev.view(), state.a.view(), state.b.view());
        if decrease.abs() / f_prev < config.epsilon {
            termination = Termination::Converged;
            break;
        }
    }
    log::debug!(
        "fit m={} finished after {} iterations ({:?}), f={:.6e}",
        best.0.ncols(),
        records.len(),
        termination,
        best.2
    );
    Ok(FitOutput {
        a: best.0,
        b: best.1,
        trace: FitTrace {
            f0,
            records,
            termination,
        },
    })
}

/// Objective of a fit, recomputed from scratch.
pub fn fit_objective(xn: ArrayView2<f64>, yc: ArrayView2<f64>, fit: &FitOutput, pen: &Penalties) -> f64 {
    let r = &yc - &xn.dot(&fit.a).dot(&fit.b);
    0.5 * frobenius_sq(r.view()) + pen.lambda1 * l11(fit.a.view()) + pen.lambda2 * l11(fit.b.view()) + pen.lambda3 * frobenius_sq(fit.a.view())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn randn(seed: u64, r: usize, c: usize) -> Array2<f64> {
        let mut rng = rng_for(seed, 99);
        Array2::from_shape_simple_fn((r, c), || StandardNormal.sample(&mut rng))
    }

    #[test]
    fn t_recurrence() {
        let t1 = next_t(1.0);
        assert_abs_diff_eq!(t1, (1.0 + 5f64.sqrt()) / 2.0, epsilon = 1e-15);
        // (1 + sqrt(1 + 4 * 2.6180...)) / 2
        let t2 = next_t(t1);
        assert_abs_diff_eq!(t2, 2.193527085331054, epsilon = 1e-12);
    }

    #[test]
    fn random_init_is_seeded() {
        let (a1, b1) = init_random(6, 2, 3, 7);
        let (a2, _) = init_random(6, 2, 3, 7);
        let (a3, _) = init_random(6, 2, 3, 8);
        assert_eq!(a1, a2);
        assert_ne!(a1, a3);
        assert!(b1.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn random_init_moments() {
        let (a, _) = init_random(150, 10, 1, 3);
        let n = a.len() as f64;
        let mean = a.sum() / n;
        let var = a.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.1, "mean {mean}");
        assert!((var - 1.0).abs() < 0.2, "var {var}");
    }

    #[test]
    fn baseline_identity() {
        let (a0, b0) = init_from_baseline(Array2::eye(3).view(), 2).unwrap();
        for k in 0..2 {
            let col = a0.column(k);
            let nz: Vec<usize> = (0..3).filter(|&i| col[i].abs() > 0.5).collect();
            assert_eq!(nz.len(), 1);
            assert_abs_diff_eq!(col[nz[0]].abs(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(b0[[k, nz[0]]].abs(), 1.0, epsilon = 1e-12);
        }
        let rec = a0.dot(&b0);
        assert_abs_diff_eq!(rec.diag().sum(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn baseline_rank_one_reconstruction() {
        let u = array![[1.0], [-2.0], [0.5]];
        let v = array![[3.0, 0.0, 1.0, -1.0]];
        let d = u.dot(&v);
        let (a0, b0) = init_from_baseline(d.view(), 1).unwrap();
        for (x, y) in a0.dot(&b0).iter().zip(d.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
    }

    #[test]
    fn baseline_rank_deficiency() {
        let z = Array2::<f64>::zeros((3, 3));
        assert_eq!(
            init_from_baseline(z.view(), 1),
            Err(SmfrError::RankDeficientBaseline { rank: 0, requested: 1 })
        );
        let (a0, _) = init_from_baseline_padded(z.view(), 2, &mut rng_for(1, 1)).unwrap();
        assert!(a0.iter().all(|v| *v != 0.0));
    }

    #[test]
    fn invalid_configs() {
        let x = randn(1, 6, 3);
        let y = randn(2, 6, 2);
        let pen0 = Penalties::new(0.1, 0.1, 0.0).unwrap();
        assert!(matches!(
            fit_fixed_m(x.view(), y.view(), 1, &pen0, &SolverConfig::default()),
            Err(SmfrError::InvalidConfig(_))
        ));
        let pen = Penalties::new(0.1, 0.1, 0.1).unwrap();
        let cfg = SolverConfig {
            init: Init::FromMatrices {
                a0: Array2::zeros((3, 1)),
                b0: Array2::zeros((1, 2)),
            },
            ..SolverConfig::default()
        };
        assert!(matches!(
            fit_fixed_m(x.view(), y.view(), 1, &pen, &cfg),
            Err(SmfrError::InvalidConfig(_))
        ));
        let cfg = SolverConfig::with_scheme(UpdateScheme::ProxLinear { delta_omega: 1.0 });
        assert!(cfg.validate().is_err());
        let cfg = SolverConfig::with_scheme(UpdateScheme::Proximal { alpha: 1e-9, beta: 1.0 });
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zero_state_is_absorbing() {
        let x = randn(3, 8, 4);
        let y = randn(4, 8, 3);
        let problem = Problem::new(x.view(), y.view(), Penalties::new(0.1, 0.1, 0.1).unwrap()).unwrap();
        let mut st = AltMinState::new(&problem, Array2::zeros((4, 2)), randn(5, 2, 3)).unwrap();
        step_basic(&problem, &mut st, &InnerOptions::default());
        assert!(st.a.iter().all(|v| *v == 0.0));
        assert!(st.b.iter().all(|v| *v == 0.0));
        let f = st.f;
        step_basic(&problem, &mut st, &InnerOptions::default());
        assert_eq!(st.f, f);
    }

    #[test]
    fn proxlinear_without_penalties_is_a_gradient_step() {
        let x = randn(6, 10, 5);
        let y = randn(7, 10, 4);
        let pen = Penalties::new(0.0, 0.0, 0.3).unwrap();
        let problem = Problem::new(x.view(), y.view(), pen).unwrap();
        let a = randn(8, 5, 2);
        let b = randn(9, 2, 4);
        let mut st = AltMinState::new(&problem, a.clone(), b.clone()).unwrap();
        step_proxlinear(&problem, &mut st, 0.99);

        let xa = x.dot(&a);
        let beta = frobenius(xa.t().dot(&xa).view());
        let gb = crate::objective::grad_b(x.view(), y.view(), a.view(), b.view()).unwrap();
        let b1 = &b - &(gb / beta);
        let alpha = frobenius(x.dot(&x.t()).view()) * frobenius(b1.dot(&b1.t()).view()) + 2.0 * 0.3;
        let ga = crate::objective::grad_a(x.view(), y.view(), a.view(), b1.view(), 0.3).unwrap();
        let a1 = &a - &(ga / alpha);
        for (u, v) in st.b.iter().zip(b1.iter()) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-12);
        }
        for (u, v) in st.a.iter().zip(a1.iter()) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_response_collapses_to_zero_loadings() {
        let x = randn(10, 12, 5);
        let y = Array2::zeros((12, 3));
        let pen = Penalties::new(0.1, 0.1, 0.1).unwrap();
        for scheme in [UpdateScheme::Basic, UpdateScheme::default()] {
            let cfg = SolverConfig { seed: 4, ..SolverConfig::with_scheme(scheme) };
            let fit = fit_fixed_m(x.view(), y.view(), 2, &pen, &cfg).unwrap();
            assert!(fit.b.iter().all(|v| *v == 0.0));
            assert!(fit.trace.final_f() <= fit.trace.f0);
        }
    }
}
