//! One function per subcommand. Each builds its outputs in memory; the
//! caller writes them only if the whole command succeeded.

use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2, Axis};
use serde::Serialize;
use serde_json::json;
use smfr::altmin::{fit_fixed_m, FitTrace};
use smfr::factor_select::{numerical_rank, select_factors};
use smfr::fspca::{adjusted_explained_variance, classical_pca, fit_spca, thresholding_baseline};
use smfr::matrix::{count_nonzero, l11};
use smfr::modelsel::{cv_select, lambda_max, CvPlan, SmfrFitSettings};
use smfr::preprocess::{center_and_normalize, Preprocessed};
use smfr::simbench::reference;
use smfr::simbench::runner::{run_regime, AlgorithmSummary, GridSpec, RegimeReport, RunSettings};
use smfr::simbench::{prediction_mse, Algorithm, SimData, SimSpec, Structure};
use smfr::{DenseMatrix, FactorModel, Penalties};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{fmt_f64, matrix_csv, opt_f64, read_matrix, table_csv, Outputs};
use crate::persist::{Fingerprint, PersistedModel, TraceSummary};

fn require<'a>(path: &'a Option<PathBuf>, what: &str) -> CliResult<&'a Path> {
    path.as_deref()
        .ok_or_else(|| CliError::Validation(format!("{what} is required")))
}

/// Reads `--x` and `--y` and checks their row counts agree.
fn read_xy(cfg: &RunConfig) -> CliResult<(Array2<f64>, Array2<f64>)> {
    let xp = require(&cfg.data.x, "predictor file (--x)")?;
    let yp = require(&cfg.data.y, "response file (--y)")?;
    let x = read_matrix(xp, cfg.data.header)?;
    let y = read_matrix(yp, cfg.data.header)?;
    if x.nrows() != y.nrows() {
        return Err(CliError::Validation(format!(
            "shape mismatch: {} has {} rows but {} has {}",
            xp.display(),
            x.nrows(),
            yp.display(),
            y.nrows()
        )));
    }
    Ok((x, y))
}

fn preprocess(x: &Array2<f64>, y: &Array2<f64>) -> CliResult<Preprocessed> {
    Ok(center_and_normalize(
        &DenseMatrix::from_array(x.clone())?,
        &DenseMatrix::from_array(y.clone())?,
    )?)
}

fn check_r(r: usize, p: usize, q: usize) -> CliResult<()> {
    if r > p.min(q) {
        return Err(CliError::Validation(format!(
            "r={r} exceeds min(p, q) = {}",
            p.min(q)
        )));
    }
    Ok(())
}

fn penalties_for_fit(cfg: &RunConfig) -> CliResult<Penalties> {
    cfg.penalties.ok_or_else(|| {
        CliError::Validation("penalties are required (--penalties l1,l2,l3); use `cv` to choose them".into())
    })
}

pub fn simulate(cfg: &RunConfig) -> CliResult<Outputs> {
    let spec = cfg.sim_spec();
    spec.validate()?;
    let data = SimData::generate(&spec, cfg.run)?;
    let mut out = Outputs::new(cfg.out_dir());
    out.add("x.csv", matrix_csv(data.x_train.view()));
    out.add("y.csv", matrix_csv(data.y_train.view()));
    out.add("d.csv", matrix_csv(data.d_true.view()));
    if let (Some(a), Some(b)) = (&data.a_true, &data.b_true) {
        out.add("a.csv", matrix_csv(a.view()));
        out.add("b.csv", matrix_csv(b.view()));
    }
    out.add("x_test.csv", matrix_csv(data.x_test.view()));
    out.add("y_test.csv", matrix_csv(data.y_test.view()));
    let files: Vec<String> = out.names().iter().map(|s| s.to_string()).collect();
    out.add_json(
        "manifest.json",
        &json!({
            "command": "simulate",
            "spec": spec,
            "run": cfg.run,
            "seed": spec.seed,
            "files": files,
            "shapes": {
                "x": [data.x_train.nrows(), data.x_train.ncols()],
                "y": [data.y_train.nrows(), data.y_train.ncols()],
                "x_test": [data.x_test.nrows(), data.x_test.ncols()],
            },
        }),
    )?;
    Ok(out)
}

#[derive(Serialize)]
struct AttemptReport {
    m: usize,
    rank_a: usize,
    rank_b: usize,
    accepted: bool,
    iterations: usize,
    final_objective: f64,
    termination: smfr::altmin::Termination,
}

#[derive(Serialize)]
struct Sparsity {
    a_nonzeros: usize,
    b_nonzeros: usize,
    d_nonzeros: usize,
    a_zero_rows: usize,
    a_l1: f64,
    b_l1: f64,
}

fn sparsity(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Sparsity {
    let d = a.dot(&b);
    Sparsity {
        a_nonzeros: count_nonzero(a),
        b_nonzeros: count_nonzero(b),
        d_nonzeros: count_nonzero(d.view()),
        a_zero_rows: a.rows().into_iter().filter(|r| r.iter().all(|v| *v == 0.0)).count(),
        a_l1: l11(a),
        b_l1: l11(b),
    }
}

fn trace_csv(traces: &[(usize, &FitTrace)]) -> String {
    let mut rows = Vec::new();
    for (m, t) in traces {
        rows.push(vec![m.to_string(), "0".into(), String::new(), fmt_f64(t.f0), "false".into()]);
        for (i, r) in t.records.iter().enumerate() {
            rows.push(vec![
                m.to_string(),
                (i + 1).to_string(),
                fmt_f64(r.f_half),
                fmt_f64(r.f),
                r.restarted.to_string(),
            ]);
        }
    }
    table_csv(&["m", "iteration", "f_half", "f", "restarted"], &rows)
}

pub fn fit(cfg: &RunConfig) -> CliResult<Outputs> {
    let (x, y) = read_xy(cfg)?;
    let pen = penalties_for_fit(cfg)?;
    let solver = cfg.solver_config();
    let policy = cfg.rank_policy();
    let data = preprocess(&x, &y)?;
    let (p, q) = (x.ncols(), y.ncols());

    let (a, b, attempts, traces): (Array2<f64>, Array2<f64>, Vec<AttemptReport>, Vec<(usize, FitTrace)>) = match cfg.fixed_m {
        Some(m) => {
            check_r(m, p, q)?;
            let fit = fit_fixed_m(data.xn.view(), data.yc.view(), m, &pen, &solver)?;
            let rank_a = numerical_rank(fit.a.view(), &policy);
            let rank_b = numerical_rank(fit.b.view(), &policy);
            if rank_a < m || rank_b < m {
                log::warn!("fixed m={m} is rank deficient: rank(A)={rank_a}, rank(B)={rank_b}");
            }
            let rep = AttemptReport {
                m,
                rank_a,
                rank_b,
                accepted: rank_a == m && rank_b == m,
                iterations: fit.trace.iterations(),
                final_objective: fit.trace.final_f(),
                termination: fit.trace.termination,
            };
            (fit.a, fit.b, vec![rep], vec![(m, fit.trace)])
        }
        None => {
            let r = cfg.default_r(p, q);
            check_r(r, p, q)?;
            let sel = select_factors(data.xn.view(), data.yc.view(), r, &pen, &solver, &policy)?;
            let reps = sel
                .attempts
                .iter()
                .map(|at| AttemptReport {
                    m: at.m,
                    rank_a: at.rank_a,
                    rank_b: at.rank_b,
                    accepted: at.accepted(),
                    iterations: at.trace.iterations(),
                    final_objective: at.trace.final_f(),
                    termination: at.trace.termination,
                })
                .collect();
            let traces = sel.attempts.into_iter().map(|at| (at.m, at.trace)).collect();
            (sel.a_hat, sel.b_hat, reps, traces)
        }
    };

    let model = FactorModel::new(a, b, pen, data.stats.clone())?;
    let fitted = model.predict(x.view())?;
    let in_sample_mse = prediction_mse(fitted.view(), y.view())?;
    let plain: Vec<FitTrace> = traces.iter().map(|(_, t)| t.clone()).collect();
    let accepted = plain.last().expect("at least one attempt");
    let settings = json!({
        "penalties": pen,
        "r": cfg.fixed_m.unwrap_or_else(|| cfg.default_r(p, q)),
        "fixed_m": cfg.fixed_m,
        "solver": solver,
        "rank": policy,
        "data": cfg.data,
    });
    let persisted = PersistedModel::new(
        model.clone(),
        settings.clone(),
        TraceSummary::from_traces(&plain),
        Fingerprint::of(x.view()),
    );

    let mut out = Outputs::new(cfg.out_dir());
    out.add("model.json", persisted.to_json()?);
    out.add_json(
        "fit_report.json",
        &json!({
            "command": "fit",
            "m_hat": model.m_hat,
            "settings": settings,
            "attempts": attempts,
            "objective": accepted.f_values(),
            "termination": accepted.termination,
            "sparsity": sparsity(model.a_hat.view(), model.b_hat.view()),
            "in_sample_mse": in_sample_mse,
            "n": x.nrows(),
            "p": p,
            "q": q,
        }),
    )?;
    let refs: Vec<(usize, &FitTrace)> = traces.iter().map(|(m, t)| (*m, t)).collect();
    out.add("trace.csv", trace_csv(&refs));
    Ok(out)
}

pub fn cv(cfg: &RunConfig) -> CliResult<Outputs> {
    let (x, y) = read_xy(cfg)?;
    let data = preprocess(&x, &y)?;
    let (p, q) = (x.ncols(), y.ncols());
    let r = cfg.default_r(p, q);
    check_r(r, p, q)?;
    let lmax = lambda_max(data.xn.view(), data.yc.view());
    let grid_spec = cfg.grid.clone().unwrap_or_default();
    let grid = grid_spec.resolve(lmax);
    let validation = cfg.validation();
    let plan = CvPlan::new(x.nrows(), validation, cfg.cv_seed())?;
    let settings = SmfrFitSettings {
        r,
        solver: cfg.solver_config(),
        rank: cfg.rank_policy(),
    };
    let outcome = cv_select(x.view(), y.view(), &grid, &plan, &settings)?;

    let k = plan.splits.len();
    let mut header: Vec<String> = ["index", "lambda1", "lambda2", "lambda3", "feasible", "mean_mse"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=k).map(|f| format!("mse_fold{f}")));
    header.extend((1..=k).map(|f| format!("m_hat_fold{f}")));
    let rows: Vec<Vec<String>> = outcome
        .table
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut cells = vec![
                i.to_string(),
                fmt_f64(row.penalties.lambda1),
                fmt_f64(row.penalties.lambda2),
                fmt_f64(row.penalties.lambda3),
                row.feasible().to_string(),
                opt_f64(row.mean_mse),
            ];
            for f in 0..k {
                cells.push(opt_f64(row.fold_mse.get(f).copied()));
            }
            for f in 0..k {
                cells.push(row.fold_m_hat.get(f).map(|m| m.to_string()).unwrap_or_default());
            }
            cells
        })
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();

    let mut out = Outputs::new(cfg.out_dir());
    out.add("cv_table.csv", table_csv(&header_refs, &rows));
    out.add_json(
        "cv_report.json",
        &json!({
            "command": "cv",
            "best": outcome.best,
            "best_index": outcome.best_index,
            "best_mean_mse": outcome.table[outcome.best_index].mean_mse,
            "lambda_max": lmax,
            "grid": grid_spec,
            "grid_size": grid.len(),
            "feasible": outcome.table.iter().filter(|r| r.feasible()).count(),
            "validation": validation,
            "cv_seed": cfg.cv_seed(),
            "r": r,
            "solver": settings.solver,
            "rank": settings.rank,
        }),
    )?;
    Ok(out)
}

fn reference_name(a: Algorithm) -> &'static str {
    match a {
        Algorithm::Smfr => "SMFR",
        Algorithm::Lasso => "LASSO",
        Algorithm::Ridge => "Ridge",
    }
}

fn published(spec: &SimSpec, a: Algorithm) -> Option<(f64, f64)> {
    let (m, s) = match spec.structure {
        Structure::Factor => (Some(spec.m), Some(spec.s)),
        _ => (None, None),
    };
    let row = reference::lookup(spec.n, spec.p, spec.q, m, spec.sigma_n, s)?;
    let idx = reference::METHODS.iter().position(|n| *n == reference_name(a))?;
    Some(row.mse[idx])
}

fn summary_rows(report: &RegimeReport) -> Vec<Vec<String>> {
    report
        .summary
        .iter()
        .map(|s: &AlgorithmSummary| {
            let refr = published(&report.spec, s.algorithm);
            vec![
                s.algorithm.name().to_string(),
                s.runs_ok.to_string(),
                s.runs_failed.to_string(),
                opt_f64(s.mse_mean),
                opt_f64(s.mse_sd),
                opt_f64(s.sensitivity_mean),
                opt_f64(s.specificity_mean),
                opt_f64(s.m_hat_median),
                opt_f64(s.m_hat_mean),
                opt_f64(s.m_hat_sd),
                opt_f64(refr.map(|r| r.0)),
                opt_f64(refr.map(|r| r.1)),
            ]
        })
        .collect()
}

pub fn bench(cfg: &RunConfig) -> CliResult<Outputs> {
    let spec = cfg.sim_spec();
    spec.validate()?;
    let r = cfg.default_r(spec.p, spec.q);
    check_r(r, spec.p, spec.q)?;
    let settings = RunSettings {
        n_runs: cfg.bench.runs,
        r,
        validation: cfg.validation(),
        cv_seed: cfg.cv_seed(),
        grid: cfg.grid.clone().unwrap_or_else(GridSpec::default),
        baseline_grid_len: cfg.bench.baseline_grid_len,
        baseline_grid_ratio: cfg.bench.baseline_grid_ratio,
        solver: cfg.solver_config(),
        rank: cfg.rank_policy(),
    };
    let report = run_regime(&spec, &cfg.bench.algorithms, &settings)?;

    let runs: Vec<Vec<String>> = report
        .runs
        .iter()
        .map(|e| {
            vec![
                e.run.to_string(),
                e.algorithm.name().to_string(),
                opt_f64(e.mse),
                opt_f64(e.signed_sensitivity),
                opt_f64(e.specificity),
                e.m_hat.map(|m| m.to_string()).unwrap_or_default(),
                opt_f64(e.penalties.map(|p| p.lambda1)),
                opt_f64(e.penalties.map(|p| p.lambda2)),
                opt_f64(e.penalties.map(|p| p.lambda3)),
                opt_f64(e.lambda),
                e.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    let mut out = Outputs::new(cfg.out_dir());
    out.add(
        "bench_runs.csv",
        table_csv(
            &[
                "run",
                "algorithm",
                "mse",
                "signed_sensitivity",
                "specificity",
                "m_hat",
                "lambda1",
                "lambda2",
                "lambda3",
                "lambda",
                "error",
            ],
            &runs,
        ),
    );
    out.add(
        "bench_summary.csv",
        table_csv(
            &[
                "algorithm",
                "runs_ok",
                "runs_failed",
                "mse_mean",
                "mse_sd",
                "sensitivity_mean",
                "specificity_mean",
                "m_hat_median",
                "m_hat_mean",
                "m_hat_sd",
                "published_mse_mean",
                "published_mse_sd",
            ],
            &summary_rows(&report),
        ),
    );
    out.add_json(
        "bench_report.json",
        &json!({
            "command": "bench",
            "settings": settings,
            "report": report,
        }),
    )?;
    Ok(out)
}

pub fn spca(cfg: &RunConfig) -> CliResult<Outputs> {
    let xp = require(&cfg.data.x, "data file (--x)")?;
    let x = read_matrix(xp, cfg.data.header)?;
    let k = cfg.spca.k;
    let pen = cfg.penalties.unwrap_or(Penalties {
        lambda1: 0.0,
        lambda2: 0.0,
        lambda3: 1e-6,
    });
    let xn = if cfg.spca.normalize {
        preprocess(&x, &x)?.xn
    } else {
        let mean = x.mean_axis(Axis(0)).ok_or_else(|| CliError::Validation("empty data matrix".into()))?;
        &x - &mean
    };
    let res = fit_spca(xn.view(), k, &pen, &cfg.solver_config(), &cfg.rank_policy())?;
    let (v, s) = classical_pca(xn.view(), k);
    let total: f64 = s.iter().map(|v| v * v).sum();
    let classical: Vec<f64> = s.iter().take(k).map(|v| v * v / total).collect();
    let thresholded = match cfg.spca.keep {
        Some(keep) => {
            let t = thresholding_baseline(xn.view(), k, keep)?;
            Some(adjusted_explained_variance(xn.view(), t.view())?)
        }
        None => None,
    };
    let classical_adjusted = adjusted_explained_variance(xn.view(), v.view()).ok();

    let mut out = Outputs::new(cfg.out_dir());
    out.add("components.csv", matrix_csv(res.components.view()));
    out.add("contributions.csv", matrix_csv(res.contributions.view()));
    out.add("scores.csv", matrix_csv(res.scores.view()));
    let cumulative: Vec<f64> = res
        .adjusted_variance
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect();
    out.add_json(
        "spca_report.json",
        &json!({
            "command": "spca",
            "k": k,
            "penalties": pen,
            "normalize": cfg.spca.normalize,
            "adjusted_variance": res.adjusted_variance,
            "cumulative_adjusted_variance": cumulative,
            "loading_nonzeros": res.loading_nonzeros,
            "loading_l1": res.loading_l1,
            "classical_variance_ratio": classical,
            "classical_adjusted_variance": classical_adjusted,
            "thresholded_keep": cfg.spca.keep,
            "thresholded_adjusted_variance": thresholded,
            "trace": TraceSummary::from_traces(std::slice::from_ref(&res.trace)),
        }),
    )?;
    Ok(out)
}

pub fn predict(cfg: &RunConfig) -> CliResult<Outputs> {
    let mp = require(&cfg.model, "model file (--model)")?;
    let xp = require(&cfg.data.x, "predictor file (--x)")?;
    let pm = PersistedModel::load(mp)?;
    let x = read_matrix(xp, cfg.data.header)?;
    if x.ncols() != pm.fingerprint.cols {
        return Err(CliError::Validation(format!(
            "{} has {} columns but the model was fitted on {}",
            xp.display(),
            x.ncols(),
            pm.fingerprint.cols
        )));
    }
    if pm.fingerprint.matches(x.view()) {
        log::info!("predicting on the training predictors");
    } else {
        let shifted = pm.shifted_columns(x.view(), 3.0);
        if !shifted.is_empty() {
            log::warn!(
                "{} column(s) of {} have means more than 3 training sd from the training means (first: {})",
                shifted.len(),
                xp.display(),
                shifted[0]
            );
        }
    }
    let y_hat = pm.model.predict(x.view())?;
    let mut out = Outputs::new(cfg.out_dir());
    out.add("y_hat.csv", matrix_csv(y_hat.view()));
    Ok(out)
}
