use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{load_grid, parse_algorithms, parse_penalties, scheme_from_name, RunConfig};
use crate::error::CliResult;
use smfr::modelsel::Validation;

#[derive(Debug, Parser)]
#[command(name = "smfr", version, about = "Sparse multivariate factor regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic train/test data set.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Which run of the regime to draw.
        #[arg(long)]
        run: Option<u64>,
    },
    /// Fit a model with fixed penalties.
    Fit {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Cross-validate the penalties over a grid.
    Cv {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        cv: CvArgs,
    },
    /// Compare SMFR with the baselines on repeated simulated draws.
    Bench {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        cv: CvArgs,
        #[arg(long)]
        runs: Option<usize>,
        /// Comma-separated subset of smfr,lasso,ridge.
        #[arg(long)]
        algorithms: Option<String>,
    },
    /// Fully sparse PCA of a data matrix.
    Spca {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Number of components.
        #[arg(long)]
        k: Option<usize>,
        /// Also report classical PCA thresholded to this many loadings.
        #[arg(long)]
        keep: Option<usize>,
    },
    /// Apply a saved model to new predictors.
    Predict {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Fit { .. } => "fit",
            Command::Cv { .. } => "cv",
            Command::Bench { .. } => "bench",
            Command::Spca { .. } => "spca",
            Command::Predict { .. } => "predict",
        }
    }

    /// Loads the config file, if any, and layers the flags over it.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let common = match self {
            Command::Simulate { common, .. }
            | Command::Fit { common, .. }
            | Command::Cv { common, .. }
            | Command::Bench { common, .. }
            | Command::Spca { common, .. }
            | Command::Predict { common, .. } => common,
        };
        let mut cfg = match &common.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        common.apply(&mut cfg)?;
        match self {
            Command::Simulate { run, .. } => {
                if let Some(run) = run {
                    cfg.run = *run;
                }
            }
            Command::Fit { data, model, .. } => {
                data.apply(&mut cfg);
                model.apply(&mut cfg)?;
            }
            Command::Cv { data, model, cv, .. } => {
                data.apply(&mut cfg);
                model.apply(&mut cfg)?;
                cv.apply(&mut cfg)?;
            }
            Command::Bench {
                model,
                cv,
                runs,
                algorithms,
                ..
            } => {
                model.apply(&mut cfg)?;
                cv.apply(&mut cfg)?;
                if let Some(runs) = runs {
                    cfg.bench.runs = *runs;
                }
                if let Some(a) = algorithms {
                    cfg.bench.algorithms = parse_algorithms(a)?;
                }
            }
            Command::Spca { data, model, k, keep, .. } => {
                data.apply(&mut cfg);
                model.apply(&mut cfg)?;
                if let Some(k) = k {
                    cfg.spca.k = *k;
                }
                if keep.is_some() {
                    cfg.spca.keep = *keep;
                }
            }
            Command::Predict { data, model, .. } => {
                data.apply(&mut cfg);
                if model.is_some() {
                    cfg.model = model.clone();
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// basic, proximal or proxlinear.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Relative objective change that stops the outer loop.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Output directory (default: $SMFR_OUT_DIR, then the current directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl CommonArgs {
    fn apply(&self, cfg: &mut RunConfig) -> CliResult<()> {
        if let Some(seed) = self.seed {
            cfg.seed = Some(seed);
            if let Some(s) = cfg.solver.as_mut() {
                s.seed = seed;
            }
            if let Some(sim) = cfg.sim.as_mut() {
                sim.seed = seed;
            }
        }
        if self.scheme.is_some() || self.epsilon.is_some() || self.max_iters.is_some() {
            let mut solver = cfg.solver_config();
            if let Some(name) = &self.scheme {
                solver.scheme = scheme_from_name(name, solver.scheme)?;
            }
            if let Some(eps) = self.epsilon {
                solver.epsilon = eps;
            }
            if let Some(it) = self.max_iters {
                solver.max_outer_iters = it;
            }
            cfg.solver = Some(solver);
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Predictor CSV.
    #[arg(long)]
    pub x: Option<PathBuf>,
    /// Response CSV.
    #[arg(long)]
    pub y: Option<PathBuf>,
    /// The CSV files start with a header row.
    #[arg(long)]
    pub header: bool,
}

impl DataArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if self.x.is_some() {
            cfg.data.x = self.x.clone();
        }
        if self.y.is_some() {
            cfg.data.y = self.y.clone();
        }
        if self.header {
            cfg.data.header = true;
        }
    }
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Upper bound on the number of factors.
    #[arg(long)]
    pub r: Option<usize>,
    /// Fit exactly this many factors instead of searching.
    #[arg(long)]
    pub fixed_m: Option<usize>,
    /// lambda1,lambda2,lambda3
    #[arg(long)]
    pub penalties: Option<String>,
    /// Relative singular-value cutoff for the rank check.
    #[arg(long)]
    pub rank_tol: Option<f64>,
}

impl ModelArgs {
    fn apply(&self, cfg: &mut RunConfig) -> CliResult<()> {
        if self.r.is_some() {
            cfg.r = self.r;
        }
        if self.fixed_m.is_some() {
            cfg.fixed_m = self.fixed_m;
        }
        if let Some(p) = &self.penalties {
            cfg.penalties = Some(parse_penalties(p)?);
        }
        if let Some(tol) = self.rank_tol {
            cfg.rank = Some(smfr::factor_select::RankPolicy::new(tol)?);
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long)]
    pub folds: Option<usize>,
    /// JSON grid: a list of penalty triples or a grid description.
    #[arg(long)]
    pub grid: Option<PathBuf>,
}

impl CvArgs {
    fn apply(&self, cfg: &mut RunConfig) -> CliResult<()> {
        if let Some(k) = self.folds {
            cfg.validation = Some(Validation::KFold { k });
        }
        if let Some(path) = &self.grid {
            cfg.grid = Some(load_grid(path)?);
        }
        Ok(())
    }
}
