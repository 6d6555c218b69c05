//! The declarative run document and its merge with command-line flags.
//!
//! Precedence is flag, then config file, then built-in default. The output
//! directory additionally falls back to `SMFR_OUT_DIR` before `.`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use smfr::altmin::{SolverConfig, UpdateScheme};
use smfr::factor_select::RankPolicy;
use smfr::modelsel::Validation;
use smfr::simbench::runner::GridSpec;
use smfr::simbench::{Algorithm, SimSpec};
use smfr::Penalties;

use crate::error::{CliError, CliResult};

pub const OUT_DIR_ENV: &str = "SMFR_OUT_DIR";

/// Largest default factor bound; the actual default is `min(this, p, q)`.
pub const DEFAULT_R_CAP: usize = 20;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub x: Option<PathBuf>,
    pub y: Option<PathBuf>,
    pub header: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub runs: usize,
    pub algorithms: Vec<Algorithm>,
    pub baseline_grid_len: usize,
    pub baseline_grid_ratio: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            runs: 20,
            algorithms: vec![Algorithm::Smfr, Algorithm::Lasso, Algorithm::Ridge],
            baseline_grid_len: 20,
            baseline_grid_ratio: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpcaConfig {
    pub k: usize,
    /// Entries kept per component by the thresholding baseline.
    pub keep: Option<usize>,
    /// Scale columns to unit norm after centering (correlation PCA).
    pub normalize: bool,
}

impl Default for SpcaConfig {
    fn default() -> Self {
        Self {
            k: 1,
            keep: None,
            normalize: true,
        }
    }
}

/// Either a full grid description or a bare list of penalty triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridFile {
    Spec(GridSpec),
    List(Vec<Penalties>),
}

impl GridFile {
    pub fn into_spec(self) -> GridSpec {
        match self {
            GridFile::Spec(g) => g,
            GridFile::List(grid) => GridSpec::Explicit { grid },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seeds the simulation, the solver initialization and the fold
    /// assignment unless those are set individually.
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub data: DataConfig,
    pub sim: Option<SimSpec>,
    /// Which simulated run `simulate` writes.
    pub run: u64,
    pub penalties: Option<Penalties>,
    pub grid: Option<GridSpec>,
    pub solver: Option<SolverConfig>,
    pub rank: Option<RankPolicy>,
    pub r: Option<usize>,
    pub fixed_m: Option<usize>,
    pub validation: Option<Validation>,
    pub cv_seed: Option<u64>,
    pub bench: BenchConfig,
    pub spca: SpcaConfig,
    pub model: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::parse(path, e))
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut s = self.solver.clone().unwrap_or_default();
        if let Some(seed) = self.seed {
            if self.solver.is_none() {
                s.seed = seed;
            }
        }
        s
    }

    pub fn sim_spec(&self) -> SimSpec {
        match &self.sim {
            Some(spec) => spec.clone(),
            None => SimSpec::factor_regime(self.seed.unwrap_or(0)),
        }
    }

    pub fn cv_seed(&self) -> u64 {
        self.cv_seed.or(self.seed).unwrap_or(0)
    }

    pub fn rank_policy(&self) -> RankPolicy {
        self.rank.unwrap_or_default()
    }

    pub fn validation(&self) -> Validation {
        self.validation.unwrap_or_default()
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn default_r(&self, p: usize, q: usize) -> usize {
        self.r.unwrap_or(DEFAULT_R_CAP.min(p).min(q))
    }

    /// Checks everything that does not depend on the data.
    pub fn validate(&self) -> CliResult<()> {
        self.solver_config().validate()?;
        self.rank_policy().validate()?;
        if let Some(p) = &self.penalties {
            p.validate_for_fit()?;
        }
        if let Some(GridSpec::Explicit { grid }) = &self.grid {
            for p in grid {
                p.validate_for_fit()?;
            }
        }
        if let Some(GridSpec::Scaled { lambda1, lambda2, lambda3 }) = &self.grid {
            if lambda1.is_empty() || lambda2.is_empty() || lambda3.is_empty() {
                return Err(CliError::Validation("scaled grid needs at least one value per penalty".into()));
            }
            if lambda1.iter().chain(lambda2).chain(lambda3).any(|v| !(v.is_finite() && *v >= 0.0)) || lambda3.iter().any(|v| *v <= 0.0) {
                return Err(CliError::Validation(
                    "grid scales must be finite and non-negative, lambda3 values positive".into(),
                ));
            }
        }
        if self.r == Some(0) || self.fixed_m == Some(0) {
            return Err(CliError::Validation("r and fixed_m must be at least 1".into()));
        }
        if let Validation::KFold { k } = self.validation() {
            if k < 2 {
                return Err(CliError::Validation(format!("need at least 2 folds, got {k}")));
            }
        }
        if let Some(sim) = &self.sim {
            sim.validate()?;
        }
        if self.bench.runs == 0 || self.bench.algorithms.is_empty() {
            return Err(CliError::Validation("bench needs at least one run and one algorithm".into()));
        }
        if self.bench.baseline_grid_len == 0 || !(self.bench.baseline_grid_ratio > 0.0 && self.bench.baseline_grid_ratio <= 1.0) {
            return Err(CliError::Validation("baseline grid needs a positive length and a ratio in (0, 1]".into()));
        }
        if self.spca.k == 0 {
            return Err(CliError::Validation("spca needs k >= 1".into()));
        }
        Ok(())
    }
}

/// `basic`, `proximal` or `proxlinear`, keeping any parameters the config
/// already gives for the same scheme.
pub fn scheme_from_name(name: &str, current: UpdateScheme) -> CliResult<UpdateScheme> {
    match (name, current) {
        ("basic", _) => Ok(UpdateScheme::Basic),
        ("proximal", s @ UpdateScheme::Proximal { .. }) => Ok(s),
        ("proximal", _) => Ok(UpdateScheme::Proximal { alpha: 1.0, beta: 1.0 }),
        ("proxlinear", s @ UpdateScheme::ProxLinear { .. }) => Ok(s),
        ("proxlinear", _) => Ok(UpdateScheme::default()),
        _ => Err(CliError::Validation(format!(
            "unknown scheme {name:?}; expected basic, proximal or proxlinear"
        ))),
    }
}

/// Parses `l1,l2,l3`.
pub fn parse_penalties(s: &str) -> CliResult<Penalties> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(CliError::Validation(format!(
            "penalties must be three comma-separated numbers, got {s:?}"
        )));
    }
    let mut v = [0.0; 3];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|_| CliError::Validation(format!("not a number in penalties: {part:?}")))?;
    }
    Ok(Penalties::new(v[0], v[1], v[2])?)
}

pub fn parse_algorithms(s: &str) -> CliResult<Vec<Algorithm>> {
    s.split(',')
        .map(|name| match name.trim() {
            "smfr" => Ok(Algorithm::Smfr),
            "lasso" => Ok(Algorithm::Lasso),
            "ridge" => Ok(Algorithm::Ridge),
            other => Err(CliError::Validation(format!(
                "unknown algorithm {other:?}; expected smfr, lasso or ridge"
            ))),
        })
        .collect()
}

pub fn load_grid(path: &Path) -> CliResult<GridSpec> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let grid: GridFile = serde_json::from_str(&text).map_err(|e| CliError::parse(path, e))?;
    Ok(grid.into_spec())
}
