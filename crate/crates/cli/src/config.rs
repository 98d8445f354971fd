//! Run configuration, read from JSON.
//!
//! ```json
//! {
//!   "problem": "stokes",
//!   "domain": {"shape": "rectangle", "width": 1.0, "height": 1.0, "nx": 64},
//!   "solver": {"m": 20, "tol": 1e-6, "grids": [32, 64, 128]},
//!   "checks": ["bounds", "frame", "lt", "dim"],
//!   "fluid": {"nu": 1.0, "f_norm": 1.0},
//!   "spectrum": {"report": "out/spectrum.json"},
//!   "family": "out/velocities.bin",
//!   "out": "out",
//!   "seed": 20061024
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stokes_spectrum::eig::{EigenOptions, DEFAULT_SEED};
use stokes_spectrum::grid::DomainSpec;
use stokes_spectrum::operators::Problem;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Bounds,
    Frame,
    Lt,
    Dim,
    All,
}

pub const ALL_CHECKS: [CheckKind; 4] = [CheckKind::Bounds, CheckKind::Frame, CheckKind::Lt, CheckKind::Dim];

/// Expands `all` and removes duplicates, keeping the canonical order.
pub fn expand_checks(list: &[CheckKind]) -> Vec<CheckKind> {
    let all = list.contains(&CheckKind::All);
    ALL_CHECKS.into_iter().filter(|c| all || list.contains(c)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_m")]
    pub m: usize,
    /// Defaults to the problem's default tolerance.
    #[serde(default)]
    pub tol: Option<f64>,
    /// Cell counts for refining the first eigenvalue; each twice the last.
    #[serde(default)]
    pub grids: Vec<usize>,
}

fn default_m() -> usize {
    10
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { m: default_m(), tol: None, grids: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidConfig {
    pub nu: f64,
    pub f_norm: f64,
    /// Taken from the spectrum when absent.
    #[serde(default)]
    pub lambda1: Option<f64>,
    /// Taken from the domain when absent.
    #[serde(default)]
    pub measure: Option<f64>,
}

/// Where precomputed eigenvalues come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectrumSource {
    /// Exact Dirichlet eigenvalues `π²((p/w)² + (q/h)²)` of a rectangle.
    AnalyticRectangle { width: f64, height: f64, count: usize },
    /// A spectrum report written by `solve`.
    Report(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_problem")]
    pub problem: Problem,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub checks: Vec<CheckKind>,
    #[serde(default)]
    pub fluid: Option<FluidConfig>,
    #[serde(default)]
    pub spectrum: Option<SpectrumSource>,
    /// Eigenfunction blob to check instead of solving.
    #[serde(default)]
    pub family: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_problem() -> Problem {
    Problem::Stokes
}

impl RunConfig {
    /// Reads the config and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.family.as_mut() {
            fix(p);
        }
        if let Some(SpectrumSource::Report(p)) = cfg.spectrum.as_mut() {
            fix(p);
        }
        if let Some(p) = cfg.out.as_mut() {
            fix(p);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.solver.m == 0 {
            return Err(CliError::Usage("solver.m must be at least 1".into()));
        }
        if let Some(tol) = self.solver.tol {
            if !(tol > 0.0) {
                return Err(CliError::Usage(format!("solver.tol must be positive, got {tol}")));
            }
        }
        let g = &self.solver.grids;
        if g.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Usage(format!("solver.grids must be strictly increasing, got {g:?}")));
        }
        if g.len() == 1 || g.windows(2).any(|w| w[1] != 2 * w[0]) {
            return Err(CliError::Usage(format!(
                "solver.grids must list at least two sizes, each double the last; got {g:?}"
            )));
        }
        Ok(())
    }

    pub fn eigen_options(&self) -> EigenOptions {
        let mut o = self.problem.default_options();
        if let Some(tol) = self.solver.tol {
            o.tol = tol;
        }
        o.seed = self.seed.unwrap_or(DEFAULT_SEED);
        o
    }

    pub fn domain(&self) -> Result<&DomainSpec, CliError> {
        self.domain.as_ref().ok_or_else(|| CliError::Usage("this command needs a \"domain\" in the config".into()))
    }

    /// Output directory, created if needed.
    pub fn out_dir(&self, flag: Option<&Path>) -> Result<PathBuf, CliError> {
        let dir = flag.map(Path::to_path_buf).or_else(|| self.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
        fs::create_dir_all(&dir)
            .map_err(|e| CliError::Usage(format!("output directory {} is not writable: {e}", dir.display())))?;
        Ok(dir)
    }
}
