//! Numeric residual checks of closures and branches, and the comparison
//! against the transcribed catalog of published branches.

mod catalog;
pub mod fd;
mod fidelity;
mod residual;

pub use catalog::{builtin_equation, Catalog, CatalogEntry, CatalogError, CatalogModel, Scenario};
pub use fidelity::{
    fidelity_report, system_discrepancies, DerivedBranch, DerivedRun, Discrepancy, FidelityEntry,
    BranchCheck, FidelityError, FidelityOptions, FidelityReport, MatchStatus, ModelCount, default_bindings,
};
pub use residual::{
    closure_residual, expr_z, find_locus, ode_residual, ode_residual_expr, ode_residual_on_nodes, pde_residual, sample_u, Candidate, DerivativeMethod,
    PdeProblem, ZEval,
};

use serde::{Deserialize, Serialize};
use std::fmt;

/// Relative threshold below which a residual counts as zero.
pub const EXACT_TOL: f64 = 1e-8;
/// Relative threshold above which a residual counts as a genuine failure.
pub const INCONSISTENT_TOL: f64 = 1e-3;
/// Smallest grid accepted by the residual checks.
pub const MIN_GRID_POINTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Exact,
    ConditionallyExact,
    Inconsistent,
    /// Between the two thresholds with no parameter locus to explain it.
    Unresolved,
    OutOfDomain,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Exact => "exact",
            Classification::ConditionallyExact => "conditionally-exact",
            Classification::Inconsistent => "inconsistent",
            Classification::Unresolved => "unresolved",
            Classification::OutOfDomain => "out-of-domain",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error("grid has {0} points, at least {MIN_GRID_POINTS} are needed")]
    GridTooSmall(usize),
    #[error("bad grid `{0}`")]
    BadGrid(String),
    #[error("evaluation failed at {failed} of {total} grid points (first: {first})")]
    Evaluation { failed: usize, total: usize, first: String },
    #[error("unbound symbols: {}", .0.join(", "))]
    Unbound(Vec<String>),
    #[error("{0}")]
    Setup(String),
}

pub fn classify(max_abs: f64, scale: f64, has_locus: bool, failures: usize, points: usize) -> Classification {
    if failures * 10 > points || !max_abs.is_finite() {
        Classification::OutOfDomain
    } else if max_abs <= EXACT_TOL * scale {
        Classification::Exact
    } else if has_locus {
        Classification::ConditionallyExact
    } else if max_abs > INCONSISTENT_TOL * scale {
        Classification::Inconsistent
    } else {
        Classification::Unresolved
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub target: String,
    pub grid: String,
    pub points: usize,
    pub failures: usize,
    pub max_abs: f64,
    pub median_abs: f64,
    /// Largest absolute term of the residual over the grid.
    pub scale: f64,
    /// Parameter value on which the residual vanishes identically.
    pub locus: Option<String>,
    pub first_failure: Option<String>,
    pub classification: Classification,
}

impl ResidualReport {
    /// Summarize per-point `(residual, largest term)` samples.
    pub fn from_samples(
        target: &str,
        grid: &str,
        samples: &[Result<(f64, f64), String>],
        locus: Option<String>,
    ) -> ResidualReport {
        let mut abs: Vec<f64> = Vec::new();
        let mut scale = 0.0f64;
        let mut failures = 0;
        let mut first_failure = None;
        for s in samples {
            match s {
                Ok((r, sc)) if r.is_finite() && sc.is_finite() => {
                    abs.push(r.abs());
                    scale = scale.max(*sc);
                }
                Ok((r, _)) => {
                    failures += 1;
                    first_failure.get_or_insert_with(|| format!("non-finite residual {r}"));
                }
                Err(e) => {
                    failures += 1;
                    first_failure.get_or_insert_with(|| e.clone());
                }
            }
        }
        abs.sort_by(|a, b| a.total_cmp(b));
        let max_abs = abs.last().copied().unwrap_or(f64::NAN);
        let median_abs = if abs.is_empty() {
            f64::NAN
        } else if abs.len() % 2 == 1 {
            abs[abs.len() / 2]
        } else {
            0.5 * (abs[abs.len() / 2 - 1] + abs[abs.len() / 2])
        };
        let classification = classify(max_abs, scale, locus.is_some(), failures, samples.len());
        ResidualReport {
            target: target.to_string(),
            grid: grid.to_string(),
            points: samples.len(),
            failures,
            max_abs,
            median_abs,
            scale,
            locus,
            first_failure,
            classification,
        }
    }

    /// Report for a check that could not be evaluated at all.
    pub fn out_of_domain(target: &str, grid: &str, reason: String) -> ResidualReport {
        ResidualReport {
            target: target.to_string(),
            grid: grid.to_string(),
            points: 0,
            failures: 0,
            max_abs: f64::NAN,
            median_abs: f64::NAN,
            scale: 0.0,
            locus: None,
            first_failure: Some(reason),
            classification: Classification::OutOfDomain,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n).map(|i| self.lo + step * i as f64).collect()
    }

    fn parse(s: &str) -> Result<Axis, VerifyError> {
        let bad = || VerifyError::BadGrid(s.to_string());
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].parse().map_err(|_| bad())?;
        let n: usize = parts[2].parse().map_err(|_| bad())?;
        if n < 2 || !(hi > lo) {
            return Err(bad());
        }
        Ok(Axis { lo, hi, n })
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.n)
    }
}

/// Rectangular (x, t) grid, written `x0:x1:nx,t0:t1:nt`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2d {
    pub x: Axis,
    pub t: Axis,
}

impl Default for Grid2d {
    fn default() -> Self {
        Grid2d {
            x: Axis { lo: 1.0, hi: 2.0, n: 8 },
            t: Axis { lo: 0.0, hi: 0.5, n: 8 },
        }
    }
}

impl Grid2d {
    /// Nodes in row-major order (x outer, t inner).
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let ts = self.t.points();
        self.x
            .points()
            .into_iter()
            .flat_map(|x| ts.iter().map(move |t| (x, *t)))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.x.n * self.t.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for Grid2d {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.x, self.t)
    }
}

impl std::str::FromStr for Grid2d {
    type Err = VerifyError;
    fn from_str(s: &str) -> Result<Self, VerifyError> {
        let (x, t) = s.split_once(',').ok_or_else(|| VerifyError::BadGrid(s.to_string()))?;
        Ok(Grid2d {
            x: Axis::parse(x)?,
            t: Axis::parse(t)?,
        })
    }
}
