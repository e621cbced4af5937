use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Numerical tolerances shared by the LP engine and the geometry routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Feasibility and optimality tolerance of the simplex engine.
    pub lp: f64,
    /// Smallest pivot magnitude the simplex engine accepts.
    pub pivot: f64,
    /// Singular-value threshold for rank decisions.
    pub rank: f64,
    /// Weight threshold above which a Minkowski vertex counts as part of a face.
    pub face: f64,
    /// Weights below this are dropped from vertex solutions before counting supports.
    pub prune: f64,
    /// Distance below which two Minkowski sums are merged.
    pub merge: f64,
    /// Maximum accepted reconstruction residual of a decomposition.
    pub reconstruct: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            lp: 1e-9,
            pivot: 1e-11,
            rank: 1e-10,
            face: 1e-7,
            prune: 1e-10,
            merge: 1e-12,
            reconstruct: 1e-8,
        }
    }
}

/// Enumeration caps. Exceeding one is an error, never a silent truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Caps {
    pub minkowski: usize,
    pub subsets: usize,
    pub path_assignments: usize,
    pub tone_grid: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            minkowski: 100_000,
            subsets: 1_000_000,
            path_assignments: 100_000,
            tone_grid: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    pub tol: Tolerances,
    pub caps: Caps,
}

impl Settings {
    pub fn validate(&self) -> Result<()> {
        let t = &self.tol;
        for (name, v) in [
            ("lp", t.lp),
            ("pivot", t.pivot),
            ("rank", t.rank),
            ("face", t.face),
            ("prune", t.prune),
            ("merge", t.merge),
            ("reconstruct", t.reconstruct),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("tolerance {name} must be positive, got {v}"));
            }
        }
        let c = &self.caps;
        if c.minkowski == 0 || c.subsets == 0 || c.path_assignments == 0 || c.tone_grid == 0 {
            return invalid("enumeration caps must be at least 1");
        }
        Ok(())
    }
}
