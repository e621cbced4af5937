//! Constructive Shapley–Folkman decompositions.
//!
//! All three variants solve one LP over per-block weights `β_ij >= 0` with
//! `Σ_j β_ij = 1` for every block, plus a handful of coordinate rows. The simplex
//! returns a vertex, so the number of nonzero weights is at most the number of
//! rows. That count is the cardinality budget.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hulls::{check_sets, ConvexCombination, FaceDescription, PointSet};
use crate::numlin::{self, dot, norm_inf, orthonormal_frame, solve_lp_with, LpProblem, LpStatus};
use crate::settings::Settings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionKind {
    Plain,
    Refined,
    Epigraph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SFDecomposition {
    pub kind: DecompositionKind,
    pub blocks: Vec<ConvexCombination>,
    /// `z^i` for every block.
    pub points: Vec<Vec<f64>>,
    /// `k_i`, the support size of each block.
    pub cardinalities: Vec<usize>,
    pub total: usize,
    /// Face dimension `k` the budget was computed from (`m` for plain, `m - 1` for epigraph).
    pub face_dim: usize,
    /// `face_dim + n`.
    pub budget: usize,
    /// Point reproduced by `Σ z^i`. For the epigraph variant the last coordinate is the
    /// attained minimum.
    pub target: Vec<f64>,
    /// Sup-norm residual over the coordinates the decomposition is required to match.
    pub residual: f64,
}

impl SFDecomposition {
    /// Number of blocks whose point is a genuine combination (`k_i >= 2`).
    pub fn nontrivial_blocks(&self) -> usize {
        self.cardinalities.iter().filter(|&&k| k >= 2).count()
    }
}

/// `z = Σ z^i` with `Σ k_i <= m + n`, so at most `m` blocks leave their set.
pub fn decompose_plain(sets: &[PointSet], z: &[f64], settings: &Settings) -> Result<SFDecomposition> {
    let m = check_sets(sets)?;
    check_len(z, m)?;
    let rows: Vec<(Vec<f64>, f64)> = (0..m).map(|s| (unit(m, s), z[s])).collect();
    let lp = beta_lp(sets, &rows, None)?;
    let beta = solve_beta(&lp, settings, Error::OutsideHull)?;
    finish(sets, &beta, DecompositionKind::Plain, m, z.to_vec(), m, settings)
}

/// Decomposition driven by a `k`-extremeness certificate: `Σ k_i <= k + n` and every
/// `k_i <= k + 1`.
///
/// Coordinates are rotated so the face's affine hull spans the first `k` frame
/// directions. Only those `k` coordinates are pinned; minimizing `a·Σz^i` forces the
/// sum onto the exposed face, which pins the remaining `m - k` coordinates. That last
/// step is re-checked numerically.
pub fn decompose_refined(
    sets: &[PointSet],
    z: &[f64],
    face: &FaceDescription,
    settings: &Settings,
) -> Result<SFDecomposition> {
    let m = check_sets(sets)?;
    check_len(z, m)?;
    if face.exposing.len() != m || face.base.len() != m || face.basis.len() != face.dim {
        return invalid("face certificate has inconsistent dimensions");
    }
    if norm_inf(&numlin::sub(&face.base, z)) > settings.tol.reconstruct {
        return Err(Error::Inconsistent("face certificate was computed for a different point".into()));
    }
    let k = face.dim;
    let frame = orthonormal_frame(&face.basis, m, settings.tol.rank)?;
    let rows: Vec<(Vec<f64>, f64)> = (0..k)
        .map(|s| {
            let q = frame.column(s);
            let rhs = dot(&q, z);
            (q, rhs)
        })
        .collect();
    let lp = beta_lp(sets, &rows, Some(&face.exposing))?;
    let beta = solve_beta(&lp, settings, Error::OutsideHull)?;
    finish(sets, &beta, DecompositionKind::Refined, k, z.to_vec(), m, settings).map_err(|e| match e {
        Error::Inconsistent(msg) => Error::Inconsistent(format!("certificate inconsistent with z: {msg}")),
        other => other,
    })
}

/// Matches the first `m - 1` coordinates and pushes the last one down to the minimum
/// over the hull slice. `Σ k_i <= m - 1 + n` and every `k_i <= m`.
pub fn decompose_epigraph(sets: &[PointSet], z_prefix: &[f64], settings: &Settings) -> Result<SFDecomposition> {
    let m = check_sets(sets)?;
    if m == 0 {
        return invalid("epigraph decomposition needs dimension at least 1");
    }
    check_len(z_prefix, m - 1)?;
    let rows: Vec<(Vec<f64>, f64)> = (0..m - 1).map(|s| (unit(m, s), z_prefix[s])).collect();
    let lp = beta_lp(sets, &rows, Some(&unit(m, m - 1)))?;
    let beta = solve_beta(&lp, settings, Error::Infeasible("the hull slice over the prefix is empty".into()))?;
    let mut target = z_prefix.to_vec();
    target.push(0.0);
    let mut dec = finish(sets, &beta, DecompositionKind::Epigraph, m - 1, target, m - 1, settings)?;
    let last: f64 = dec.points.iter().map(|p| p[m - 1]).sum();
    dec.target[m - 1] = last;
    Ok(dec)
}

fn check_len(v: &[f64], len: usize) -> Result<()> {
    if v.len() != len {
        return invalid(format!("target has length {}, expected {len}", v.len()));
    }
    numlin::check_finite(v)
}

fn unit(m: usize, s: usize) -> Vec<f64> {
    let mut e = vec![0.0; m];
    e[s] = 1.0;
    e
}

/// Rows `q·Σ_ij β_ij v^{ij} = rhs` for each `(q, rhs)`, simplex rows per block, and
/// objective `Σ_ij β_ij a·v^{ij}` (zero when `a` is absent).
fn beta_lp(sets: &[PointSet], rows: &[(Vec<f64>, f64)], objective: Option<&[f64]>) -> Result<LpProblem> {
    let vars: usize = sets.iter().map(PointSet::len).sum();
    let points: Vec<&[f64]> = sets.iter().flat_map(|s| s.points().iter().map(Vec::as_slice)).collect();
    let cost = match objective {
        Some(a) => points.iter().map(|p| dot(a, p)).collect(),
        None => vec![0.0; vars],
    };
    let mut lp = LpProblem::new(cost)?;
    for (q, rhs) in rows {
        let row: Vec<f64> = points.iter().map(|p| dot(q, p)).collect();
        lp.add_eq(&row, *rhs)?;
    }
    let mut offset = 0;
    for s in sets {
        let mut row = vec![0.0; vars];
        row[offset..offset + s.len()].iter_mut().for_each(|v| *v = 1.0);
        lp.add_eq(&row, 1.0)?;
        offset += s.len();
    }
    Ok(lp)
}

fn solve_beta(lp: &LpProblem, settings: &Settings, infeasible: Error) -> Result<Vec<f64>> {
    let sol = solve_lp_with(lp, &settings.tol)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.x),
        LpStatus::Infeasible => Err(infeasible),
        LpStatus::Unbounded => Err(Error::NumericBreakdown("weight LP over a polytope reported unbounded".into())),
    }
}

fn finish(
    sets: &[PointSet],
    beta: &[f64],
    kind: DecompositionKind,
    face_dim: usize,
    target: Vec<f64>,
    matched: usize,
    settings: &Settings,
) -> Result<SFDecomposition> {
    let m = sets[0].dim();
    let mut blocks = Vec::with_capacity(sets.len());
    let mut points = Vec::with_capacity(sets.len());
    let mut offset = 0;
    for s in sets {
        let comb = ConvexCombination::from_dense(&beta[offset..offset + s.len()], settings.tol.prune)?;
        points.push(comb.point(s));
        blocks.push(comb);
        offset += s.len();
    }
    let cardinalities: Vec<usize> = blocks.iter().map(ConvexCombination::len).collect();
    let total = cardinalities.iter().sum();
    let budget = face_dim + sets.len();

    let mut sum = vec![0.0; m];
    for p in &points {
        numlin::axpy(&mut sum, 1.0, p);
    }
    let residual = norm_inf(&numlin::sub(&sum[..matched], &target[..matched]));
    if residual > settings.tol.reconstruct {
        return Err(Error::Inconsistent(format!("reconstruction residual {residual:e} exceeds tolerance")));
    }
    if total > budget {
        return Err(Error::Inconsistent(format!("support total {total} exceeds budget {budget}")));
    }
    Ok(SFDecomposition { kind, blocks, points, cardinalities, total, face_dim, budget, target, residual })
}
