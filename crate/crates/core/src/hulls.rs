//! Convex geometry of finite point sets and their Minkowski sums.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{check_cap, invalid, Error, Result};
use crate::numlin::{self, affine_hull, dot, norm2, norm_inf, null_vector, solve_lp_with, sub, LpProblem};
use crate::settings::Settings;

/// A finite nonempty set of points in `R^m`, one summand of a Minkowski sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    #[serde(default)]
    label: String,
    points: Vec<Vec<f64>>,
}

impl PointSet {
    pub fn new(label: impl Into<String>, points: Vec<Vec<f64>>) -> Result<Self> {
        let set = Self { label: label.into(), points };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        let m = match self.points.first() {
            Some(p) => p.len(),
            None => return invalid(format!("point set '{}' is empty", self.label)),
        };
        for (i, p) in self.points.iter().enumerate() {
            if p.len() != m {
                return invalid(format!("point {i} of '{}' has dimension {}, expected {m}", self.label, p.len()));
            }
            numlin::check_finite(p)?;
        }
        Ok(())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }
}

/// Convex combination of points of a [`PointSet`], referenced by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexCombination {
    pub support: Vec<usize>,
    pub weights: Vec<f64>,
}

impl ConvexCombination {
    /// Builds a combination from dense weights over a whole set: entries at or below
    /// `prune` are dropped and the rest renormalized to sum to one.
    pub fn from_dense(weights: &[f64], prune: f64) -> Result<Self> {
        let (support, kept): (Vec<usize>, Vec<f64>) =
            weights.iter().copied().enumerate().filter(|&(_, w)| w > prune).unzip();
        let total: f64 = kept.iter().sum();
        if support.is_empty() || !total.is_finite() {
            return invalid("convex combination with no positive weight");
        }
        Ok(Self { support, weights: kept.into_iter().map(|w| w / total).collect() })
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn validate(&self, set: &PointSet) -> Result<()> {
        if self.support.is_empty() || self.support.len() != self.weights.len() {
            return invalid("support and weights must be nonempty and of equal length");
        }
        if self.support.iter().any(|&i| i >= set.len()) {
            return invalid("support index out of range");
        }
        if !self.support.iter().all_unique() {
            return invalid("support indices must be distinct");
        }
        if self.weights.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
            return invalid("weights must be strictly positive");
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("weights sum to {total}, not 1"));
        }
        Ok(())
    }

    /// The point `Σ α_j v_j`.
    pub fn point(&self, set: &PointSet) -> Vec<f64> {
        let mut z = vec![0.0; set.dim()];
        for (&i, &w) in self.support.iter().zip(&self.weights) {
            numlin::axpy(&mut z, w, set.point(i));
        }
        z
    }
}

/// The minimal face of a Minkowski-sum polytope containing a point, with the data
/// certifying that the point is exactly `dim`-extreme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceDescription {
    pub dim: usize,
    /// Indices into the merged Minkowski point list.
    pub vertices: Vec<usize>,
    /// Orthonormal basis of the directions of the face's affine hull.
    pub basis: Vec<Vec<f64>>,
    /// `a` with `a·v = a·z` on the face and `a·v >= a·z + 1` elsewhere.
    pub exposing: Vec<f64>,
    pub base: Vec<f64>,
}

/// All sums `Σ_i v^{i,t_i}` with near-duplicates merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiSum {
    pub points: PointSet,
    /// For every merged point, the index tuples that produce it (first one canonical).
    pub provenance: Vec<Vec<Vec<usize>>>,
}

pub(crate) fn check_sets(sets: &[PointSet]) -> Result<usize> {
    let first = match sets.first() {
        Some(s) => s,
        None => return invalid("need at least one point set"),
    };
    let m = first.dim();
    for s in sets {
        s.validate()?;
        if s.dim() != m {
            return invalid(format!("set '{}' has dimension {}, expected {m}", s.label(), s.dim()));
        }
    }
    Ok(m)
}

fn check_target(z: &[f64], m: usize) -> Result<()> {
    if z.len() != m {
        return invalid(format!("target has dimension {}, expected {m}", z.len()));
    }
    numlin::check_finite(z)
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Weights `α >= 0`, `Σα = 1`, `Σ α_j p_j = z`, if any exist. The simplex returns a
/// vertex of the weight polytope, so at most `m + 1` weights are nonzero.
pub fn hull_weights(points: &[&[f64]], z: &[f64], settings: &Settings) -> Result<Option<Vec<f64>>> {
    let lp = membership_lp(points, z, vec![0.0; points.len()])?;
    let sol = solve_lp_with(&lp, &settings.tol)?;
    Ok(sol.is_optimal().then_some(sol.x))
}

fn membership_lp(points: &[&[f64]], z: &[f64], objective: Vec<f64>) -> Result<LpProblem> {
    let mut lp = LpProblem::new(objective)?;
    for s in 0..z.len() {
        let row: Vec<f64> = points.iter().map(|p| p[s]).collect();
        lp.add_eq(&row, z[s])?;
    }
    lp.add_eq(&vec![1.0; points.len()], 1.0)?;
    Ok(lp)
}

/// Looks for `z` in `conv_k S`, trying `k`-subsets in lexicographic order.
pub fn convk_member(set: &PointSet, k: usize, z: &[f64], settings: &Settings) -> Result<Option<ConvexCombination>> {
    set.validate()?;
    check_target(z, set.dim())?;
    if k == 0 || k > set.len() {
        return invalid(format!("k = {k} must lie in 1..={}", set.len()));
    }
    check_cap("k-subsets", binomial(set.len(), k), settings.caps.subsets)?;
    for subset in (0..set.len()).combinations(k) {
        let pts: Vec<&[f64]> = subset.iter().map(|&i| set.point(i)).collect();
        if let Some(w) = hull_weights(&pts, z, settings)? {
            let local = ConvexCombination::from_dense(&w, settings.tol.prune)?;
            let comb = ConvexCombination {
                support: local.support.iter().map(|&j| subset[j]).collect(),
                weights: local.weights,
            };
            if norm_inf(&sub(&comb.point(set), z)) <= settings.tol.reconstruct {
                return Ok(Some(comb));
            }
        }
    }
    Ok(None)
}

/// Shrinks the support of a combination to at most `m + 1` points without moving
/// its weighted sum, by repeatedly cancelling an affine dependence.
pub fn caratheodory_reduce(set: &PointSet, comb: &ConvexCombination, settings: &Settings) -> Result<ConvexCombination> {
    set.validate()?;
    comb.validate(set)?;
    let m = set.dim();
    let mut support = comb.support.clone();
    let mut alpha = comb.weights.clone();
    while support.len() > m + 1 {
        let lifted: Vec<Vec<f64>> = support
            .iter()
            .map(|&i| {
                let mut c = set.point(i).to_vec();
                c.push(1.0);
                c
            })
            .collect();
        let mut mu = null_vector(&lifted, m + 1, settings.tol.rank)?
            .ok_or_else(|| Error::NumericBreakdown("no affine dependence among more than m+1 points".into()))?;
        if !mu.iter().any(|&v| v > 0.0) {
            mu.iter_mut().for_each(|v| *v = -*v);
        }
        let (drop, theta) = mu
            .iter()
            .zip(&alpha)
            .enumerate()
            .filter(|(_, (&u, _))| u > 0.0)
            .map(|(j, (&u, &a))| (j, a / u))
            .fold((usize::MAX, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        for (a, u) in alpha.iter_mut().zip(&mu) {
            *a -= theta * u;
        }
        alpha[drop] = 0.0;
        let keep: Vec<usize> = (0..support.len()).filter(|&j| alpha[j] > settings.tol.prune).collect();
        support = keep.iter().map(|&j| support[j]).collect();
        alpha = keep.iter().map(|&j| alpha[j]).collect();
        let total: f64 = alpha.iter().sum();
        alpha.iter_mut().for_each(|a| *a /= total);
    }
    Ok(ConvexCombination { support, weights: alpha })
}

/// Enumerates all sums of one point per set, merging sums closer than the merge
/// tolerance (sup norm). Points are listed in order of their first producing tuple.
pub fn minkowski_vertices(sets: &[PointSet], settings: &Settings) -> Result<MinkowskiSum> {
    let m = check_sets(sets)?;
    let count = sets.iter().fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128));
    check_cap("Minkowski sums", count, settings.caps.minkowski)?;

    let tuples: Vec<Vec<usize>> = sets.iter().map(|s| 0..s.len()).multi_cartesian_product().collect();
    let sums: Vec<Vec<f64>> = tuples
        .iter()
        .map(|t| {
            let mut z = vec![0.0; m];
            for (s, &j) in sets.iter().zip(t) {
                numlin::axpy(&mut z, 1.0, s.point(j));
            }
            z
        })
        .collect();

    let tol = settings.tol.merge;
    let key = |i: usize| sums[i].first().copied().unwrap_or(0.0);
    let mut by_key: Vec<usize> = (0..sums.len()).collect();
    by_key.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));

    let mut rep = vec![usize::MAX; sums.len()];
    for i in 0..sums.len() {
        let lo = by_key.partition_point(|&j| key(j) < key(i) - tol);
        let found = by_key[lo..]
            .iter()
            .take_while(|&&j| key(j) <= key(i) + tol)
            .filter(|&&j| j < i && rep[j] == j && norm_inf(&sub(&sums[j], &sums[i])) <= tol)
            .min();
        rep[i] = found.copied().unwrap_or(i);
    }

    let mut slot = vec![usize::MAX; sums.len()];
    let mut points = Vec::new();
    let mut provenance: Vec<Vec<Vec<usize>>> = Vec::new();
    for i in 0..sums.len() {
        let r = rep[i];
        if r == i {
            slot[i] = points.len();
            points.push(sums[i].clone());
            provenance.push(Vec::new());
        }
        provenance[slot[r]].push(tuples[i].clone());
    }
    Ok(MinkowskiSum { points: PointSet::new("minkowski", points)?, provenance })
}

/// Minimal face of `conv Σ S_i` containing `z`.
pub fn minimal_face(sets: &[PointSet], z: &[f64], settings: &Settings) -> Result<FaceDescription> {
    let mink = minkowski_vertices(sets, settings)?;
    minimal_face_in(&mink.points, z, settings)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Membership {
    Unknown,
    Member,
    Outside,
}

/// Minimal face of `conv(vertices)` containing `z`.
///
/// A vertex `p_t` is in the face iff `max α_t` over all representations
/// `z = Σ α_s p_s` exceeds the face tolerance. When that maximum is zero, the LP
/// dual is a supporting direction `a` with `a·(p_s - z) >= 0` everywhere and
/// `a·(p_t - z) >= 1`; every vertex it strictly separates is settled at once.
pub fn minimal_face_in(vertices: &PointSet, z: &[f64], settings: &Settings) -> Result<FaceDescription> {
    vertices.validate()?;
    let m = vertices.dim();
    check_target(z, m)?;
    let pts: Vec<&[f64]> = vertices.points().iter().map(Vec::as_slice).collect();
    let n = pts.len();
    let face_tol = settings.tol.face;
    const CERT_TOL: f64 = 1e-6;

    let mut state = vec![Membership::Unknown; n];
    let first = hull_weights(&pts, z, settings)?.ok_or(Error::OutsideHull)?;
    for (s, &w) in first.iter().enumerate() {
        if w > face_tol {
            state[s] = Membership::Member;
        }
    }

    for t in 0..n {
        if state[t] != Membership::Unknown {
            continue;
        }
        let mut objective = vec![0.0; n];
        objective[t] = -1.0;
        let lp = membership_lp(&pts, z, objective)?;
        let sol = solve_lp_with(&lp, &settings.tol)?;
        if !sol.is_optimal() {
            return Err(Error::Inconsistent(format!("face LP for vertex {t} ended {:?}", sol.status)));
        }
        if -sol.objective > face_tol {
            for (s, &w) in sol.x.iter().enumerate() {
                if w > face_tol {
                    state[s] = Membership::Member;
                }
            }
            continue;
        }
        state[t] = Membership::Outside;
        let a: Vec<f64> = sol.duals_eq[..m].iter().map(|y| -y).collect();
        let gaps: Vec<f64> = pts.iter().map(|p| dot(&a, &sub(p, z))).collect();
        if gaps.iter().all(|&g| g >= -CERT_TOL) {
            for (s, &g) in gaps.iter().enumerate() {
                if g > CERT_TOL && state[s] == Membership::Unknown {
                    state[s] = Membership::Outside;
                }
            }
        }
    }

    let members: Vec<usize> = (0..n).filter(|&s| state[s] == Membership::Member).collect();
    let face_pts: Vec<Vec<f64>> = members.iter().map(|&s| pts[s].to_vec()).collect();
    let hull = affine_hull(&face_pts, settings.tol.rank)?;
    let mut face = FaceDescription {
        dim: hull.rank,
        vertices: members,
        basis: hull.basis,
        exposing: vec![0.0; m],
        base: z.to_vec(),
    };
    face.exposing = exposing_direction(&face, vertices, settings)?;
    Ok(face)
}

/// Finds `a` with `a·v = a·z` for face vertices and `a·v >= a·z + 1` for every other
/// vertex, minimizing `‖a‖₁`. Separation rows are generated lazily from the most
/// violated vertices.
pub fn exposing_direction(face: &FaceDescription, all_vertices: &PointSet, settings: &Settings) -> Result<Vec<f64>> {
    all_vertices.validate()?;
    let m = all_vertices.dim();
    check_target(&face.base, m)?;
    let z = &face.base;
    let outside: Vec<usize> = (0..all_vertices.len()).filter(|i| !face.vertices.contains(i)).collect();
    if outside.is_empty() {
        return Ok(vec![0.0; m]);
    }
    let diffs: Vec<Vec<f64>> = outside.iter().map(|&i| sub(all_vertices.point(i), z)).collect();

    // Seed with the vertices farthest from the face's affine hull.
    let residual_norm = |d: &Vec<f64>| {
        let mut r = d.clone();
        for b in &face.basis {
            let c = dot(&r, b);
            numlin::axpy(&mut r, -c, b);
        }
        norm2(&r)
    };
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    order.sort_by(|&i, &j| residual_norm(&diffs[j]).total_cmp(&residual_norm(&diffs[i])).then(i.cmp(&j)));
    let mut cuts: Vec<usize> = order.into_iter().take(2 * m + 2).collect();

    const BATCH: usize = 16;
    let a = loop {
        let mut lp = LpProblem::new(vec![1.0; 2 * m])?;
        for b in &face.basis {
            let row: Vec<f64> = b.iter().copied().chain(b.iter().map(|v| -v)).collect();
            lp.add_eq(&row, 0.0)?;
        }
        for &c in &cuts {
            let d = &diffs[c];
            let row: Vec<f64> = d.iter().copied().chain(d.iter().map(|v| -v)).collect();
            lp.add_lb(&row, 1.0)?;
        }
        let sol = solve_lp_with(&lp, &settings.tol)?;
        if !sol.is_optimal() {
            return Err(Error::Inconsistent(format!(
                "no exposing direction ({:?}); the face is not a face of the polytope",
                sol.status
            )));
        }
        let a: Vec<f64> = (0..m).map(|s| sol.x[s] - sol.x[m + s]).collect();
        let mut violated: Vec<(usize, f64)> = (0..diffs.len())
            .filter(|c| !cuts.contains(c))
            .map(|c| (c, 1.0 - dot(&a, &diffs[c])))
            .filter(|&(_, v)| v > settings.tol.lp)
            .collect();
        if violated.is_empty() {
            break a;
        }
        violated.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        cuts.extend(violated.into_iter().take(BATCH).map(|(c, _)| c));
    };

    let min_gap = diffs.iter().map(|d| dot(&a, d)).fold(f64::INFINITY, f64::min);
    if !(min_gap > 0.0) {
        return Err(Error::Inconsistent("exposing direction does not separate the face".into()));
    }
    let scale = if min_gap < 1.0 { 1.0 / min_gap } else { 1.0 };
    let a: Vec<f64> = a.into_iter().map(|v| v * scale).collect();
    let slack = settings.tol.face * norm2(&a).max(1.0);
    for &i in &face.vertices {
        if dot(&a, &sub(all_vertices.point(i), z)).abs() > slack {
            return Err(Error::Inconsistent(format!("face vertex {i} is off the exposed hyperplane")));
        }
    }
    Ok(a)
}
