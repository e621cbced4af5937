//! Oracles and generators shared by the integration tests. Each oracle is written
//! independently of the library routine it checks.
#![allow(dead_code)]

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sfgap::apps::Utility;
use sfgap::hulls::PointSet;
use sfgap::numlin::LpProblem;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// All constraint rows of an LP (equalities once, as rows that must be tight),
/// including `x >= lower` as `-x <= -lower`.
fn inequality_rows(p: &LpProblem) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = p.num_vars();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..p.num_eq() {
        let (r, b) = p.eq_row(i);
        rows.push(r.to_vec());
        rhs.push(b);
    }
    for i in 0..p.num_ub() {
        let (r, b) = p.ub_row(i);
        rows.push(r.to_vec());
        rhs.push(b);
    }
    for j in 0..n {
        let mut r = vec![0.0; n];
        r[j] = -1.0;
        rows.push(r);
        rhs.push(-p.lower()[j]);
    }
    (rows, rhs)
}

pub fn lp_feasible(p: &LpProblem, x: &[f64], tol: f64) -> bool {
    let dot = |a: &[f64]| a.iter().zip(x).map(|(u, v)| u * v).sum::<f64>();
    (0..p.num_eq()).all(|i| {
        let (r, b) = p.eq_row(i);
        (dot(r) - b).abs() <= tol
    }) && (0..p.num_ub()).all(|i| {
        let (r, b) = p.ub_row(i);
        dot(r) <= b + tol
    }) && x.iter().zip(p.lower()).all(|(v, l)| *v >= l - tol)
}

/// Minimum of a bounded LP by enumerating every vertex: each choice of `n`
/// constraint rows whose solution is unique and feasible. Equality rows hold at every
/// feasible point, so they compete like the others (a redundant or zero equality row
/// never has to be part of the basis). `None` when the feasible set is empty.
pub fn lp_by_vertices(p: &LpProblem) -> Option<(f64, Vec<f64>)> {
    let n = p.num_vars();
    let (rows, rhs) = inequality_rows(p);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for active in (0..rows.len()).combinations(n) {
        let a = DMatrix::from_fn(n, n, |i, j| rows[active[i]][j]);
        let b = DVector::from_fn(n, |i, _| rhs[active[i]]);
        let Some(x) = a.clone().lu().solve(&b) else { continue };
        if (&a * &x - &b).amax() > 1e-9 {
            continue;
        }
        let x: Vec<f64> = x.iter().copied().collect();
        if !lp_feasible(p, &x, 1e-9) {
            continue;
        }
        let v: f64 = p.objective().iter().zip(&x).map(|(c, v)| c * v).sum();
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, x));
        }
    }
    best
}

/// Whether `x` is a vertex: the constraints tight at `x` have rank `n`.
pub fn is_vertex(p: &LpProblem, x: &[f64], tol: f64) -> bool {
    let n = p.num_vars();
    let (rows, rhs) = inequality_rows(p);
    let tight: Vec<&Vec<f64>> = rows
        .iter()
        .zip(&rhs)
        .filter(|(r, b)| (r.iter().zip(x).map(|(u, v)| u * v).sum::<f64>() - **b).abs() <= tol)
        .map(|(r, _)| r)
        .collect();
    if tight.len() < n {
        return false;
    }
    let m = DMatrix::from_fn(tight.len(), n, |i, j| tight[i][j]);
    m.rank(1e-9) == n
}

/// Random bounded LP with integer data: a few `<=` rows, optionally one equality,
/// and `Σ x <= 10` so the feasible set is a polytope.
pub fn random_lp(r: &mut ChaCha8Rng) -> LpProblem {
    let n = r.gen_range(2..=4);
    let c: Vec<f64> = (0..n).map(|_| r.gen_range(-5..=5) as f64).collect();
    let mut p = LpProblem::new(c).unwrap();
    for _ in 0..r.gen_range(1..=4) {
        let row: Vec<f64> = (0..n).map(|_| r.gen_range(-4..=4) as f64).collect();
        p.add_ub(&row, r.gen_range(-3..=8) as f64).unwrap();
    }
    if r.gen_bool(0.3) {
        let row: Vec<f64> = (0..n).map(|_| r.gen_range(-2..=3) as f64).collect();
        p.add_eq(&row, r.gen_range(0..=4) as f64).unwrap();
    }
    p.add_ub(&vec![1.0; n], 10.0).unwrap();
    p
}

/// Random family of point sets with small integer coordinates, so that Minkowski
/// sums have many coincident points and lower-dimensional faces.
pub fn random_sets(r: &mut ChaCha8Rng, max_sets: usize, max_points: usize, max_dim: usize) -> Vec<PointSet> {
    let n = r.gen_range(1..=max_sets);
    let m = r.gen_range(1..=max_dim);
    let integer = r.gen_bool(0.6);
    (0..n)
        .map(|i| {
            let k = r.gen_range(1..=max_points);
            let pts = (0..k)
                .map(|_| {
                    (0..m)
                        .map(|_| if integer { r.gen_range(0..=2) as f64 } else { r.gen_range(-1.0..1.0) })
                        .collect()
                })
                .collect();
            PointSet::new(format!("S{}", i + 1), pts).unwrap()
        })
        .collect()
}

/// Points of `conv(Σ S_i)` of different kinds: a sum of set points (possibly a vertex),
/// a point on a segment between two sums, and a random interior-ish combination.
pub fn hull_targets(r: &mut ChaCha8Rng, sets: &[PointSet]) -> Vec<Vec<f64>> {
    let m = sets[0].dim();
    let pick = |r: &mut ChaCha8Rng| -> Vec<f64> {
        let mut z = vec![0.0; m];
        for s in sets {
            let p = s.point(r.gen_range(0..s.len()));
            for (a, b) in z.iter_mut().zip(p) {
                *a += b;
            }
        }
        z
    };
    let a = pick(r);
    let b = pick(r);
    let t = r.gen_range(0.1..0.9);
    let seg: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
    let mut mix = vec![0.0; m];
    for s in sets {
        let w: Vec<f64> = (0..s.len()).map(|_| r.gen_range(0.05..1.0)).collect();
        let tot: f64 = w.iter().sum();
        for (j, wj) in w.iter().enumerate() {
            for (acc, v) in mix.iter_mut().zip(s.point(j)) {
                *acc += wj / tot * v;
            }
        }
    }
    vec![a, seg, mix]
}

/// Lower convex hull of 1-D samples evaluated at `x` (monotone chain).
pub fn lower_hull_1d(points: &[(f64, f64)], x: f64) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.1.is_finite()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        if hull.last().is_some_and(|q| q.0 == p.0) {
            continue;
        }
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    for w in hull.windows(2) {
        if x >= w[0].0 - 1e-15 && x <= w[1].0 + 1e-15 {
            let t = (x - w[0].0) / (w[1].0 - w[0].0);
            return w[0].1 + t * (w[1].1 - w[0].1);
        }
    }
    hull.iter().find(|p| (p.0 - x).abs() < 1e-15).map_or(f64::INFINITY, |p| p.1)
}

/// Exhaustive maximum of `Σ ρ^{k_i}_i` over feasible allocations.
pub fn allocation_brute_force(rho: &[Vec<f64>], m: usize) -> f64 {
    let n = rho.len();
    let mut best = f64::NEG_INFINITY;
    for ks in (0..n).map(|_| 1..=m + 1).multi_cartesian_product() {
        if ks.iter().sum::<usize>() <= m + n {
            let v: f64 = ks.iter().enumerate().map(|(i, &k)| rho[i][k - 1]).sum();
            best = best.max(v);
        }
    }
    best
}

/// Random nonnegative rows, non-decreasing in k, first entry 0.
pub fn random_rho_rows(r: &mut ChaCha8Rng, n: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let mut row = vec![0.0];
            for _ in 1..cols {
                let last = *row.last().unwrap();
                row.push(if r.gen_bool(0.2) { last } else { last + r.gen_range(0.0..1.0) });
            }
            row
        })
        .collect()
}

/// The twenty NUM instances with frozen reference values: links and users in 1..=3,
/// path counts in 1..=3 (including single-path users), both utilities.
pub fn golden_num_specs() -> Vec<(u64, usize, Vec<usize>, Utility)> {
    (0..20u64)
        .map(|j| {
            let links = 1 + (j % 3) as usize;
            let users = 1 + ((j / 3) % 3) as usize;
            let paths = (0..users).map(|u| 1 + ((j as usize + u) % 3)).collect();
            let utility = if j % 2 == 0 { Utility::Throughput } else { Utility::Log };
            (1000 + j, links, paths, utility)
        })
        .collect()
}
