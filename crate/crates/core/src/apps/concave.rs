//! Maximization of a concave function over a box `[0, cap]^dim` given a value and
//! supergradient oracle: coarse grid, projected supergradient from the best grid
//! points, then Kelley cutting planes, which also yield an upper bracket.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numlin::{solve_lp_with, LpProblem, LpStatus};
use crate::settings::Settings;

pub type Oracle<'a> = dyn Fn(&[f64]) -> (f64, Vec<f64>) + Sync + 'a;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSearch {
    /// Best value found; a lower estimate of the maximum.
    pub value: f64,
    /// Cutting-plane upper bracket on the maximum over the box.
    pub upper: f64,
    pub y: Vec<f64>,
    pub cap: f64,
    pub grid_points: usize,
    pub kelley_iterations: usize,
}

const STARTS: usize = 5;
const SUBGRADIENT_STEPS: usize = 500;
const KELLEY_ITERATIONS: usize = 400;
const KELLEY_TOL: f64 = 1e-10;

pub fn maximize(oracle: &Oracle<'_>, dim: usize, cap: f64, grid_points: usize, settings: &Settings) -> Result<DualSearch> {
    let h = cap / (grid_points.max(2) - 1) as f64;
    let total = grid_points.pow(dim as u32);
    let evals: Vec<(f64, Vec<f64>)> = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut y = vec![0.0; dim];
            for c in y.iter_mut() {
                *c = (idx % grid_points) as f64 * h;
                idx /= grid_points;
            }
            let (v, _) = oracle(&y);
            (v, y)
        })
        .collect();
    let mut order: Vec<usize> = (0..evals.len()).collect();
    order.sort_by(|&a, &b| evals[b].0.total_cmp(&evals[a].0).then(a.cmp(&b)));

    let mut best = (f64::NEG_INFINITY, vec![0.0; dim]);
    let mut cuts: Vec<(Vec<f64>, f64, Vec<f64>)> = Vec::new();
    let consider = |y: &[f64], best: &mut (f64, Vec<f64>)| -> (f64, Vec<f64>) {
        let (v, g) = oracle(y);
        if v > best.0 {
            *best = (v, y.to_vec());
        }
        (v, g)
    };

    for &start in order.iter().take(STARTS) {
        let mut y = evals[start].1.clone();
        let (v, g) = consider(&y, &mut best);
        cuts.push((y.clone(), v, g.clone()));
        let mut g = g;
        for t in 1..=SUBGRADIENT_STEPS {
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            let step = h / t as f64 / norm;
            for (yi, gi) in y.iter_mut().zip(&g) {
                *yi = (*yi + step * gi).clamp(0.0, cap);
            }
            g = consider(&y, &mut best).1;
        }
        let (v, g) = oracle(&y);
        cuts.push((y, v, g));
    }
    let y_best = best.1.clone();
    let (v, g) = oracle(&y_best);
    cuts.push((y_best, v, g));

    let mut upper = f64::INFINITY;
    let mut iterations = 0;
    while iterations < KELLEY_ITERATIONS {
        iterations += 1;
        let Some((y, u)) = kelley_step(&cuts, dim, cap, settings)? else {
            break;
        };
        upper = u;
        let (v, g) = consider(&y, &mut best);
        if upper - best.0 <= KELLEY_TOL * best.0.abs().max(1.0) {
            break;
        }
        cuts.push((y, v, g));
    }
    Ok(DualSearch { value: best.0, upper: upper.max(best.0), y: best.1, cap, grid_points, kelley_iterations: iterations })
}

/// Maximizes the cutting-plane model `min_j q_j + g_j·(y - y_j)` over the box.
fn kelley_step(cuts: &[(Vec<f64>, f64, Vec<f64>)], dim: usize, cap: f64, settings: &Settings) -> Result<Option<(Vec<f64>, f64)>> {
    // Variables: y (dim), t+ and t- with t = t+ - t-.
    let mut obj = vec![0.0; dim + 2];
    obj[dim] = -1.0;
    obj[dim + 1] = 1.0;
    let mut lp = LpProblem::new(obj)?;
    for (yj, qj, gj) in cuts {
        let mut row: Vec<f64> = gj.iter().map(|g| -g).collect();
        row.push(1.0);
        row.push(-1.0);
        let rhs = qj - gj.iter().zip(yj).map(|(g, y)| g * y).sum::<f64>();
        lp.add_ub(&row, rhs)?;
    }
    for i in 0..dim {
        let mut row = vec![0.0; dim + 2];
        row[i] = 1.0;
        lp.add_ub(&row, cap)?;
    }
    let sol = match solve_lp_with(&lp, &settings.tol) {
        Ok(s) => s,
        Err(crate::Error::NumericBreakdown(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    if sol.status != LpStatus::Optimal {
        return Ok(None);
    }
    let y = sol.x[..dim].iter().map(|v| v.clamp(0.0, cap)).collect();
    Ok(Some((y, -sol.objective)))
}
