//! Network utility maximization with single-path routing, in minimization form:
//! block `i` is `f_i(x) = -U_i(x)` on `[0, M]^{K_i}` with `M = ‖c‖∞`, coupled by
//! `Σ_i R^i x^i ≤ c`.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_cap, invalid, Result};
use crate::numlin::{solve_lp_with, LpProblem, LpStatus};
use crate::settings::Settings;

use super::concave::{self, DualSearch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Utility {
    /// `U_i(x) = max_s x_s`.
    Throughput,
    /// `U_i(x) = log max_s x_s`.
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumInstance {
    pub seed: u64,
    pub links: usize,
    pub users: usize,
    /// Path counts, non-increasing.
    pub paths: Vec<usize>,
    /// `routing[i][l][s]` is 1 when path `s` of user `i` uses link `l`.
    pub routing: Vec<Vec<Vec<u8>>>,
    pub capacity: Vec<f64>,
    pub utility: Utility,
}

/// Deterministic random instance where every user has `paths_each` paths.
pub fn build_num(seed: u64, links: usize, users: usize, paths_each: usize, utility: Utility) -> Result<NumInstance> {
    build_num_with_paths(seed, links, vec![paths_each; users], utility)
}

/// Deterministic random instance with the given path counts (sorted non-increasing).
pub fn build_num_with_paths(seed: u64, links: usize, mut paths: Vec<usize>, utility: Utility) -> Result<NumInstance> {
    if links == 0 || paths.is_empty() || paths.contains(&0) {
        return invalid("need at least one link, one user and one path per user");
    }
    paths.sort_unstable_by(|a, b| b.cmp(a));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let capacity: Vec<f64> = (0..links).map(|_| rng.gen_range(0.5..=1.0)).collect();
    let mut routing = Vec::with_capacity(paths.len());
    for &k in &paths {
        let mut r = vec![vec![0u8; k]; links];
        for s in 0..k {
            loop {
                let col: Vec<u8> = (0..links).map(|_| rng.gen_bool(0.5) as u8).collect();
                if col.contains(&1) {
                    for (l, b) in col.into_iter().enumerate() {
                        r[l][s] = b;
                    }
                    break;
                }
            }
        }
        routing.push(r);
    }
    let inst = NumInstance { seed, links, users: paths.len(), paths, routing, capacity, utility };
    inst.validate()?;
    Ok(inst)
}

impl NumInstance {
    pub fn validate(&self) -> Result<()> {
        if self.paths.len() != self.users || self.routing.len() != self.users || self.capacity.len() != self.links {
            return invalid("instance dimensions disagree");
        }
        if self.capacity.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return invalid("capacities must be positive");
        }
        if self.paths.windows(2).any(|w| w[0] < w[1]) {
            return invalid("path counts must be sorted non-increasing");
        }
        for (i, r) in self.routing.iter().enumerate() {
            if r.len() != self.links || r.iter().any(|row| row.len() != self.paths[i]) {
                return invalid(format!("routing matrix of user {i} has the wrong shape"));
            }
            if r.iter().flatten().any(|&b| b > 1) {
                return invalid(format!("routing matrix of user {i} is not 0/1"));
            }
            if (0..self.paths[i]).any(|s| r.iter().all(|row| row[s] == 0)) {
                return invalid(format!("user {i} has a path without links"));
            }
        }
        Ok(())
    }

    /// `M = ‖c‖∞`, the box bound on every path rate.
    pub fn rate_cap(&self) -> f64 {
        self.capacity.iter().copied().fold(0.0, f64::max)
    }

    /// Same instance with capacities multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        out.capacity.iter_mut().for_each(|c| *c *= lambda);
        out
    }

    fn path_column(&self, user: usize, path: usize) -> Vec<f64> {
        self.routing[user].iter().map(|row| row[path] as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumPrimal {
    /// Optimal value in minimization form (`-` total utility); `+∞` when infeasible.
    pub value: f64,
    /// Chosen path per user and its rate.
    pub paths: Vec<usize>,
    pub rates: Vec<f64>,
}

/// Exact primal optimum by enumerating single-path assignments.
///
/// Flow on a path other than the best one consumes capacity without adding utility,
/// so an optimal solution puts each user's flow on one path.
pub fn num_primal_exact(inst: &NumInstance, settings: &Settings) -> Result<NumPrimal> {
    inst.validate()?;
    primal_with_capacity(inst, &inst.capacity, settings)
}

/// Primal value with capacities `c + z`; `+∞` when no feasible point exists.
pub fn perturbed_primal(inst: &NumInstance, z: &[f64], settings: &Settings) -> Result<f64> {
    inst.validate()?;
    if z.len() != inst.links {
        return invalid(format!("perturbation has {} entries, expected {}", z.len(), inst.links));
    }
    crate::numlin::check_finite(z)?;
    let cap: Vec<f64> = inst.capacity.iter().zip(z).map(|(c, dz)| c + dz).collect();
    Ok(primal_with_capacity(inst, &cap, settings)?.value)
}

fn primal_with_capacity(inst: &NumInstance, cap: &[f64], settings: &Settings) -> Result<NumPrimal> {
    let count = inst.paths.iter().fold(1u128, |acc, &k| acc.saturating_mul(k as u128));
    check_cap("path assignments", count, settings.caps.path_assignments)?;
    let infeasible = NumPrimal { value: f64::INFINITY, paths: Vec::new(), rates: Vec::new() };
    if cap.iter().any(|&c| c < 0.0) {
        return Ok(infeasible);
    }
    let m = inst.rate_cap();
    let mut best = infeasible;
    for assignment in inst.paths.iter().map(|&k| 0..k).multi_cartesian_product() {
        let cols: Vec<Vec<f64>> = assignment.iter().enumerate().map(|(i, &s)| inst.path_column(i, s)).collect();
        let inner = match inst.utility {
            Utility::Throughput => inner_throughput(&cols, cap, m, settings)?,
            Utility::Log => inner_log(&cols, cap, m),
        };
        if let Some((value, rates)) = inner {
            if value < best.value {
                best = NumPrimal { value, paths: assignment, rates };
            }
        }
    }
    Ok(best)
}

/// `min -Σ t_i` subject to `Σ_i a_i t_i ≤ cap`, `0 ≤ t ≤ M`.
fn inner_throughput(cols: &[Vec<f64>], cap: &[f64], m: f64, settings: &Settings) -> Result<Option<(f64, Vec<f64>)>> {
    let n = cols.len();
    let mut lp = LpProblem::new(vec![-1.0; n])?;
    for (l, &c) in cap.iter().enumerate() {
        let row: Vec<f64> = cols.iter().map(|a| a[l]).collect();
        lp.add_ub(&row, c)?;
    }
    for i in 0..n {
        let mut row = vec![0.0; n];
        row[i] = 1.0;
        lp.add_ub(&row, m)?;
    }
    let sol = solve_lp_with(&lp, &settings.tol)?;
    Ok(match sol.status {
        LpStatus::Optimal => Some((sol.objective, sol.x)),
        _ => None,
    })
}

/// `min -Σ log t_i` subject to `Σ_i a_i t_i ≤ cap`, `0 < t ≤ M`, by a log-barrier
/// Newton method. The returned point is strictly feasible.
fn inner_log(cols: &[Vec<f64>], cap: &[f64], m: f64) -> Option<(f64, Vec<f64>)> {
    let n = cols.len();
    let rows: Vec<(Vec<f64>, f64)> = (0..cap.len())
        .filter(|&l| cols.iter().any(|a| a[l] != 0.0))
        .map(|l| (cols.iter().map(|a| a[l]).collect(), cap[l]))
        .collect();
    if rows.iter().any(|(_, c)| *c <= 0.0) || m <= 0.0 {
        return None;
    }
    let mut constraints = rows;
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        constraints.push((e, m));
    }
    let load = |t: &[f64], a: &[f64]| a.iter().zip(t).map(|(x, y)| x * y).sum::<f64>();
    // Strictly feasible start: every constraint has at most n nonzero unit entries.
    let start = constraints.iter().map(|(_, c)| *c).fold(f64::INFINITY, f64::min) / (n as f64 + 1.0);
    let mut t = vec![start; n];
    let barrier = |t: &[f64], mu: f64| -> f64 {
        let mut v = -t.iter().map(|x| x.ln()).sum::<f64>();
        for (a, c) in &constraints {
            v -= mu * (c - load(t, a)).ln();
        }
        v
    };
    let mut mu = 1.0;
    while mu > 1e-13 {
        for _ in 0..100 {
            let mut grad = DVector::from_iterator(n, t.iter().map(|x| -1.0 / x));
            let mut hess = DMatrix::from_diagonal(&DVector::from_iterator(n, t.iter().map(|x| 1.0 / (x * x))));
            for (a, c) in &constraints {
                let s = c - load(&t, a);
                let av = DVector::from_column_slice(a);
                grad += &av * (mu / s);
                hess += &av * av.transpose() * (mu / (s * s));
            }
            let Some(chol) = hess.cholesky() else { break };
            let step = chol.solve(&(-&grad));
            let decrement = -grad.dot(&step);
            if decrement < 1e-20 {
                break;
            }
            let f0 = barrier(&t, mu);
            let mut alpha = 1.0;
            loop {
                let trial: Vec<f64> = t.iter().zip(step.iter()).map(|(x, d)| x + alpha * d).collect();
                let feasible = trial.iter().all(|&x| x > 0.0) && constraints.iter().all(|(a, c)| c - load(&trial, a) > 0.0);
                if feasible && barrier(&trial, mu) <= f0 - 0.25 * alpha * decrement {
                    t = trial;
                    break;
                }
                alpha *= 0.5;
                if alpha < 1e-16 {
                    break;
                }
            }
            if alpha < 1e-16 {
                break;
            }
        }
        mu *= 0.1;
    }
    let value = -t.iter().map(|x| x.ln()).sum::<f64>();
    Some((value, t))
}

/// Lagrangian of block `i` minimized over its domain at link prices `y`:
/// returns the value and the chosen path and rate (rate 0 means `x = 0`).
fn block_min(inst: &NumInstance, user: usize, y: &[f64]) -> (f64, usize, f64) {
    let m = inst.rate_cap();
    let (s, r) = (0..inst.paths[user])
        .map(|s| (s, inst.routing[user].iter().zip(y).map(|(row, yl)| row[s] as f64 * yl).sum::<f64>()))
        .fold((0, f64::INFINITY), |acc, (s, r)| if r < acc.1 { (s, r) } else { acc });
    match inst.utility {
        Utility::Throughput => {
            if r < 1.0 {
                (m * (r - 1.0), s, m)
            } else {
                (0.0, s, 0.0)
            }
        }
        Utility::Log => {
            if r * m <= 1.0 {
                (r * m - m.ln(), s, m)
            } else {
                (1.0 + r.ln(), s, 1.0 / r)
            }
        }
    }
}

/// Dual function `q(y) = Σ_i min_x (f_i(x) + y·R^i x) - c·y` and a supergradient.
pub fn num_dual_value(inst: &NumInstance, y: &[f64]) -> Result<(f64, Vec<f64>)> {
    if y.len() != inst.links {
        return invalid(format!("y has {} entries, expected {}", y.len(), inst.links));
    }
    if y.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return invalid("dual prices must be finite and nonnegative");
    }
    Ok(dual_unchecked(inst, y))
}

fn dual_unchecked(inst: &NumInstance, y: &[f64]) -> (f64, Vec<f64>) {
    let mut value = -inst.capacity.iter().zip(y).map(|(c, v)| c * v).sum::<f64>();
    let mut g: Vec<f64> = inst.capacity.iter().map(|c| -c).collect();
    for i in 0..inst.users {
        let (v, s, rate) = block_min(inst, i, y);
        value += v;
        for (l, gl) in g.iter_mut().enumerate() {
            *gl += inst.routing[i][l][s] as f64 * rate;
        }
    }
    (value, g)
}

/// Conjugate `f_i*(w) = sup_x w·x - f_i(x)` of a throughput or log block in closed form.
pub fn block_conjugate(utility: Utility, m: f64, w: &[f64]) -> f64 {
    let pos = |u: f64| m * u.max(0.0);
    let rest: f64 = w.iter().map(|&u| pos(u)).sum();
    (0..w.len())
        .map(|s| {
            let own = match utility {
                Utility::Throughput => pos(w[s] + 1.0),
                Utility::Log => {
                    if w[s] >= -1.0 / m {
                        w[s] * m + m.ln()
                    } else {
                        -1.0 - (-w[s]).ln()
                    }
                }
            };
            own + rest - pos(w[s])
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

pub const DUAL_CAP: f64 = 10.0;
pub const DUAL_GRID_POINTS: usize = 21;

/// Lower estimate of `d = max_{y ≥ 0} q(y)` over `[0, 10]^L`, with a cutting-plane
/// upper bracket.
pub fn num_dual_opt(inst: &NumInstance, settings: &Settings) -> Result<DualSearch> {
    num_dual_opt_with(inst, DUAL_GRID_POINTS, settings)
}

pub fn num_dual_opt_with(inst: &NumInstance, grid_points: usize, settings: &Settings) -> Result<DualSearch> {
    inst.validate()?;
    if inst.links > 4 {
        return invalid("dual search supports at most 4 links");
    }
    let oracle = |y: &[f64]| dual_unchecked(inst, y);
    concave::maximize(&oracle, inst.links, DUAL_CAP, grid_points, settings)
}
