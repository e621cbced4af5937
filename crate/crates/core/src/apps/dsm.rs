//! Dynamic spectrum management in minimization form: tone `i` is the block
//! `(1/N) h_{σ_i}(x^i)` on `[0,1]^L`, coupled by the per-user budgets
//! `Σ_i x^i_l ≤ p_l`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_cap, invalid, Result};
use crate::nonconvexity::h_product;
use crate::settings::Settings;

use super::concave::{self, DualSearch};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsmInstance {
    pub users: usize,
    pub tones: usize,
    /// Background noise per tone, in `(0, 1]`.
    pub sigma: Vec<f64>,
    /// Power budget per user, in `(0, 1]`.
    pub budgets: Vec<f64>,
}

impl DsmInstance {
    pub fn new(sigma: Vec<f64>, budgets: Vec<f64>) -> Result<Self> {
        let inst = Self { users: budgets.len(), tones: sigma.len(), sigma, budgets };
        inst.validate()?;
        Ok(inst)
    }

    /// Every tone has noise `sigma` and every user budget `budget`.
    pub fn uniform(users: usize, tones: usize, sigma: f64, budget: f64) -> Result<Self> {
        Self::new(vec![sigma; tones], vec![budget; users])
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 || self.tones == 0 {
            return invalid("need at least one user and one tone");
        }
        if self.sigma.len() != self.tones || self.budgets.len() != self.users {
            return invalid("instance dimensions disagree");
        }
        if self.sigma.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
            return invalid("noises must lie in (0, 1]; rescale noises and budgets together");
        }
        if self.budgets.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
            return invalid("budgets must lie in (0, 1]; rescale noises and budgets together");
        }
        Ok(())
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Random instance with noises in `[0.3, 1]` and budgets in `[0.5, 1]`.
pub fn build_dsm(seed: u64, users: usize, tones: usize) -> Result<DsmInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = (0..tones).map(|_| rng.gen_range(0.3..=1.0)).collect();
    let budgets = (0..users).map(|_| rng.gen_range(0.5..=1.0)).collect();
    DsmInstance::new(sigma, budgets)
}

/// Per-tone objective `(1/N) h_σ(x)`.
pub fn tone_value(inst: &DsmInstance, tone: usize, x: &[f64]) -> f64 {
    h_product(x, inst.sigma[tone]).ln() / inst.tones as f64
}

/// The tone grid `{0, step, ..., 1}^L` in units of `step`.
struct ToneGrid {
    divisions: usize,
    units: Vec<Vec<usize>>,
}

impl ToneGrid {
    fn new(users: usize, step: f64, settings: &Settings) -> Result<Self> {
        let divisions = (1.0 / step).round();
        if !(step > 0.0 && step <= 1.0) || ((1.0 / step) - divisions).abs() > 1e-9 {
            return invalid(format!("grid step must be 1/G for a positive integer G, got {step}"));
        }
        let divisions = divisions as usize;
        let count = ((divisions + 1) as u128).checked_pow(users as u32).unwrap_or(u128::MAX);
        check_cap("tone grid points", count, settings.caps.tone_grid)?;
        let mut units = vec![Vec::new()];
        for _ in 0..users {
            units = units
                .into_iter()
                .flat_map(|u| {
                    (0..=divisions).map(move |v| {
                        let mut w = u.clone();
                        w.push(v);
                        w
                    })
                })
                .collect();
        }
        Ok(Self { divisions, units })
    }

    fn point(&self, u: &[usize]) -> Vec<f64> {
        u.iter().map(|&v| v as f64 / self.divisions as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsmPrimal {
    /// Best grid value in minimization form; an upper estimate of the true minimum.
    pub value: f64,
    /// `allocation[i][l]`: power of user `l` on tone `i`.
    pub allocation: Vec<Vec<f64>>,
    pub step: f64,
    /// Bound on the loss from restricting to the grid: rounding an optimal point
    /// down to the grid stays feasible and moves tone `i` by at most `step·L²/(N σ_i)`.
    pub rounding_slack: f64,
}

/// Grid primal by dynamic programming across tones on integer budget usage.
pub fn dsm_primal_grid(inst: &DsmInstance, step: f64, settings: &Settings) -> Result<DsmPrimal> {
    inst.validate()?;
    primal_with_budgets(inst, &inst.budgets, step, settings)
}

/// Grid primal value with budgets `p + z`; `+∞` if a budget turns negative.
pub fn perturbed_primal(inst: &DsmInstance, z: &[f64], step: f64, settings: &Settings) -> Result<f64> {
    inst.validate()?;
    if z.len() != inst.users {
        return invalid(format!("perturbation has {} entries, expected {}", z.len(), inst.users));
    }
    crate::numlin::check_finite(z)?;
    let budgets: Vec<f64> = inst.budgets.iter().zip(z).map(|(p, dz)| p + dz).collect();
    Ok(primal_with_budgets(inst, &budgets, step, settings)?.value)
}

fn primal_with_budgets(inst: &DsmInstance, budgets: &[f64], step: f64, settings: &Settings) -> Result<DsmPrimal> {
    let grid = ToneGrid::new(inst.users, step, settings)?;
    let rounding_slack = rounding_slack(inst, step);
    if budgets.iter().any(|&p| p < 0.0) {
        return Ok(DsmPrimal { value: f64::INFINITY, allocation: Vec::new(), step, rounding_slack });
    }
    let g = grid.divisions;
    let caps: Vec<usize> = budgets.iter().map(|&p| ((p * g as f64 + 1e-9).floor() as usize).min(g * inst.tones)).collect();
    let radix: Vec<usize> = caps.iter().map(|c| c + 1).collect();
    let states: usize = radix.iter().product();
    let encode = |u: &[usize]| u.iter().zip(&radix).rev().fold(0usize, |acc, (v, r)| acc * r + v);
    let decode = |mut s: usize| -> Vec<usize> {
        radix
            .iter()
            .map(|r| {
                let v = s % r;
                s /= r;
                v
            })
            .collect()
    };
    let usable: Vec<usize> = (0..grid.units.len()).filter(|&j| grid.units[j].iter().zip(&caps).all(|(v, c)| v <= c)).collect();

    let mut cost = vec![f64::INFINITY; states];
    cost[0] = 0.0;
    let mut choice = vec![vec![usize::MAX; states]; inst.tones];
    for tone in 0..inst.tones {
        let values: Vec<f64> = usable.iter().map(|&j| tone_value(inst, tone, &grid.point(&grid.units[j]))).collect();
        let mut next = vec![f64::INFINITY; states];
        for s in 0..states {
            if !cost[s].is_finite() {
                continue;
            }
            let used = decode(s);
            for (pos, &j) in usable.iter().enumerate() {
                let u = &grid.units[j];
                if used.iter().zip(u).zip(&caps).any(|((a, b), c)| a + b > *c) {
                    continue;
                }
                let to: Vec<usize> = used.iter().zip(u).map(|(a, b)| a + b).collect();
                let t = encode(&to);
                let v = cost[s] + values[pos];
                if v < next[t] {
                    next[t] = v;
                    choice[tone][t] = s * usable.len() + pos;
                }
            }
        }
        cost = next;
    }
    let (mut state, value) = cost
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (s, &v)| if v < acc.1 { (s, v) } else { acc });
    let mut allocation = vec![Vec::new(); inst.tones];
    for tone in (0..inst.tones).rev() {
        let c = choice[tone][state];
        let (prev, pos) = (c / usable.len(), c % usable.len());
        allocation[tone] = grid.point(&grid.units[usable[pos]]);
        state = prev;
    }
    Ok(DsmPrimal { value, allocation, step, rounding_slack })
}

fn rounding_slack(inst: &DsmInstance, step: f64) -> f64 {
    let l2 = (inst.users * inst.users) as f64;
    step * inst.sigma.iter().map(|s| l2 / (inst.tones as f64 * s)).sum::<f64>()
}

/// Grid dual estimate with the discretization correction that makes it a lower bound on `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsmDual {
    /// Certified lower bound on `d`: grid dual value minus the correction at the maximizer.
    pub value: f64,
    /// Maximum of the grid dual function found.
    pub grid_value: f64,
    /// Upper bracket on the maximum of the grid dual function, hence on `d`.
    pub grid_upper: f64,
    /// `Σ_i (step/2)(L²/(N σ_i) + ‖y‖₁)` at the maximizer.
    pub correction: f64,
    pub y: Vec<f64>,
    pub step: f64,
    pub kelley_iterations: usize,
}

/// Grid dual `q_G(y) = Σ_i min_{x ∈ grid} [(1/N) h_{σ_i}(x) + y·x] - y·p` and a supergradient.
///
/// `|∂_l h_σ| ≤ L/σ` on the box, so the true per-tone minimum is at most
/// `(step/2)(L²/(N σ) + ‖y‖₁)` below the grid minimum.
pub fn dsm_dual_grid(inst: &DsmInstance, step: f64, settings: &Settings) -> Result<DsmDual> {
    inst.validate()?;
    let grid = ToneGrid::new(inst.users, step, settings)?;
    let points: Vec<Vec<f64>> = grid.units.iter().map(|u| grid.point(u)).collect();
    let values: Vec<Vec<f64>> = (0..inst.tones).map(|i| points.iter().map(|x| tone_value(inst, i, x)).collect()).collect();
    let oracle = |y: &[f64]| {
        let mut q = -inst.budgets.iter().zip(y).map(|(p, v)| p * v).sum::<f64>();
        let mut g: Vec<f64> = inst.budgets.iter().map(|p| -p).collect();
        for tone_vals in &values {
            let (best, arg) = points
                .iter()
                .zip(tone_vals)
                .enumerate()
                .map(|(j, (x, v))| (v + x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>(), j))
                .fold((f64::INFINITY, 0), |acc, c| if c.0 < acc.0 { c } else { acc });
            q += best;
            for (gl, xl) in g.iter_mut().zip(&points[arg]) {
                *gl += xl;
            }
        }
        (q, g)
    };
    let cap = (inst.users as f64) / (inst.tones as f64 * inst.sigma_min()) + 1.0;
    let search: DualSearch = concave::maximize(&oracle, inst.users, cap, 21, settings)?;
    let correction = dual_correction(inst, step, &search.y);
    Ok(DsmDual {
        value: search.value - correction,
        grid_value: search.value,
        grid_upper: search.upper,
        correction,
        y: search.y,
        step,
        kelley_iterations: search.kelley_iterations,
    })
}

fn dual_correction(inst: &DsmInstance, step: f64, y: &[f64]) -> f64 {
    let l2 = (inst.users * inst.users) as f64;
    let y1: f64 = y.iter().sum();
    inst.sigma.iter().map(|s| step / 2.0 * (l2 / (inst.tones as f64 * s) + y1)).sum()
}
