use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gapbounds::{bound_report, closed_form_dsm, closed_form_num_log, closed_form_num_throughput, BoundReport, ClosedForm};
use crate::nonconvexity::{rho_k_hsigma, rho_k_min_box, rho_k_neglogmax, Certainty, RhoTable, RhoValue};
use crate::settings::Settings;

use super::dsm::{dsm_dual_grid, dsm_primal_grid, DsmInstance};
use super::num::{num_dual_opt, num_primal_exact, NumInstance, Utility, DUAL_CAP, DUAL_GRID_POINTS};

/// Allowed excess of the NUM gap over `B`, covering the dual search tolerance.
pub const NUM_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    NumThroughput,
    NumLog,
    Dsm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Instance {
    Num(NumInstance),
    Dsm(DsmInstance),
}

/// A value with the side on which it may err relative to the true quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub direction: Certainty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    /// Tone grid step; absent for NUM, whose primal is exact.
    pub step: Option<f64>,
    pub dual_cap: f64,
    pub dual_grid_points: usize,
    pub kelley_iterations: usize,
    pub dual_y: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdicts {
    /// `d ≤ p` up to the slack.
    pub weak_duality: bool,
    /// `p - d ≤ B + slack`.
    pub gap_within_bound: bool,
    pub b_le_udell: bool,
    pub udell_le_classic: bool,
}

impl Verdicts {
    pub fn all(&self) -> bool {
        self.weak_duality && self.gap_within_bound && self.b_le_udell && self.udell_le_classic
    }
}

/// End-to-end gap report. All values are in minimization form; `*_utility`
/// fields give the maximization form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub family: Family,
    pub instance: Instance,
    pub primal: Estimate,
    pub primal_utility: f64,
    pub dual: Estimate,
    pub dual_upper: f64,
    pub dual_utility: f64,
    /// `p - d` from the estimates; never below the true gap.
    pub gap: f64,
    /// Oracle slack allowed in the gap verdict.
    pub slack: f64,
    pub table: RhoTable,
    pub bounds: BoundReport,
    pub closed_form: ClosedForm,
    /// Whether the closed form's standing assumption holds (always true for DSM).
    pub closed_form_applies: bool,
    pub grid: GridMeta,
    pub verdicts: Verdicts,
}

/// `ρ^k` table of a NUM instance: `M·(k-1)/k` capped at `K_i` paths for throughput,
/// `log min(k, K_i)` for log utility, `k = 1..=L+1`.
pub fn num_table(inst: &NumInstance) -> Result<RhoTable> {
    let m = inst.rate_cap();
    let labels = (0..inst.users).map(|i| format!("user {}", i + 1)).collect();
    RhoTable::tabulate(labels, inst.links + 1, |i, k| {
        Ok(match inst.utility {
            Utility::Throughput => {
                let r = rho_k_min_box(inst.paths[i], k)?;
                RhoValue { value: m * r.value, flag: r.flag }
            }
            Utility::Log => rho_k_neglogmax(inst.paths[i], k)?,
        })
    })
}

/// `ρ^k` table of a DSM instance: `(1/N) log(k/σ_i)` upper bounds, `k = 1..=L+1`.
pub fn dsm_table(inst: &DsmInstance) -> Result<RhoTable> {
    let labels = (0..inst.tones).map(|i| format!("tone {}", i + 1)).collect();
    RhoTable::tabulate(labels, inst.users + 1, |i, k| {
        let r = rho_k_hsigma(k, inst.sigma[i])?;
        Ok(RhoValue { value: r.value / inst.tones as f64, flag: r.flag })
    })
}

fn verdicts(p: f64, d: f64, slack: f64, bounds: &BoundReport) -> Verdicts {
    Verdicts {
        weak_duality: d <= p + slack,
        gap_within_bound: p - d <= bounds.b + slack,
        b_le_udell: bounds.b <= bounds.bound_udell,
        udell_le_classic: bounds.bound_udell <= bounds.bound_classic,
    }
}

pub fn num_gap_report(inst: &NumInstance, settings: &Settings) -> Result<GapReport> {
    let primal = num_primal_exact(inst, settings)?;
    let dual = num_dual_opt(inst, settings)?;
    let table = num_table(inst)?;
    let bounds = bound_report(&table, inst.links)?;
    let (family, closed_form, p_dir) = match inst.utility {
        Utility::Throughput => {
            (Family::NumThroughput, closed_form_num_throughput(inst.users, inst.links, inst.rate_cap())?, Certainty::Exact)
        }
        Utility::Log => (Family::NumLog, closed_form_num_log(inst.users, inst.links)?, Certainty::UpperBound),
    };
    Ok(GapReport {
        family,
        instance: Instance::Num(inst.clone()),
        primal: Estimate { value: primal.value, direction: p_dir },
        primal_utility: -primal.value,
        dual: Estimate { value: dual.value, direction: Certainty::LowerBound },
        dual_upper: dual.upper,
        dual_utility: -dual.value,
        gap: primal.value - dual.value,
        slack: NUM_SLACK,
        verdicts: verdicts(primal.value, dual.value, NUM_SLACK, &bounds),
        table,
        bounds,
        closed_form,
        closed_form_applies: inst.paths.iter().all(|&k| k > inst.links),
        grid: GridMeta {
            step: None,
            dual_cap: DUAL_CAP,
            dual_grid_points: DUAL_GRID_POINTS,
            kelley_iterations: dual.kelley_iterations,
            dual_y: dual.y,
        },
    })
}

/// DSM report on the tone grid with spacing `step`. The slack is the primal rounding
/// bound plus the dual discretization correction plus the dual search bracket width,
/// so `gap ≤ B + slack` follows from the true gap being at most `B`.
pub fn dsm_gap_report(inst: &DsmInstance, step: f64, settings: &Settings) -> Result<GapReport> {
    let primal = dsm_primal_grid(inst, step, settings)?;
    let dual = dsm_dual_grid(inst, step, settings)?;
    let table = dsm_table(inst)?;
    let bounds = bound_report(&table, inst.users)?;
    let slack = primal.rounding_slack + dual.correction + (dual.grid_upper - dual.grid_value);
    Ok(GapReport {
        family: Family::Dsm,
        instance: Instance::Dsm(inst.clone()),
        primal: Estimate { value: primal.value, direction: Certainty::UpperBound },
        primal_utility: -primal.value,
        dual: Estimate { value: dual.value, direction: Certainty::LowerBound },
        dual_upper: dual.grid_upper,
        dual_utility: -dual.value,
        gap: primal.value - dual.value,
        slack,
        verdicts: verdicts(primal.value, dual.value, slack, &bounds),
        table,
        bounds,
        closed_form: closed_form_dsm(inst.tones, inst.users, inst.sigma_min())?,
        closed_form_applies: true,
        grid: GridMeta {
            step: Some(step),
            dual_cap: (inst.users as f64) / (inst.tones as f64 * inst.sigma_min()) + 1.0,
            dual_grid_points: 21,
            kelley_iterations: dual.kelley_iterations,
            dual_y: dual.y,
        },
    })
}
