//! Duality-gap bounds: the refined bound `B` from the worst-case allocation of
//! per-block `k_i`, the two classic bounds, and closed forms for the two applications.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::nonconvexity::{Certainty, RhoTable};

/// Optimal allocation: `B = Σ_i ρ^{k_i}_i` with `k` maximizing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub value: f64,
    pub k: Vec<usize>,
}

/// Maximizes `Σ_i ρ^{k_i}_i` over `k_i ∈ {1..m+1}`, `Σ k_i ≤ m + n`.
///
/// Dynamic program over extra units `e_i = k_i - 1` with `Σ e_i ≤ m`. Rows need not
/// be concave in `k`, so no greedy shortcut applies. Ties go to smaller `k_i`.
pub fn solve_allocation(table: &RhoTable, m: usize) -> Result<Allocation> {
    table.validate()?;
    if table.columns() < m + 1 {
        return invalid(format!("table has {} columns, needs m + 1 = {}", table.columns(), m + 1));
    }
    let n = table.blocks();
    // best[i][b]: best value over the first i blocks using at most b extra units.
    let mut best = vec![vec![0.0f64; m + 1]; n + 1];
    for i in 1..=n {
        for b in 0..=m {
            let mut v = f64::NEG_INFINITY;
            for e in 0..=b {
                v = v.max(best[i - 1][b - e] + table.rho(i - 1, e + 1));
            }
            best[i][b] = v;
        }
    }
    let mut k = vec![1; n];
    let mut b = m;
    for i in (1..=n).rev() {
        let e = (0..=b)
            .find(|&e| best[i - 1][b - e] + table.rho(i - 1, e + 1) == best[i][b])
            .expect("backtracking follows a recorded optimum");
        k[i - 1] = e + 1;
        b -= e;
    }
    let value = k.iter().enumerate().map(|(i, &ki)| table.rho(i, ki)).sum();
    Ok(Allocation { value, k })
}

fn check_rhos(rhos: &[f64]) -> Result<()> {
    if rhos.is_empty() {
        return invalid("no nonconvexity values given");
    }
    if rhos.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return invalid("nonconvexity values must be finite and nonnegative");
    }
    Ok(())
}

/// `min{m+1, n} · max_i ρ_i`.
pub fn bound_classic(rhos: &[f64], m: usize) -> Result<f64> {
    check_rhos(rhos)?;
    let mx = rhos.iter().copied().fold(0.0, f64::max);
    Ok((m + 1).min(rhos.len()) as f64 * mx)
}

/// Sum of the `min{m, n}` largest `ρ_i`.
pub fn bound_udell(rhos: &[f64], m: usize) -> Result<f64> {
    check_rhos(rhos)?;
    let mut sorted = rhos.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(sorted.iter().take(m.min(rhos.len())).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub m: usize,
    #[serde(rename = "B")]
    pub b: f64,
    pub b_flag: Certainty,
    pub k_star: Vec<usize>,
    pub bound_udell: f64,
    pub udell_flag: Certainty,
    pub bound_classic: f64,
    pub classic_flag: Certainty,
    /// `B ≤ bound_udell ≤ bound_classic`.
    pub ordering_holds: bool,
}

/// Runs all three bounds on a table. The classic bounds use the last column as `ρ_i`.
pub fn bound_report(table: &RhoTable, m: usize) -> Result<BoundReport> {
    let alloc = solve_allocation(table, m)?;
    let last = table.columns();
    let rhos: Vec<f64> = (0..table.blocks()).map(|i| table.rho(i, last)).collect();
    let b_flag = fold_flags(alloc.k.iter().enumerate().map(|(i, &k)| table.flag(i, k)));
    let max_flag = fold_flags((0..table.blocks()).map(|i| table.flag(i, last)));
    let udell = bound_udell(&rhos, m)?;
    let classic = bound_classic(&rhos, m)?;
    Ok(BoundReport {
        m,
        b: alloc.value,
        b_flag,
        ordering_holds: alloc.value <= udell && udell <= classic,
        k_star: alloc.k,
        bound_udell: udell,
        udell_flag: max_flag,
        bound_classic: classic,
        classic_flag: max_flag,
    })
}

fn fold_flags(flags: impl Iterator<Item = Certainty>) -> Certainty {
    flags.fold(Certainty::Exact, Certainty::combine)
}

/// A closed-form bound next to the weaker expression it replaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub refined: f64,
    pub previous: f64,
}

fn check_counts(users: usize, links: usize) -> Result<f64> {
    if users == 0 || links == 0 {
        return invalid("counts must be positive");
    }
    Ok(users.min(links) as f64)
}

/// Throughput NUM with `N` users on `L` links, assuming every user has at least
/// `L + 1` paths: `min{N,L} · L/(L + min{N,L}) · c_max`.
pub fn closed_form_num_throughput(users: usize, links: usize, c_max: f64) -> Result<ClosedForm> {
    let q = check_counts(users, links)?;
    if !(c_max > 0.0 && c_max.is_finite()) {
        return invalid("c_max must be positive");
    }
    let l = links as f64;
    Ok(ClosedForm { refined: q * l / (l + q) * c_max, previous: q * l / (l + 1.0) * c_max })
}

/// Log-utility NUM: `min{N,L} · log(1 + L/min{N,L})`.
pub fn closed_form_num_log(users: usize, links: usize) -> Result<ClosedForm> {
    let q = check_counts(users, links)?;
    let l = links as f64;
    Ok(ClosedForm { refined: q * (1.0 + l / q).ln(), previous: q * (l + 1.0).ln() })
}

/// Spectrum management with `N` tones and `L` users: `(min{N,L}/N) · log((1 + L/min{N,L})/σ_min)`.
pub fn closed_form_dsm(tones: usize, users: usize, sigma_min: f64) -> Result<ClosedForm> {
    let q = check_counts(tones, users)?;
    if !(sigma_min > 0.0 && sigma_min <= 1.0) {
        return invalid(format!("sigma_min must lie in (0, 1], got {sigma_min}"));
    }
    let (l, n) = (users as f64, tones as f64);
    Ok(ClosedForm {
        refined: q / n * ((1.0 + l / q) / sigma_min).ln(),
        previous: q / n * ((l + 1.0) / sigma_min).ln(),
    })
}
