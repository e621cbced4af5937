use serde::{Deserialize, Serialize};

use super::{check_finite, dot, Mat};
use crate::error::{invalid, Error, Result};
use crate::settings::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// `min c·x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x >= lower`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    objective: Vec<f64>,
    a_eq: Mat,
    b_eq: Vec<f64>,
    a_ub: Mat,
    b_ub: Vec<f64>,
    lower: Vec<f64>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>) -> Result<Self> {
        check_finite(&objective)?;
        let n = objective.len();
        Ok(Self {
            a_eq: Mat::zeros(0, n),
            b_eq: Vec::new(),
            a_ub: Mat::zeros(0, n),
            b_ub: Vec::new(),
            lower: vec![0.0; n],
            objective,
        })
    }

    pub fn add_eq(&mut self, row: &[f64], rhs: f64) -> Result<()> {
        self.check_row(row, rhs)?;
        self.a_eq.push_row(row)?;
        self.b_eq.push(rhs);
        Ok(())
    }

    pub fn add_ub(&mut self, row: &[f64], rhs: f64) -> Result<()> {
        self.check_row(row, rhs)?;
        self.a_ub.push_row(row)?;
        self.b_ub.push(rhs);
        Ok(())
    }

    /// `row·x >= rhs`, stored as `-row·x <= -rhs`.
    pub fn add_lb(&mut self, row: &[f64], rhs: f64) -> Result<()> {
        let neg: Vec<f64> = row.iter().map(|v| -v).collect();
        self.add_ub(&neg, -rhs)
    }

    pub fn set_lower(&mut self, lower: Vec<f64>) -> Result<()> {
        if lower.len() != self.num_vars() {
            return invalid(format!("{} lower bounds for {} variables", lower.len(), self.num_vars()));
        }
        check_finite(&lower)?;
        self.lower = lower;
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_eq(&self) -> usize {
        self.b_eq.len()
    }

    pub fn num_ub(&self) -> usize {
        self.b_ub.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn eq_row(&self, i: usize) -> (&[f64], f64) {
        (self.a_eq.row(i), self.b_eq[i])
    }

    pub fn ub_row(&self, i: usize) -> (&[f64], f64) {
        (self.a_ub.row(i), self.b_ub[i])
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    fn check_row(&self, row: &[f64], rhs: f64) -> Result<()> {
        if row.len() != self.num_vars() {
            return invalid(format!("constraint row has {} entries for {} variables", row.len(), self.num_vars()));
        }
        if !rhs.is_finite() {
            return invalid("non-finite right-hand side");
        }
        check_finite(row)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point; empty unless `status` is `Optimal`.
    pub x: Vec<f64>,
    /// Basic columns at termination. Indices below `num_vars` are structural,
    /// `num_vars + i` is the slack of inequality row `i`.
    pub basis: Vec<usize>,
    pub objective: f64,
    /// Multipliers of the equality rows (`c - A^T y` is the reduced cost).
    pub duals_eq: Vec<f64>,
    /// Multipliers of the inequality rows; nonpositive at an optimum.
    pub duals_ub: Vec<f64>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn terminal(status: LpStatus) -> Self {
        let objective = match status {
            LpStatus::Infeasible => f64::INFINITY,
            _ => f64::NEG_INFINITY,
        };
        Self { status, x: Vec::new(), basis: Vec::new(), objective, duals_eq: Vec::new(), duals_ub: Vec::new() }
    }
}

pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution> {
    solve_lp_with(problem, &Tolerances::default())
}

/// Two-phase dense simplex. An optimal answer is always a basic feasible solution.
pub fn solve_lp_with(problem: &LpProblem, tol: &Tolerances) -> Result<LpSolution> {
    let mut tab = Tableau::build(problem);
    let scale = tab.rhs_scale();

    if tab.art_start < tab.cols {
        let cost: Vec<f64> = (0..tab.cols).map(|j| if j >= tab.art_start { 1.0 } else { 0.0 }).collect();
        if tab.run(&cost, tab.cols, tol)? == Outcome::Unbounded {
            return Err(Error::NumericBreakdown("phase one reported an unbounded ray".into()));
        }
        let infeasibility = -tab.d[tab.cols];
        if infeasibility > tol.lp * scale {
            return Ok(LpSolution::terminal(LpStatus::Infeasible));
        }
        tab.drive_out_artificials(tol);
    }

    let n = problem.num_vars();
    let cost: Vec<f64> = (0..tab.cols).map(|j| if j < n { problem.objective[j] } else { 0.0 }).collect();
    let limit = tab.art_start;
    if tab.run(&cost, limit, tol)? == Outcome::Unbounded {
        return Ok(LpSolution::terminal(LpStatus::Unbounded));
    }
    Ok(tab.extract(problem, tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
}

struct Tableau {
    rows: usize,
    /// Number of columns excluding the right-hand side.
    cols: usize,
    n_struct: usize,
    n_eq: usize,
    art_start: usize,
    /// Row-major `rows x (cols + 1)`; last entry of a row is its right-hand side.
    t: Vec<f64>,
    /// Reduced-cost row; `d[cols]` holds minus the objective value.
    d: Vec<f64>,
    basis: Vec<usize>,
    sign: Vec<f64>,
    /// Column that started as `sign[r] * e_r`-compatible identity for row `r`.
    ident: Vec<usize>,
}

impl Tableau {
    fn build(p: &LpProblem) -> Self {
        let n = p.num_vars();
        let n_eq = p.num_eq();
        let n_ub = p.num_ub();
        let rows = n_eq + n_ub;

        let mut rhs = Vec::with_capacity(rows);
        for i in 0..n_eq {
            rhs.push(p.b_eq[i] - dot(p.a_eq.row(i), &p.lower));
        }
        for i in 0..n_ub {
            rhs.push(p.b_ub[i] - dot(p.a_ub.row(i), &p.lower));
        }
        let sign: Vec<f64> = rhs.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
        let needs_art: Vec<bool> = (0..rows).map(|r| r < n_eq || sign[r] < 0.0).collect();
        let art_start = n + n_ub;
        let cols = art_start + needs_art.iter().filter(|&&a| a).count();
        let width = cols + 1;

        let mut t = vec![0.0; rows * width];
        let mut basis = vec![0; rows];
        let mut ident = vec![0; rows];
        let mut next_art = art_start;
        for r in 0..rows {
            let row = &mut t[r * width..(r + 1) * width];
            let src = if r < n_eq { p.a_eq.row(r) } else { p.a_ub.row(r - n_eq) };
            for (dst, v) in row[..n].iter_mut().zip(src) {
                *dst = sign[r] * v;
            }
            if r >= n_eq {
                let slack = n + (r - n_eq);
                row[slack] = sign[r];
                ident[r] = slack;
                basis[r] = slack;
            }
            if needs_art[r] {
                row[next_art] = 1.0;
                basis[r] = next_art;
                if r < n_eq {
                    ident[r] = next_art;
                }
                next_art += 1;
            }
            row[cols] = sign[r] * rhs[r];
        }
        Self { rows, cols, n_struct: n, n_eq, art_start, t, d: vec![0.0; width], basis, sign, ident }
    }

    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, r: usize, j: usize) -> f64 {
        self.t[r * self.width() + j]
    }

    fn rhs_scale(&self) -> f64 {
        (0..self.rows).fold(1.0_f64, |m, r| m.max(self.at(r, self.cols).abs()))
    }

    fn price(&mut self, cost: &[f64]) {
        let w = self.width();
        self.d.iter_mut().for_each(|v| *v = 0.0);
        self.d[..self.cols].copy_from_slice(&cost[..self.cols]);
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            for j in 0..w {
                self.d[j] -= cb * self.t[r * w + j];
            }
        }
    }

    /// Minimizes `cost` over the current tableau; only columns `< limit` may enter.
    fn run(&mut self, cost: &[f64], limit: usize, tol: &Tolerances) -> Result<Outcome> {
        self.price(cost);
        let size = self.rows + self.cols;
        let bland_after = 50 * size;
        let hard_cap = bland_after + 200 * size + 1000;
        let mut blocked: Vec<usize> = Vec::new();
        let mut iter = 0usize;
        loop {
            iter += 1;
            if iter > hard_cap {
                return Err(Error::NumericBreakdown(format!("no convergence after {hard_cap} iterations")));
            }
            let bland = iter > bland_after;
            let entering = self.choose_entering(limit, bland, &blocked, tol);
            let q = match entering {
                Some(q) => q,
                None if blocked.is_empty() => return Ok(Outcome::Optimal),
                None => {
                    return Err(Error::NumericBreakdown(format!(
                        "only pivots below {:e} remain for improving columns {blocked:?}",
                        tol.pivot
                    )))
                }
            };
            match self.ratio_test(q, tol) {
                Ratio::Row(r) => {
                    self.pivot(r, q, tol);
                    blocked.clear();
                }
                Ratio::Tiny => blocked.push(q),
                Ratio::None => return Ok(Outcome::Unbounded),
            }
        }
    }

    fn choose_entering(&self, limit: usize, bland: bool, blocked: &[usize], tol: &Tolerances) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..limit {
            let dj = self.d[j];
            if dj >= -tol.lp || blocked.contains(&j) {
                continue;
            }
            if bland {
                return Some(j);
            }
            if best.is_none_or(|(_, b)| dj < b) {
                best = Some((j, dj));
            }
        }
        best.map(|(j, _)| j)
    }

    fn ratio_test(&self, q: usize, tol: &Tolerances) -> Ratio {
        let mut best: Option<(usize, f64)> = None;
        let mut tiny = false;
        for r in 0..self.rows {
            let a = self.at(r, q);
            if a <= tol.pivot {
                if a > 0.0 {
                    tiny = true;
                }
                continue;
            }
            let ratio = self.at(r, self.cols).max(0.0) / a;
            best = match best {
                None => Some((r, ratio)),
                Some((br, b)) => {
                    let slack = 1e-12 * b.abs().max(1.0);
                    if ratio < b - slack || (ratio <= b + slack && self.basis[r] < self.basis[br]) {
                        Some((r, ratio))
                    } else {
                        Some((br, b))
                    }
                }
            };
        }
        match best {
            Some((r, _)) => Ratio::Row(r),
            None if tiny => Ratio::Tiny,
            None => Ratio::None,
        }
    }

    fn pivot(&mut self, r: usize, q: usize, tol: &Tolerances) {
        let w = self.width();
        let p = self.t[r * w + q];
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        self.t[r * w + q] = 1.0;
        let pivot_row: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i * w + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * w..(i + 1) * w];
            for (v, pr) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
            row[q] = 0.0;
            let b = &mut row[self.cols];
            if *b < 0.0 && *b > -tol.lp {
                *b = 0.0;
            }
        }
        let f = self.d[q];
        if f != 0.0 {
            for (v, pr) in self.d.iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
            self.d[q] = 0.0;
        }
        self.basis[r] = q;
    }

    /// Pivots zero-level artificials out of the basis. Rows where no real column
    /// has a usable entry are redundant; their artificial stays basic at zero.
    fn drive_out_artificials(&mut self, tol: &Tolerances) {
        let w = self.width();
        for r in 0..self.rows {
            if self.basis[r] < self.art_start {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.art_start {
                let a = self.at(r, j).abs();
                if a > tol.pivot && best.is_none_or(|(_, b)| a > b) {
                    best = Some((j, a));
                }
            }
            if let Some((q, _)) = best {
                self.t[r * w + self.cols] = 0.0;
                self.pivot(r, q, tol);
            }
        }
    }

    fn extract(&self, p: &LpProblem, tol: &Tolerances) -> LpSolution {
        let n = self.n_struct;
        let mut x = p.lower.clone();
        for r in 0..self.rows {
            let j = self.basis[r];
            if j < n {
                let v = self.at(r, self.cols);
                x[j] += if v.abs() <= tol.lp * 1e-3 { 0.0 } else { v.max(0.0) };
            }
        }
        let mut basis: Vec<usize> = self.basis.iter().copied().filter(|&j| j < self.art_start).collect();
        basis.sort_unstable();
        let dual = |r: usize| -self.d[self.ident[r]] * if r < self.n_eq { self.sign[r] } else { 1.0 };
        LpSolution {
            status: LpStatus::Optimal,
            objective: dot(&p.objective, &x),
            x,
            basis,
            duals_eq: (0..self.n_eq).map(dual).collect(),
            duals_ub: (self.n_eq..self.rows).map(dual).collect(),
        }
    }
}

enum Ratio {
    Row(usize),
    Tiny,
    None,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(c: &[f64]) -> LpProblem {
        LpProblem::new(c.to_vec()).unwrap()
    }

    #[test]
    fn triangle_vertex_with_lowest_index_tie() {
        let mut p = lp(&[-1.0, -1.0]);
        p.add_ub(&[1.0, 1.0], 1.0).unwrap();
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 1.0).abs() < 1e-12);
        assert_eq!(s.x, vec![1.0, 0.0]);
    }

    #[test]
    fn forced_equality() {
        let mut p = lp(&[0.0]);
        p.add_eq(&[1.0], 1.0).unwrap();
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_feasible_set() {
        let mut p = lp(&[0.0]);
        p.add_ub(&[1.0], -1.0).unwrap();
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut p = lp(&[-1.0, 0.0]);
        p.add_ub(&[-1.0, 1.0], 1.0).unwrap();
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn no_constraints() {
        let s = solve_lp(&lp(&[1.0, 2.0])).unwrap();
        assert_eq!(s.x, vec![0.0, 0.0]);
        assert_eq!(solve_lp(&lp(&[1.0, -2.0])).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn shifted_lower_bounds() {
        // min x + y, x + y >= 1, x >= -2, y >= 0.5
        let mut p = lp(&[1.0, 1.0]);
        p.add_lb(&[1.0, 1.0], 1.0).unwrap();
        p.set_lower(vec![-2.0, 0.5]).unwrap();
        let s = solve_lp(&p).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
        assert!(s.x[0] >= -2.0 - 1e-12 && s.x[1] >= 0.5 - 1e-12);
    }

    #[test]
    fn redundant_equalities_keep_a_vertex() {
        let mut p = lp(&[1.0, 2.0, 3.0]);
        p.add_eq(&[1.0, 1.0, 1.0], 1.0).unwrap();
        p.add_eq(&[2.0, 2.0, 2.0], 2.0).unwrap();
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.x, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn duals_satisfy_complementary_slackness() {
        // min -3x - 2y  s.t. x + y <= 4, x + 3y <= 6, x <= 3
        let mut p = lp(&[-3.0, -2.0]);
        p.add_ub(&[1.0, 1.0], 4.0).unwrap();
        p.add_ub(&[1.0, 3.0], 6.0).unwrap();
        p.add_ub(&[1.0, 0.0], 3.0).unwrap();
        let s = solve_lp(&p).unwrap();
        assert!((s.objective + 11.0).abs() < 1e-12);
        let b = [4.0, 6.0, 3.0];
        let dual_obj: f64 = s.duals_ub.iter().zip(b).map(|(y, b)| y * b).sum();
        assert!((dual_obj - s.objective).abs() < 1e-10);
        assert!(s.duals_ub.iter().all(|&y| y <= 1e-12));
    }

    #[test]
    fn equality_duals_give_objective() {
        // min x + 2y s.t. x + y = 3 with a flipped row: -x + y = -1
        let mut p = lp(&[1.0, 2.0]);
        p.add_eq(&[1.0, 1.0], 3.0).unwrap();
        p.add_eq(&[-1.0, 1.0], -1.0).unwrap();
        let s = solve_lp(&p).unwrap();
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
        let dual_obj = s.duals_eq[0] * 3.0 + -s.duals_eq[1];
        assert!((dual_obj - s.objective).abs() < 1e-10);
    }

    #[test]
    fn rejects_malformed_rows() {
        let mut p = lp(&[1.0, 1.0]);
        assert!(p.add_eq(&[1.0], 1.0).is_err());
        assert!(p.add_ub(&[1.0, f64::INFINITY], 1.0).is_err());
        assert!(LpProblem::new(vec![f64::NAN]).is_err());
    }
}
