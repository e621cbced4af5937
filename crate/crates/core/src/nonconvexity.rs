//! k-th nonconvexity `ρ^k(f)`: closed forms for three function families, a grid
//! estimator for sampled functions, and the k-th envelope `f^(k)`.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_cap, invalid, Error, Result};
use crate::hulls::PointSet;
use crate::numlin::{self, check_finite};
use crate::settings::Settings;
use crate::sfdecomp::decompose_epigraph;

/// How a reported number relates to the quantity it stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certainty {
    Exact,
    UpperBound,
    LowerBound,
    Indeterminate,
}

impl Certainty {
    /// Certainty of a monotone (sum/max) aggregate of two numbers.
    pub fn combine(self, other: Certainty) -> Certainty {
        use Certainty::*;
        match (self, other) {
            (Exact, x) | (x, Exact) => x,
            (UpperBound, UpperBound) => UpperBound,
            (LowerBound, LowerBound) => LowerBound,
            _ => Indeterminate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoValue {
    pub value: f64,
    pub flag: Certainty,
}

impl RhoValue {
    fn exact(value: f64) -> Self {
        Self { value, flag: Certainty::Exact }
    }
}

fn check_positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return invalid(format!("{name} must be at least 1"));
    }
    Ok(())
}

/// `ρ^k` of `min_s x_s` on the unit box of `R^n`: `(k-1)/k` up to `k = n`, then `(n-1)/n`.
pub fn rho_k_min_box(n: usize, k: usize) -> Result<RhoValue> {
    check_positive("n", n)?;
    check_positive("k", k)?;
    let j = k.min(n) as f64;
    Ok(RhoValue::exact((j - 1.0) / j))
}

/// `ρ^k` of `-log max_s x_s` on the nonnegative orthant minus the origin: `log min(k, n)`.
pub fn rho_k_neglogmax(n: usize, k: usize) -> Result<RhoValue> {
    check_positive("n", n)?;
    check_positive("k", k)?;
    Ok(RhoValue::exact((k.min(n) as f64).ln()))
}

/// Upper bound `log(k/σ)` on `ρ^k(h_σ)`; `ρ^1 = 0` exactly.
pub fn rho_k_hsigma(k: usize, sigma: f64) -> Result<RhoValue> {
    check_positive("k", k)?;
    check_sigma(sigma)?;
    if k == 1 {
        return Ok(RhoValue::exact(0.0));
    }
    Ok(RhoValue { value: (k as f64 / sigma).ln(), flag: Certainty::UpperBound })
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return invalid(format!("sigma must lie in (0, 1], got {sigma}"));
    }
    Ok(())
}

/// `H(x;σ) = Π_s (‖x‖₁ - x_s + σ) / (‖x‖₁ + σ)` for `x >= 0`.
pub fn h_product(x: &[f64], sigma: f64) -> f64 {
    let l1: f64 = x.iter().sum();
    x.iter().map(|&xs| (l1 - xs + sigma) / (l1 + sigma)).product()
}

/// `h_σ(x) = log H(x;σ)`, evaluated as a sum of logs.
pub fn eval_h_sigma(x: &[f64], sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_finite(x)?;
    if x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return invalid("h_sigma is defined on the unit box");
    }
    let l1: f64 = x.iter().sum();
    Ok(x.iter().map(|&xs| ((l1 - xs + sigma) / (l1 + sigma)).ln()).sum())
}

pub fn min_box_fn(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `-log max_s x_s`, `+∞` at the origin.
pub fn neglogmax_fn(x: &[f64]) -> f64 {
    let mx = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if mx > 0.0 {
        -mx.ln()
    } else {
        f64::INFINITY
    }
}

pub type ExactEvaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A function known through its values on a finite grid. `+∞` marks points outside
/// the domain; they never enter a support.
#[derive(Clone)]
pub struct SampledFunction {
    box_lo: Vec<f64>,
    box_hi: Vec<f64>,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    exact: Option<ExactEvaluator>,
}

impl fmt::Debug for SampledFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledFunction")
            .field("dim", &self.dim())
            .field("points", &self.points.len())
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl SampledFunction {
    pub fn new(box_lo: Vec<f64>, box_hi: Vec<f64>, points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        let d = box_lo.len();
        if d == 0 || box_hi.len() != d {
            return invalid("box corners must be nonempty and of equal dimension");
        }
        check_finite(&box_lo)?;
        check_finite(&box_hi)?;
        if box_lo.iter().zip(&box_hi).any(|(l, h)| l > h) {
            return invalid("box lower corner exceeds upper corner");
        }
        if points.len() != values.len() {
            return invalid(format!("{} points but {} values", points.len(), values.len()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != d {
                return invalid(format!("grid point {i} has dimension {}, expected {d}", p.len()));
            }
            check_finite(p)?;
            if p.iter().zip(box_lo.iter().zip(&box_hi)).any(|(x, (l, h))| x < l || x > h) {
                return invalid(format!("grid point {i} lies outside the box"));
            }
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return invalid("values must be finite or +inf");
        }
        if !values.iter().any(|v| v.is_finite()) {
            return invalid("a proper function needs at least one finite value");
        }
        Ok(Self { box_lo, box_hi, points, values, exact: None })
    }

    /// Samples `f` on the tensor grid with `divisions` equal steps per axis.
    pub fn from_fn(box_lo: Vec<f64>, box_hi: Vec<f64>, divisions: usize, f: ExactEvaluator) -> Result<Self> {
        check_positive("divisions", divisions)?;
        let axes: Vec<Vec<f64>> = box_lo
            .iter()
            .zip(&box_hi)
            .map(|(&l, &h)| (0..=divisions).map(|i| l + (h - l) * i as f64 / divisions as f64).collect())
            .collect();
        let points: Vec<Vec<f64>> = axes.into_iter().multi_cartesian_product().collect();
        let values = points.iter().map(|p| f(p)).collect();
        Ok(Self::new(box_lo, box_hi, points, values)?.with_exact(f))
    }

    /// Attaches an exact evaluator used at off-grid combination points.
    pub fn with_exact(mut self, f: ExactEvaluator) -> Self {
        self.exact = Some(f);
        self
    }

    pub fn dim(&self) -> usize {
        self.box_lo.len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    fn finite_indices(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| self.values[i].is_finite()).collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SampledDoc = serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))?;
        if doc.box_lo.len() != doc.dim {
            return invalid(format!("dim = {} but box_lo has {} entries", doc.dim, doc.box_lo.len()));
        }
        let values = doc
            .values
            .into_iter()
            .map(|v| match v {
                SampleValue::Number(x) => Ok(x),
                SampleValue::Text(s) if s == "inf" => Ok(f64::INFINITY),
                SampleValue::Text(s) => invalid(format!("unrecognized value '{s}'")),
            })
            .collect::<Result<Vec<f64>>>()?;
        Self::new(doc.box_lo, doc.box_hi, doc.points, values)
    }

    pub fn to_json(&self) -> String {
        let doc = SampledDoc {
            dim: self.dim(),
            box_lo: self.box_lo.clone(),
            box_hi: self.box_hi.clone(),
            points: self.points.clone(),
            values: self
                .values
                .iter()
                .map(|&v| if v.is_finite() { SampleValue::Number(v) } else { SampleValue::Text("inf".into()) })
                .collect(),
        };
        serde_json::to_string(&doc).expect("sampled function serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct SampledDoc {
    dim: usize,
    box_lo: Vec<f64>,
    box_hi: Vec<f64>,
    points: Vec<Vec<f64>>,
    values: Vec<SampleValue>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SampleValue {
    Number(f64),
    Text(String),
}

/// A grid point combination attaining a reported value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: Vec<f64>,
    /// Grid indices and weights of the envelope combination at `point`.
    pub support: Vec<usize>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoEstimate {
    pub value: f64,
    pub flag: Certainty,
    pub witness: Option<Witness>,
}

/// Discretized k-th envelope value at a point, with its supporting combination.
#[derive(Debug, Clone, PartialEq)]
struct EnvelopeValue {
    value: f64,
    support: Vec<usize>,
    weights: Vec<f64>,
}

/// `f^(k)(x)` over the grid: the least value of `Σ α_j f(x_j)` over at most `k` finite
/// grid points whose weights reproduce `x`. An upper approximation of the true
/// envelope that converges under grid refinement.
pub fn envelope_k(f: &SampledFunction, k: usize, x: &[f64], settings: &Settings) -> Result<f64> {
    check_positive("k", k)?;
    if x.len() != f.dim() {
        return invalid(format!("x has dimension {}, expected {}", x.len(), f.dim()));
    }
    check_finite(x)?;
    let finite = f.finite_indices();
    check_envelope_cap(finite.len(), k, settings)?;
    envelope_at(f, &finite, k, x, settings)?
        .map(|e| e.value)
        .ok_or_else(|| Error::Infeasible(format!("x = {x:?} is not a combination of {k} grid points")))
}

fn check_envelope_cap(finite: usize, k: usize, settings: &Settings) -> Result<()> {
    if k < finite {
        check_cap("envelope subsets", binomial(finite, k), settings.caps.subsets)?;
    }
    Ok(())
}

fn envelope_at(
    f: &SampledFunction,
    finite: &[usize],
    k: usize,
    x: &[f64],
    settings: &Settings,
) -> Result<Option<EnvelopeValue>> {
    if k >= finite.len() {
        return epigraph_min(f, finite, x, settings);
    }
    let tol = settings.tol.reconstruct;
    let mut best: Option<EnvelopeValue> = None;
    for subset in finite.iter().copied().combinations(k) {
        let boxed = (0..x.len()).all(|s| {
            let (lo, hi) = subset
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| (lo.min(f.points[i][s]), hi.max(f.points[i][s])));
            x[s] >= lo - tol && x[s] <= hi + tol
        });
        if !boxed {
            continue;
        }
        if let Some(e) = epigraph_min(f, &subset, x, settings)? {
            if best.as_ref().is_none_or(|b| e.value < b.value) {
                best = Some(e);
            }
        }
    }
    Ok(best)
}

fn epigraph_min(f: &SampledFunction, idx: &[usize], x: &[f64], settings: &Settings) -> Result<Option<EnvelopeValue>> {
    let epi: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| {
            let mut p = f.points[i].clone();
            p.push(f.values[i]);
            p
        })
        .collect();
    let set = PointSet::new("epigraph", epi)?;
    match decompose_epigraph(&[set], x, settings) {
        Ok(dec) => {
            let comb = &dec.blocks[0];
            Ok(Some(EnvelopeValue {
                value: dec.target[x.len()],
                support: comb.support.iter().map(|&j| idx[j]).collect(),
                weights: comb.weights.clone(),
            }))
        }
        Err(Error::Infeasible(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Compositions of `steps` into `parts` positive integers, lexicographic.
fn compositions(steps: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for first in 1..=left.saturating_sub(parts - 1) {
            cur.push(first);
            rec(left - first, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if parts >= 1 && steps >= parts {
        rec(steps, parts, &mut Vec::new(), &mut out);
    }
    out
}

/// Weight vectors on `j` points: multiples of `1/steps` with every entry positive,
/// plus the uniform vector `1/j`.
fn weight_lattice(steps: usize, j: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = compositions(steps, j)
        .into_iter()
        .map(|c| c.into_iter().map(|v| v as f64 / steps as f64).collect())
        .collect();
    if !steps.is_multiple_of(j) {
        out.push(vec![1.0 / j as f64; j]);
    }
    out
}

/// Certified lower bound on `ρ^k(f)` from grid data.
///
/// Candidate points are the grid points and, when an exact evaluator is attached,
/// every lattice-weighted combination of up to `min(k, d+1)` finite grid points. At
/// each candidate `x` the estimate is `f(x) - f^(k)(x)` with the discretized envelope,
/// which is realized by a `k`-point combination and therefore never exceeds `ρ^k`.
pub fn rho_k_grid(f: &SampledFunction, k: usize, weight_steps: usize, settings: &Settings) -> Result<RhoEstimate> {
    check_positive("k", k)?;
    check_positive("weight_steps", weight_steps)?;
    let finite = f.finite_indices();
    check_envelope_cap(finite.len(), k, settings)?;
    let d = f.dim();

    let mut candidates: Vec<Vec<f64>> = f.points.clone();
    if f.exact.is_some() {
        let q = k.min(d + 1).min(finite.len());
        let mut count: u128 = 0;
        for j in 2..=q {
            count += binomial(finite.len(), j) * weight_lattice(weight_steps, j).len() as u128;
        }
        check_cap("candidate combinations", count, settings.caps.subsets)?;
        for j in 2..=q {
            let lattice = weight_lattice(weight_steps, j);
            for subset in finite.iter().copied().combinations(j) {
                for w in &lattice {
                    let mut x = vec![0.0; d];
                    for (&i, &wi) in subset.iter().zip(w) {
                        numlin::axpy(&mut x, wi, &f.points[i]);
                    }
                    candidates.push(x);
                }
            }
        }
    }
    let mut seen = HashSet::new();
    candidates.retain(|x| seen.insert(quantize(x)));

    let grid_value = |x: &Vec<f64>, c: usize| -> f64 {
        match &f.exact {
            Some(e) => e(x),
            None => f.values[c],
        }
    };
    let scored: Vec<Option<(f64, EnvelopeValue)>> = candidates
        .par_iter()
        .enumerate()
        .map(|(c, x)| {
            let fx = grid_value(x, c);
            Ok(envelope_at(f, &finite, k, x, settings)?.map(|env| (fx - env.value, env)))
        })
        .collect::<Result<_>>()?;

    let mut best = RhoEstimate { value: 0.0, flag: Certainty::LowerBound, witness: None };
    for (x, s) in candidates.iter().zip(scored) {
        if let Some((v, env)) = s {
            if v > best.value {
                best.value = v;
                best.witness = Some(Witness { point: x.clone(), support: env.support, weights: env.weights });
            }
        }
    }
    if k == 1 {
        best.flag = Certainty::Exact;
    }
    Ok(best)
}

fn quantize(x: &[f64]) -> Vec<i64> {
    x.iter().map(|v| (v * 1e12).round() as i64).collect()
}

/// Per-block `ρ^k` values for `k = 1..=columns`, each flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoRow {
    #[serde(default)]
    pub label: String,
    pub values: Vec<f64>,
    pub flags: Vec<Certainty>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoTable {
    rows: Vec<RhoRow>,
}

impl RhoTable {
    pub fn new(rows: Vec<RhoRow>) -> Result<Self> {
        let table = Self { rows };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        let cols = match self.rows.first() {
            Some(r) => r.values.len(),
            None => return invalid("rho table has no rows"),
        };
        if cols == 0 {
            return invalid("rho table has no columns");
        }
        for (i, r) in self.rows.iter().enumerate() {
            if r.values.len() != cols || r.flags.len() != cols {
                return invalid(format!("row {i} has {} values and {} flags, expected {cols}", r.values.len(), r.flags.len()));
            }
            check_finite(&r.values)?;
            if r.values[0] != 0.0 {
                return invalid(format!("row {i}: rho^1 must be 0, got {}", r.values[0]));
            }
            if r.values.iter().any(|&v| v < 0.0) {
                return invalid(format!("row {i} has a negative entry"));
            }
            if r.values.windows(2).any(|w| w[1] < w[0]) {
                return invalid(format!("row {i} decreases in k"));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: RhoTable = serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    /// Builds a table by evaluating `rho(block, k)` for `k = 1..=columns`.
    pub fn tabulate(
        labels: Vec<String>,
        columns: usize,
        mut rho: impl FnMut(usize, usize) -> Result<RhoValue>,
    ) -> Result<Self> {
        check_positive("columns", columns)?;
        let rows = labels
            .into_iter()
            .enumerate()
            .map(|(i, label)| {
                let vals = (1..=columns).map(|k| rho(i, k)).collect::<Result<Vec<_>>>()?;
                Ok(RhoRow {
                    label,
                    values: vals.iter().map(|v| v.value).collect(),
                    flags: vals.iter().map(|v| v.flag).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    pub fn rows(&self) -> &[RhoRow] {
        &self.rows
    }

    pub fn blocks(&self) -> usize {
        self.rows.len()
    }

    pub fn columns(&self) -> usize {
        self.rows[0].values.len()
    }

    /// `ρ^k_i` with `k` counted from 1.
    pub fn rho(&self, block: usize, k: usize) -> f64 {
        self.rows[block].values[k - 1]
    }

    pub fn flag(&self, block: usize, k: usize) -> Certainty {
        self.rows[block].flags[k - 1]
    }
}
