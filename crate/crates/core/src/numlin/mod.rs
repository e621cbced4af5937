//! Dense linear algebra helpers and the vertex-returning simplex engine.

mod simplex;

pub use simplex::{solve_lp, solve_lp_with, LpProblem, LpSolution, LpStatus};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Row-major dense matrix of finite reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from rows. All rows must share one length and hold finite values.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return invalid(format!("row {i} has length {}, expected {cols}", r.len()));
            }
            check_finite(r)?;
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<f64>], rows: usize) -> Result<Self> {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return invalid(format!("column {j} has length {}, expected {rows}", c.len()));
            }
            check_finite(c)?;
            for (i, v) in c.iter().enumerate() {
                m.data[i * columns.len() + j] = *v;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Appends a row; the first row pushed into an empty 0x0 matrix fixes the width.
    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if self.rows == 0 && self.cols == 0 {
            self.cols = row.len();
        }
        if row.len() != self.cols {
            return invalid(format!("row length {} does not match width {}", row.len(), self.cols));
        }
        check_finite(row)?;
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matmul");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

pub fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => invalid(format!("non-finite entry at position {i}")),
        None => Ok(()),
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `acc += w * v`
pub fn axpy(acc: &mut [f64], w: f64, v: &[f64]) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += w * x;
    }
}

/// Affine hull of a point list: its dimension and an orthonormal basis of its direction space.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineHull {
    pub rank: usize,
    pub basis: Vec<Vec<f64>>,
}

/// Dimension of the affine hull of `points`, i.e. the rank of `{p_t - p_1}`.
pub fn affine_rank(points: &[Vec<f64>], tol_rank: f64) -> Result<usize> {
    affine_hull(points, tol_rank).map(|h| h.rank)
}

/// Computes the affine hull of `points` through an SVD of the difference matrix.
/// Singular values at or below `tol_rank * max(1, sigma_max)` are treated as zero.
pub fn affine_hull(points: &[Vec<f64>], tol_rank: f64) -> Result<AffineHull> {
    let first = match points.first() {
        Some(p) => p,
        None => return invalid("affine rank of an empty point list"),
    };
    let m = first.len();
    if points.iter().any(|p| p.len() != m) {
        return invalid("points of unequal dimension");
    }
    for p in points {
        check_finite(p)?;
    }
    if points.len() == 1 || m == 0 {
        return Ok(AffineHull { rank: 0, basis: Vec::new() });
    }
    let diffs: Vec<Vec<f64>> = points[1..].iter().map(|p| sub(p, first)).collect();
    let d = Mat::from_rows(&diffs)?.to_nalgebra();
    let svd = d.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let sigma_max = order.first().map_or(0.0, |&i| svd.singular_values[i]);
    let threshold = tol_rank * sigma_max.max(1.0);
    let basis: Vec<Vec<f64>> = order
        .iter()
        .filter(|&&i| svd.singular_values[i] > threshold)
        .map(|&i| v_t.row(i).iter().copied().collect())
        .collect();
    Ok(AffineHull { rank: basis.len(), basis })
}

/// Nullspace vector of the matrix whose columns are `columns` (each of length `rows`),
/// taken as the right singular vector of the smallest singular value. Returns `None`
/// when the columns are independent at tolerance `tol_rank`.
pub fn null_vector(columns: &[Vec<f64>], rows: usize, tol_rank: f64) -> Result<Option<Vec<f64>>> {
    let n = columns.len();
    if n == 0 {
        return Ok(None);
    }
    let a = Mat::from_columns(columns, rows)?;
    // Pad with zero rows so the SVD yields a full set of right singular vectors.
    let padded_rows = rows.max(n);
    let mut padded = DMatrix::<f64>::zeros(padded_rows, n);
    for i in 0..rows {
        for j in 0..n {
            padded[(i, j)] = a.get(i, j);
        }
    }
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let (imin, smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let smax = svd.singular_values.iter().fold(0.0_f64, |m, &s| m.max(s));
    if smin > tol_rank * smax.max(1.0) {
        return Ok(None);
    }
    Ok(Some(v_t.row(imin).iter().copied().collect()))
}

/// Completes a linearly independent family to an orthonormal basis of `R^dim`.
///
/// The returned matrix holds the frame as columns; its first `partial_basis.len()`
/// columns span the same subspace as `partial_basis`. Completion picks, at each step,
/// the standard basis vector with the largest residual (lowest index on ties).
pub fn orthonormal_frame(partial_basis: &[Vec<f64>], dim: usize, tol_rank: f64) -> Result<Mat> {
    if partial_basis.len() > dim {
        return invalid(format!("{} vectors cannot be independent in dimension {dim}", partial_basis.len()));
    }
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for (i, v) in partial_basis.iter().enumerate() {
        if v.len() != dim {
            return invalid(format!("basis vector {i} has length {}, expected {dim}", v.len()));
        }
        check_finite(v)?;
        let scale = norm2(v);
        let r = orthogonalize(v, &frame);
        let rn = norm2(&r);
        if scale == 0.0 || rn <= tol_rank * scale {
            return Err(Error::InvalidInput(format!("basis vector {i} depends on the previous ones")));
        }
        frame.push(r.into_iter().map(|x| x / rn).collect());
    }
    while frame.len() < dim {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for j in 0..dim {
            let mut e = vec![0.0; dim];
            e[j] = 1.0;
            let r = orthogonalize(&e, &frame);
            let rn = norm2(&r);
            if best.as_ref().is_none_or(|(b, _)| rn > *b + 1e-12) {
                best = Some((rn, r));
            }
        }
        let (rn, r) = best.expect("dim > 0 here");
        frame.push(r.into_iter().map(|x| x / rn).collect());
    }
    Mat::from_columns(&frame, dim)
}

// Modified Gram-Schmidt, applied twice.
fn orthogonalize(v: &[f64], frame: &[Vec<f64>]) -> Vec<f64> {
    let mut r = v.to_vec();
    for _ in 0..2 {
        for q in frame {
            let c = dot(&r, q);
            axpy(&mut r, -c, q);
        }
    }
    r
}
