//! Linear algebra over the rationals and over the function ring.
//!
//! Two exact solvers live here: a sparse Gauss-Jordan solver over `Q` that
//! returns a certificate of inconsistency when no solution exists, and a
//! unit-pivot eliminator for matrices of [`ScalarFn`] (only units are ever
//! divided by). Rank sampling in floating point is used solely for the
//! probabilistic constant-rank checks.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::symexpr::{ScalarFn, Q};

/// Sparse row: column index to nonzero coefficient.
pub type SparseRow = BTreeMap<usize, Q>;

/// A linear system `A x = b` over `Q` with sparse rows.
#[derive(Debug, Clone, Default)]
pub struct SparseSystem {
    pub ncols: usize,
    pub rows: Vec<SparseRow>,
    pub rhs: Vec<Q>,
}

/// Outcome of [`SparseSystem::solve`].
#[derive(Debug, Clone, PartialEq)]
pub enum Solution {
    /// A particular solution (free variables set to zero).
    Unique(Vec<Q>),
    /// No solution: multipliers `y` with `y^T A = 0` and `y^T b != 0`.
    Inconsistent { witness: SparseRow },
}

fn axpy(target: &mut SparseRow, factor: &Q, source: &SparseRow) {
    for (c, v) in source {
        let entry = target.entry(*c).or_insert_with(Q::zero);
        *entry += factor * v;
        if entry.is_zero() {
            target.remove(c);
        }
    }
}

impl SparseSystem {
    pub fn new(ncols: usize) -> Self {
        Self { ncols, rows: Vec::new(), rhs: Vec::new() }
    }

    pub fn push(&mut self, row: SparseRow, rhs: Q) {
        debug_assert!(row.keys().all(|c| *c < self.ncols));
        self.rows.push(row.into_iter().filter(|(_, v)| !v.is_zero()).collect());
        self.rhs.push(rhs);
    }

    /// Exact solve with inconsistency witness.
    pub fn solve(&self) -> Solution {
        let n = self.rows.len();
        // Each working row carries the combination of original rows it represents.
        let mut rows: Vec<(SparseRow, Q, SparseRow)> = (0..n)
            .map(|i| {
                let mut tag = SparseRow::new();
                tag.insert(i, Q::one());
                (self.rows[i].clone(), self.rhs[i].clone(), tag)
            })
            .collect();
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        let mut used = vec![false; n];
        loop {
            // choose the unused row with the fewest entries, pivot on its first column
            let pick = (0..n).filter(|i| !used[*i] && !rows[*i].0.is_empty()).min_by_key(|i| rows[*i].0.len());
            let Some(r) = pick else { break };
            used[r] = true;
            let (&col, _) = rows[r].0.iter().next().unwrap();
            let inv = rows[r].0[&col].recip();
            let (prow, prhs, ptag) = {
                let (a, b, t) = &rows[r];
                let a: SparseRow = a.iter().map(|(c, v)| (*c, v * &inv)).collect();
                let t: SparseRow = t.iter().map(|(c, v)| (*c, v * &inv)).collect();
                (a, b * &inv, t)
            };
            rows[r] = (prow.clone(), prhs.clone(), ptag.clone());
            for i in 0..n {
                if i == r {
                    continue;
                }
                if let Some(f) = rows[i].0.get(&col).cloned() {
                    let f = -f;
                    axpy(&mut rows[i].0, &f, &prow);
                    rows[i].1 += &f * &prhs;
                    axpy(&mut rows[i].2, &f, &ptag);
                }
            }
            pivots.push((r, col));
        }
        for (a, b, tag) in &rows {
            if a.is_empty() && !b.is_zero() {
                return Solution::Inconsistent { witness: tag.clone() };
            }
        }
        let mut x = vec![Q::zero(); self.ncols];
        for (r, col) in pivots {
            x[col] = rows[r].1.clone();
        }
        Solution::Unique(x)
    }

    /// Basis of the null space of `A`.
    pub fn nullspace(&self) -> Vec<Vec<Q>> {
        let mut rows: Vec<SparseRow> = self.rows.clone();
        let mut pivot_of_col: BTreeMap<usize, usize> = BTreeMap::new();
        let mut used = vec![false; rows.len()];
        loop {
            let pick = (0..rows.len()).find(|i| !used[*i] && !rows[*i].is_empty());
            let Some(r) = pick else { break };
            used[r] = true;
            let (&col, v) = rows[r].iter().next().unwrap();
            let inv = v.recip();
            let prow: SparseRow = rows[r].iter().map(|(c, v)| (*c, v * &inv)).collect();
            rows[r] = prow.clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != r {
                    if let Some(f) = row.get(&col).cloned() {
                        axpy(row, &-f, &prow);
                    }
                }
            }
            pivot_of_col.insert(col, r);
        }
        let mut basis = Vec::new();
        for free in (0..self.ncols).filter(|c| !pivot_of_col.contains_key(c)) {
            let mut v = vec![Q::zero(); self.ncols];
            v[free] = Q::one();
            for (col, r) in &pivot_of_col {
                if let Some(a) = rows[*r].get(&free) {
                    v[*col] = -a;
                }
            }
            basis.push(v);
        }
        basis
    }

    pub fn rank(&self) -> usize {
        self.ncols - self.nullspace().len()
    }

    /// Residual `A x - b` is zero.
    pub fn satisfied_by(&self, x: &[Q]) -> bool {
        self.rows.iter().zip(&self.rhs).all(|(row, b)| {
            let lhs: Q = row.iter().map(|(c, v)| v * &x[*c]).sum();
            lhs == *b
        })
    }
}

/// Dense matrix of functions, row-major.
pub type FnMatrix = Vec<Vec<ScalarFn>>;

/// Solves `m * X = rhs` for `X` (columns of `rhs` solved simultaneously),
/// dividing only by units. `m` is `k x r`; the system may be overdetermined,
/// in which case consistency is checked exactly.
pub fn solve_unit_pivot(m: &FnMatrix, rhs: &FnMatrix, dim: usize) -> Result<FnMatrix> {
    unit_pivot(m, rhs, dim, false)
}

/// Like [`solve_unit_pivot`] but allows dependent columns; the unknowns of
/// columns without a pivot are set to zero.
pub fn solve_particular(m: &FnMatrix, rhs: &FnMatrix, dim: usize) -> Result<FnMatrix> {
    unit_pivot(m, rhs, dim, true)
}

fn unit_pivot(m: &FnMatrix, rhs: &FnMatrix, dim: usize, allow_free: bool) -> Result<FnMatrix> {
    let k = m.len();
    let r = m.first().map_or(0, Vec::len);
    let ncols_rhs = rhs.first().map_or(0, Vec::len);
    if rhs.len() != k {
        return Err(Error::DimensionMismatch("right-hand side row count".into()));
    }
    let mut a: FnMatrix = m.clone();
    let mut b: FnMatrix = rhs.clone();
    let mut pivot_row_of_col: Vec<Option<usize>> = vec![None; r];
    let mut row_used = vec![false; k];
    for col in 0..r {
        let pivot = (0..k).filter(|i| !row_used[*i]).find(|i| a[*i][col].is_unit());
        let Some(p) = pivot else {
            if (0..k).any(|i| !row_used[i] && !a[i][col].is_zero()) {
                return Err(Error::FrameSolveFailure(format!("column {col} has no unit pivot; re-expansion would divide by a non-unit")));
            }
            continue;
        };
        row_used[p] = true;
        let inv = a[p][col].unit_inverse().unwrap();
        for j in 0..r {
            a[p][j] = &a[p][j] * &inv;
        }
        for j in 0..ncols_rhs {
            b[p][j] = &b[p][j] * &inv;
        }
        for i in 0..k {
            if i == p || a[i][col].is_zero() {
                continue;
            }
            let f = a[i][col].clone();
            for j in 0..r {
                let t = &f * &a[p][j];
                a[i][j] = &a[i][j] - &t;
            }
            for j in 0..ncols_rhs {
                let t = &f * &b[p][j];
                b[i][j] = &b[i][j] - &t;
            }
        }
        pivot_row_of_col[col] = Some(p);
    }
    for i in (0..k).filter(|i| !row_used[*i]) {
        if a[i].iter().any(|v| !v.is_zero()) {
            return Err(Error::FrameSolveFailure("elimination left a non-unit remainder".into()));
        }
        if b[i].iter().any(|v| !v.is_zero()) {
            return Err(Error::FrameSolveFailure("right-hand side is not in the span of the frame".into()));
        }
    }
    if !allow_free && pivot_row_of_col.iter().any(Option::is_none) {
        return Err(Error::FrameSolveFailure("frame columns are linearly dependent".into()));
    }
    let mut x = vec![vec![ScalarFn::zero(dim); ncols_rhs]; r];
    for (col, p) in pivot_row_of_col.iter().enumerate() {
        if let Some(p) = p {
            x[col] = b[*p].clone();
        }
    }
    Ok(x)
}

/// Determinant by cofactor expansion (exact, no division).
pub fn det(m: &FnMatrix, dim: usize) -> ScalarFn {
    let n = m.len();
    match n {
        0 => ScalarFn::one(dim),
        1 => m[0][0].clone(),
        2 => &(&m[0][0] * &m[1][1]) - &(&m[0][1] * &m[1][0]),
        _ => {
            let mut acc = ScalarFn::zero(dim);
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let minor: FnMatrix =
                    m[1..].iter().map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| v.clone()).collect()).collect();
                let term = &m[0][j] * &det(&minor, dim);
                acc = if j % 2 == 0 { &acc + &term } else { &acc - &term };
            }
            acc
        }
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Result of the symbolic minor analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinorRank {
    /// Largest size of a minor that is not identically zero.
    pub generic_rank: usize,
    /// Whether some minor of that size is a unit, which pins the rank at
    /// every point.
    pub unit_minor: bool,
}

/// Generic rank via exact minors; `None` when the matrix is too large for
/// exhaustive minor enumeration.
pub fn minor_rank(m: &FnMatrix, dim: usize) -> Option<MinorRank> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if rows.min(cols) > 6 || rows.max(cols) > 12 {
        return None;
    }
    for size in (1..=rows.min(cols)).rev() {
        let mut nonzero = false;
        let mut unit = false;
        for rs in combinations(rows, size) {
            for cs in combinations(cols, size) {
                let sub: FnMatrix = rs.iter().map(|i| cs.iter().map(|j| m[*i][*j].clone()).collect()).collect();
                let d = det(&sub, dim);
                if !d.is_zero() {
                    nonzero = true;
                    if d.is_unit() {
                        unit = true;
                    }
                }
                if unit {
                    return Some(MinorRank { generic_rank: size, unit_minor: true });
                }
            }
        }
        if nonzero {
            return Some(MinorRank { generic_rank: size, unit_minor: false });
        }
    }
    Some(MinorRank { generic_rank: 0, unit_minor: true })
}

/// Rank of a rational matrix.
pub fn rank_q(m: &[Vec<Q>]) -> usize {
    let ncols = m.first().map_or(0, Vec::len);
    let mut sys = SparseSystem::new(ncols);
    for row in m {
        sys.push(row.iter().enumerate().map(|(c, v)| (c, v.clone())).collect(), Q::zero());
    }
    sys.rank()
}

/// Numerical rank with a relative tolerance (partial-pivot elimination).
pub fn rank_f64(m: &[Vec<f64>], rel_tol: f64) -> usize {
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    let tol = rel_tol * scale;
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let (p, best) = (rank..rows).map(|i| (i, a[i][col].abs())).fold((rank, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= tol {
            continue;
        }
        a.swap(rank, p);
        for i in rank + 1..rows {
            let f = a[i][col] / a[rank][col];
            for j in col..cols {
                a[i][j] -= f * a[rank][j];
            }
        }
        rank += 1;
    }
    rank
}

/// Rank of a function matrix at a rational point: exact when every entry
/// evaluates exactly there, floating otherwise. Returns `(rank, exact)`.
pub fn rank_at(m: &FnMatrix, point: &[Q]) -> (usize, bool) {
    let exact: Option<Vec<Vec<Q>>> = m.iter().map(|row| row.iter().map(|f| f.evaluate_exact(point)).collect()).collect();
    match exact {
        Some(e) => (rank_q(&e), true),
        None => {
            let f: Vec<Vec<f64>> = m.iter().map(|row| row.iter().map(|f| f.evaluate_q(point)).collect()).collect();
            (rank_f64(&f, 1e-9), false)
        }
    }
}
