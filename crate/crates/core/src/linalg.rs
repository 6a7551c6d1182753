//! Compressed sparse rows and a banded LU factorisation with partial pivoting.

use crate::error::{Result, SimError};

/// Row-compressed sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates `(row, col, value)` entries; duplicates are summed in
/// insertion order so that assembly is bitwise reproducible.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(rows: usize, cols: usize) -> Self {
        TripletBuilder { rows, cols, entries: Vec::new() }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.rows && col < self.cols);
        self.entries.push((row, col, value));
    }

    pub fn build(mut self) -> SparseMatrix {
        // stable: equal keys keep insertion order
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.rows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("non-empty") += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseMatrix { rows: self.rows, cols: self.cols, row_ptr, col_idx, values }
    }
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        TripletBuilder::new(rows, cols).build()
    }

    pub fn identity(n: usize) -> Self {
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            b.push(i, i, 1.0);
        }
        b.build()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(col, value)` pairs of one row.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(j, _)| j == c).map_or(0.0, |(_, v)| v)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    /// `y^T A x`.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(y).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut b = TripletBuilder::new(self.cols, self.rows);
        for (r, c, v) in self.triplets() {
            b.push(c, r, v);
        }
        b.build()
    }

    pub fn scale(&self, s: f64) -> SparseMatrix {
        SparseMatrix { values: self.values.iter().map(|v| v * s).collect(), ..self.clone() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for (r, c, v) in self.triplets() {
            d[r][c] += v;
        }
        d
    }

    /// Sum of several matrices of identical shape.
    pub fn sum(parts: &[&SparseMatrix]) -> SparseMatrix {
        let (rows, cols) = (parts[0].rows, parts[0].cols);
        let mut b = TripletBuilder::new(rows, cols);
        for p in parts {
            assert_eq!((p.rows, p.cols), (rows, cols));
            for (r, c, v) in p.triplets() {
                b.push(r, c, v);
            }
        }
        b.build()
    }

    /// Largest `|row - col|` over stored entries, split into (below, above).
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for (r, c, _) in self.triplets() {
            if r > c {
                kl = kl.max(r - c);
            } else {
                ku = ku.max(c - r);
            }
        }
        (kl, ku)
    }
}

/// LU factors of a row- and column-equilibrated banded matrix, stored in the
/// LAPACK `gbtrf` layout.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
    pivots: Vec<usize>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
}

impl BandedLu {
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        assert_eq!(a.rows(), a.cols(), "square matrix required");
        let n = a.rows();
        let (kl, ku) = a.bandwidths();
        // fill-in from pivoting widens the upper band by kl
        let ldab = 2 * kl + ku + 1;
        let mut row_scale = vec![0.0; n];
        for (r, _, v) in a.triplets() {
            row_scale[r] = f64::max(row_scale[r], v.abs());
        }
        for (r, s) in row_scale.iter_mut().enumerate() {
            if *s == 0.0 {
                return Err(SimError::SingularMatrix { column: r });
            }
            *s = 1.0 / *s;
        }
        let mut col_scale = vec![0.0; n];
        for (r, c, v) in a.triplets() {
            col_scale[c] = f64::max(col_scale[c], (v * row_scale[r]).abs());
        }
        for (c, s) in col_scale.iter_mut().enumerate() {
            if *s == 0.0 {
                return Err(SimError::SingularMatrix { column: c });
            }
            *s = 1.0 / *s;
        }
        let mut ab = vec![0.0; ldab * n];
        let idx = |i: usize, j: usize| j * ldab + (kl + ku + i - j);
        for (r, c, v) in a.triplets() {
            ab[idx(r, c)] += v * row_scale[r] * col_scale[c];
        }
        let mut pivots = vec![0usize; n];
        for j in 0..n {
            let last = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = ab[idx(j, j)].abs();
            for i in j + 1..=last {
                let v = ab[idx(i, j)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            pivots[j] = p;
            if best == 0.0 || !best.is_finite() {
                return Err(SimError::SingularMatrix { column: j });
            }
            let ucols = (j + kl + ku).min(n - 1);
            if p != j {
                for c in j..=ucols {
                    ab.swap(idx(j, c), idx(p, c));
                }
            }
            let piv = ab[idx(j, j)];
            for i in j + 1..=last {
                let l = ab[idx(i, j)] / piv;
                ab[idx(i, j)] = l;
                if l != 0.0 {
                    for c in j + 1..=ucols {
                        ab[idx(i, c)] -= l * ab[idx(j, c)];
                    }
                }
            }
        }
        Ok(BandedLu { n, kl, ku, ldab, ab, pivots, row_scale, col_scale })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let (kl, ku, ldab) = (self.kl, self.ku, self.ldab);
        let idx = |i: usize, j: usize| j * ldab + (kl + ku + i - j);
        let mut x: Vec<f64> = b.iter().zip(&self.row_scale).map(|(v, s)| v * s).collect();
        for j in 0..n {
            x.swap(j, self.pivots[j]);
            let xj = x[j];
            if xj != 0.0 {
                for i in j + 1..=(j + kl).min(n - 1) {
                    x[i] -= self.ab[idx(i, j)] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.ab[idx(j, j)];
            let xj = x[j];
            if xj != 0.0 {
                for i in j.saturating_sub(kl + ku)..j {
                    x[i] -= self.ab[idx(i, j)] * xj;
                }
            }
        }
        x.iter().zip(&self.col_scale).map(|(v, s)| v * s).collect()
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Solves `A x = b` with two rounds of iterative refinement. Returns the
/// solution and the relative residual `|Ax - b| / |b|`.
pub fn solve_direct(a: &SparseMatrix, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; b.len()], 0.0));
    }
    let lu = BandedLu::factor(a)?;
    let mut x = lu.solve(b);
    let mut res = residual(a, &x, b);
    for _ in 0..2 {
        let dx = lu.solve(&res);
        let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
        let cres = residual(a, &cand, b);
        if norm2(&cres) < norm2(&res) {
            x = cand;
            res = cres;
        } else {
            break;
        }
    }
    Ok((x, norm2(&res) / bnorm))
}

fn residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    a.mul_vec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect()
}
