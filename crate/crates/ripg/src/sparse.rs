//! Minimal sparse and dense linear algebra.
//!
//! The [`SparseMatrix`] type stores a matrix in compressed sparse row form
//! with canonical storage: within each row the column indices are strictly
//! increasing, duplicate triplets have been summed and exact zeros dropped.
//! All products reduce in a fixed order (ascending column within a row,
//! ascending row for transpose accumulation) so results are bit-reproducible
//! regardless of how the matrix was assembled.

use std::ops::Range;

use crate::{Error, Result};

/// Maximum block size accepted by the small dense/tridiagonal SPD solves.
/// Keeps the O(rows^2) dense fallback memory-bounded.
pub const BLOCK_ROW_CAP: usize = 2048;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

/// Read-only view of one row: parallel index/value slices.
#[derive(Debug, Clone, Copy)]
pub struct RowView<'a> {
    pub indices: &'a [usize],
    pub values: &'a [f64],
}

impl RowView<'_> {
    /// Inner product with a dense vector, summed in ascending column order.
    pub fn dot(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (&j, &v) in self.indices.iter().zip(self.values) {
            acc += v * x[j];
        }
        acc
    }

    /// Squared Euclidean norm, summed in ascending column order.
    pub fn norm_sq(&self) -> f64 {
        let mut acc = 0.0;
        for &v in self.values {
            acc += v * v;
        }
        acc
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

impl SparseMatrix {
    /// Builds a canonical CSR matrix from (row, col, value) triplets.
    ///
    /// Duplicates are summed in a value-sorted order so the result is
    /// identical for any permutation of the input; entries that sum to
    /// exactly zero are dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::IndexOutOfRange {
                    row: r,
                    col: c,
                    nrows,
                    ncols,
                });
            }
        }
        let mut sorted = triplets.to_vec();
        sorted.sort_by(|a, b| {
            a.0.cmp(&b.0)
                .then(a.1.cmp(&b.1))
                .then(a.2.total_cmp(&b.2))
        });

        let mut counts = vec![0usize; nrows];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut i = 0;
        while i < sorted.len() {
            let (r, c, mut v) = sorted[i];
            i += 1;
            while i < sorted.len() && sorted[i].0 == r && sorted[i].1 == c {
                v += sorted[i].2;
                i += 1;
            }
            if v != 0.0 {
                counts[r] += 1;
                col_indices.push(c);
                values.push(v);
            }
        }
        let mut row_offsets = vec![0usize; nrows + 1];
        for r in 0..nrows {
            row_offsets[r + 1] = row_offsets[r] + counts[r];
        }
        Ok(Self {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds from a dense row-major table, dropping exact zeros.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::DimensionMismatch {
                    context: "from_dense row length",
                    expected: ncols,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, &triplets)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Reassembles a matrix from raw CSR arrays, validating canonical form.
    /// Used by file deserialization.
    pub fn from_raw_csr(
        nrows: usize,
        ncols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != nrows + 1
            || row_offsets[0] != 0
            || *row_offsets.last().unwrap() != values.len()
            || col_indices.len() != values.len()
        {
            return Err(Error::DimensionMismatch {
                context: "raw CSR arrays",
                expected: nrows + 1,
                got: row_offsets.len(),
            });
        }
        for r in 0..nrows {
            let (lo, hi) = (row_offsets[r], row_offsets[r + 1]);
            if lo > hi {
                return Err(crate::invalid("row offsets must be nondecreasing"));
            }
            for k in lo..hi {
                if col_indices[k] >= ncols {
                    return Err(Error::IndexOutOfRange {
                        row: r,
                        col: col_indices[k],
                        nrows,
                        ncols,
                    });
                }
                if k > lo && col_indices[k] <= col_indices[k - 1] {
                    return Err(crate::invalid(
                        "column indices must be strictly increasing within a row",
                    ));
                }
            }
        }
        Ok(Self {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn row(&self, i: usize) -> RowView<'_> {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        RowView {
            indices: &self.col_indices[lo..hi],
            values: &self.values[lo..hi],
        }
    }

    /// y = A x with a fixed (ascending column) summation order per row.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch {
                context: "matvec input",
                expected: self.ncols,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            y[i] = self.row(i).dot(x);
        }
        Ok(y)
    }

    /// y = A^T x, accumulated row by row in ascending row order.
    pub fn matvec_t(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.nrows {
            return Err(Error::DimensionMismatch {
                context: "matvec_t input",
                expected: self.nrows,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            let row = self.row(i);
            for (&j, &v) in row.indices.iter().zip(row.values) {
                y[j] += v * xi;
            }
        }
        Ok(y)
    }

    /// Euclidean norm of every row; zero rows yield 0.
    pub fn row_norms(&self) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| self.row(i).norm_sq().sqrt())
            .collect()
    }

    /// A view of a contiguous range of rows.
    pub fn block(&self, rows: Range<usize>) -> BlockView<'_> {
        assert!(rows.start <= rows.end && rows.end <= self.nrows);
        BlockView {
            matrix: self,
            rows,
        }
    }

    /// Stacks `self` on top of `other` (column counts must agree).
    pub fn vstack(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.ncols != other.ncols {
            return Err(Error::DimensionMismatch {
                context: "vstack column count",
                expected: self.ncols,
                got: other.ncols,
            });
        }
        let mut row_offsets = self.row_offsets.clone();
        let base = *row_offsets.last().unwrap();
        row_offsets.extend(other.row_offsets[1..].iter().map(|&o| o + base));
        let mut col_indices = self.col_indices.clone();
        col_indices.extend_from_slice(&other.col_indices);
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(SparseMatrix {
            nrows: self.nrows + other.nrows,
            ncols: self.ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Dense copy, for small oracles and debugging.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for i in 0..self.nrows {
            let row = self.row(i);
            for (&j, &v) in row.indices.iter().zip(row.values) {
                out[i][j] = v;
            }
        }
        out
    }
}

/// Partition of a matrix's rows into contiguous, nonempty blocks.
///
/// `starts` holds p+1 offsets with `starts[0] == 0` and
/// `starts[p] == nrows`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    starts: Vec<usize>,
}

impl BlockPartition {
    pub fn from_starts(starts: Vec<usize>, nrows: usize) -> Result<Self> {
        if starts.len() < 2 || starts[0] != 0 || *starts.last().unwrap() != nrows {
            return Err(crate::invalid(
                "block starts must begin at 0 and end at nrows",
            ));
        }
        if starts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(crate::invalid("blocks must be nonempty"));
        }
        Ok(Self { starts })
    }

    /// Splits `nrows` into `p` contiguous blocks of near-equal size
    /// (remainder spread over the leading blocks).
    pub fn uniform(nrows: usize, p: usize) -> Result<Self> {
        if p == 0 || p > nrows {
            return Err(crate::invalid("block count must be in 1..=nrows"));
        }
        let base = nrows / p;
        let extra = nrows % p;
        let mut starts = Vec::with_capacity(p + 1);
        let mut at = 0;
        starts.push(0);
        for i in 0..p {
            at += base + usize::from(i < extra);
            starts.push(at);
        }
        Ok(Self { starts })
    }

    pub fn num_blocks(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn block_range(&self, i: usize) -> Range<usize> {
        self.starts[i]..self.starts[i + 1]
    }
}

/// Borrowed view of a contiguous block of rows of a [`SparseMatrix`].
#[derive(Debug, Clone)]
pub struct BlockView<'a> {
    matrix: &'a SparseMatrix,
    rows: Range<usize>,
}

impl<'a> BlockView<'a> {
    pub fn nrows(&self) -> usize {
        self.rows.end - self.rows.start
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn rows(&self) -> Range<usize> {
        self.rows.clone()
    }

    pub fn row(&self, local: usize) -> RowView<'a> {
        self.matrix.row(self.rows.start + local)
    }

    /// Block residual A_i x - b_i, rows in ascending order.
    pub fn residual(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        (0..self.nrows())
            .map(|p| self.row(p).dot(x) - b[p])
            .collect()
    }

    /// Accumulates A_i^T y into `out` (ascending rows).
    pub fn add_transpose_times(&self, y: &[f64], out: &mut [f64]) {
        for p in 0..self.nrows() {
            let yp = y[p];
            let row = self.row(p);
            for (&j, &v) in row.indices.iter().zip(row.values) {
                out[j] += v * yp;
            }
        }
    }
}

/// Small dense square matrix, row-major. Only used for block Gram systems.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "dense matrix must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn is_tridiagonal(&self) -> bool {
        for i in 0..self.n {
            for j in 0..self.n {
                if i.abs_diff(j) > 1 && self.get(i, j) != 0.0 {
                    return false;
                }
            }
        }
        true
    }
}

/// Solves M x = rhs for a small symmetric positive definite M, routing
/// tridiagonal systems to the O(n) LDL^T path and everything else to a
/// dense Cholesky factorization.
pub fn solve_small_spd(m: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if m.n() > BLOCK_ROW_CAP {
        return Err(Error::BlockTooLarge {
            rows: m.n(),
            cap: BLOCK_ROW_CAP,
        });
    }
    if rhs.len() != m.n() {
        return Err(Error::DimensionMismatch {
            context: "solve_small_spd rhs",
            expected: m.n(),
            got: rhs.len(),
        });
    }
    if m.is_tridiagonal() {
        let diag: Vec<f64> = (0..m.n()).map(|i| m.get(i, i)).collect();
        let off: Vec<f64> = (0..m.n().saturating_sub(1))
            .map(|i| m.get(i + 1, i))
            .collect();
        solve_tridiag_spd(&diag, &off, rhs)
    } else {
        solve_dense_spd(m, rhs)
    }
}

/// Dense Cholesky solve (lower triangle of `m` is used).
pub fn solve_dense_spd(m: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = m.n();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut acc = m.get(i, j);
            for k in 0..j {
                acc -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if acc <= 0.0 {
                    return Err(Error::NotSpd);
                }
                l[i * n + i] = acc.sqrt();
            } else {
                l[i * n + j] = acc / l[j * n + j];
            }
        }
    }
    // forward solve L y = rhs
    let mut y = rhs.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    // back solve L^T x = y
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    Ok(y)
}

/// LDL^T solve of a symmetric positive definite tridiagonal system given by
/// its diagonal and first subdiagonal. O(n), no square roots.
pub fn solve_tridiag_spd(diag: &[f64], off: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if off.len() + 1 != n.max(1) || rhs.len() != n {
        return Err(Error::DimensionMismatch {
            context: "solve_tridiag_spd arrays",
            expected: n,
            got: rhs.len(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut d = vec![0.0; n];
    let mut l = vec![0.0; n.saturating_sub(1)];
    d[0] = diag[0];
    if d[0] <= 0.0 {
        return Err(Error::NotSpd);
    }
    for i in 1..n {
        l[i - 1] = off[i - 1] / d[i - 1];
        d[i] = diag[i] - l[i - 1] * off[i - 1];
        if d[i] <= 0.0 {
            return Err(Error::NotSpd);
        }
    }
    let mut x = rhs.to_vec();
    for i in 1..n {
        x[i] -= l[i - 1] * x[i - 1];
    }
    for i in 0..n {
        x[i] /= d[i];
    }
    for i in (0..n - 1).rev() {
        x[i] -= l[i] * x[i + 1];
    }
    Ok(x)
}

/// Gram matrix A_i A_i^T + shift I of a block, in tridiagonal form when the
/// sparsity permits it (adjacent rows may overlap, rows two or more apart
/// must not share a column) and dense otherwise.
pub(crate) enum Gram {
    Tridiag { diag: Vec<f64>, off: Vec<f64> },
    Dense(DenseMatrix),
}

pub(crate) fn block_gram(block: &BlockView<'_>, shift: f64) -> Gram {
    let m = block.nrows();
    // Detect whether any two non-adjacent rows share a column: the first
    // row touching a column bounds how far later rows may reach.
    let mut first_row = vec![usize::MAX; block.ncols()];
    let mut tridiagonal = true;
    'outer: for p in 0..m {
        let row = block.row(p);
        for &j in row.indices {
            if first_row[j] == usize::MAX {
                first_row[j] = p;
            } else if p - first_row[j] >= 2 {
                tridiagonal = false;
                break 'outer;
            }
        }
    }
    if tridiagonal {
        let diag: Vec<f64> = (0..m)
            .map(|p| block.row(p).norm_sq() + shift)
            .collect();
        let off: Vec<f64> = (0..m.saturating_sub(1))
            .map(|p| sparse_dot(block.row(p), block.row(p + 1)))
            .collect();
        Gram::Tridiag { diag, off }
    } else {
        let mut g = DenseMatrix::zeros(m);
        for p in 0..m {
            g.set(p, p, block.row(p).norm_sq() + shift);
            for q in p + 1..m {
                let v = sparse_dot(block.row(p), block.row(q));
                g.set(p, q, v);
                g.set(q, p, v);
            }
        }
        Gram::Dense(g)
    }
}

/// Merge dot product of two sorted sparse rows, ascending column order.
fn sparse_dot(a: RowView<'_>, b: RowView<'_>) -> f64 {
    let mut acc = 0.0;
    let (mut i, mut j) = (0, 0);
    while i < a.indices.len() && j < b.indices.len() {
        match a.indices[i].cmp(&b.indices[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a.values[i] * b.values[j];
                i += 1;
                j += 1;
            }
        }
    }
    acc
}
