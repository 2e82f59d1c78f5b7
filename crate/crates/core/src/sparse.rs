//! Compressed sparse row matrices.

use std::io::Write;
use std::ops::{Add, AddAssign, Mul};
use std::sync::atomic::{AtomicBool, Ordering};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

static SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Rows below which products always run on the calling thread.
const PARALLEL_THRESHOLD: usize = 16_384;

/// Forces every sparse kernel onto the calling thread.
pub fn set_sequential(on: bool) {
    SEQUENTIAL.store(on, Ordering::Relaxed);
}

pub fn is_sequential() -> bool {
    SEQUENTIAL.load(Ordering::Relaxed)
}

/// Caps the global thread pool at `HELMADR_THREADS` when that variable is
/// set. Must run before the first parallel kernel; later calls are no-ops.
pub fn init_threads_from_env() {
    if let Some(n) = std::env::var("HELMADR_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Element types stored in a [`CsrMatrix`].
pub trait Scalar:
    Copy + Send + Sync + PartialEq + std::fmt::Debug + Add<Output = Self> + AddAssign + Mul<Output = Self> + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    fn is_finite(&self) -> bool;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Row-compressed sparse matrix with strictly increasing column indices in
/// each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

/// Complex square operator.
pub type SparseOperator = CsrMatrix<Complex64>;

/// Builds a matrix one row at a time; duplicate columns within a row are
/// summed.
#[derive(Debug)]
pub struct RowBuilder<T> {
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
    pending: Vec<(usize, T)>,
}

impl<T: Scalar> RowBuilder<T> {
    pub fn new(ncols: usize) -> Self {
        RowBuilder {
            ncols,
            row_ptr: vec![0],
            col_idx: Vec::new(),
            values: Vec::new(),
            pending: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, nnz: usize) -> Self {
        let mut b = Self::new(ncols);
        b.row_ptr.reserve(nrows);
        b.col_idx.reserve(nnz);
        b.values.reserve(nnz);
        b
    }

    #[inline]
    pub fn add(&mut self, col: usize, value: T) {
        debug_assert!(col < self.ncols);
        self.pending.push((col, value));
    }

    /// Rewrites the entries added to the current row.
    pub fn map_pending(&mut self, mut f: impl FnMut(usize, T) -> T) {
        for e in &mut self.pending {
            e.1 = f(e.0, e.1);
        }
    }

    pub fn finish_row(&mut self) {
        self.pending.sort_by_key(|e| e.0);
        let mut last: Option<usize> = None;
        for &(c, v) in &self.pending {
            if last == Some(c) {
                *self.values.last_mut().expect("entry") += v;
            } else {
                self.col_idx.push(c);
                self.values.push(v);
                last = Some(c);
            }
        }
        self.pending.clear();
        self.row_ptr.push(self.col_idx.len());
    }

    pub fn build(self) -> CsrMatrix<T> {
        assert!(self.pending.is_empty(), "unfinished row");
        CsrMatrix {
            nrows: self.row_ptr.len() - 1,
            ncols: self.ncols,
            row_ptr: self.row_ptr,
            col_idx: self.col_idx,
            values: self.values,
        }
    }
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        let mut by_row: Vec<Vec<(usize, T)>> = vec![Vec::new(); nrows];
        for &(r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::DimensionMismatch {
                    expected: nrows.max(ncols),
                    found: r.max(c),
                });
            }
            by_row[r].push((c, v));
        }
        let mut b = RowBuilder::with_capacity(nrows, ncols, triplets.len());
        for row in by_row {
            for (c, v) in row {
                b.add(c, v);
            }
            b.finish_row();
        }
        Ok(b.build())
    }

    pub fn from_dense(rows: &[Vec<T>]) -> Self {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut b = RowBuilder::new(ncols);
        for row in rows {
            for (c, &v) in row.iter().enumerate() {
                if v != T::zero() {
                    b.add(c, v);
                }
            }
            b.finish_row();
        }
        b.build()
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

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn max_row_nnz(&self) -> usize {
        self.row_ptr.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    /// Entry `(i, j)`, zero when outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => T::zero(),
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(Scalar::is_finite)
    }

    /// Checks the structural invariants: sorted unique columns in range.
    pub fn is_well_formed(&self) -> bool {
        self.row_ptr.len() == self.nrows + 1
            && (0..self.nrows).all(|i| {
                let (cols, _) = self.row(i);
                cols.windows(2).all(|w| w[0] < w[1]) && cols.iter().all(|&c| c < self.ncols)
            })
    }

    #[inline]
    fn row_dot(&self, i: usize, x: &[T]) -> T {
        let (cols, vals) = self.row(i);
        let mut acc = T::zero();
        for (c, v) in cols.iter().zip(vals) {
            acc += *v * x[*c];
        }
        acc
    }

    /// `y = A x`, accumulating each row left to right.
    pub fn spmv_into(&self, x: &[T], y: &mut [T]) -> Result<()> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.ncols,
                found: x.len(),
            });
        }
        if y.len() != self.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                found: y.len(),
            });
        }
        if self.nrows < PARALLEL_THRESHOLD || is_sequential() {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = self.row_dot(i, x);
            }
        } else {
            y.par_chunks_mut(4096).enumerate().for_each(|(chunk, ys)| {
                let start = chunk * 4096;
                for (k, yi) in ys.iter_mut().enumerate() {
                    *yi = self.row_dot(start + k, x);
                }
            });
        }
        Ok(())
    }

    pub fn spmv(&self, x: &[T]) -> Result<Vec<T>> {
        let mut y = vec![T::zero(); self.nrows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for k in 0..self.ncols {
            counts[k + 1] += counts[k];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                let p = next[*c];
                col_idx[p] = i;
                values[p] = *v;
                next[*c] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Sparse product `self * other` (row-wise Gustavson accumulation).
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.ncols,
                found: other.nrows,
            });
        }
        let mut acc = vec![T::zero(); other.ncols];
        let mut marker = vec![usize::MAX; other.ncols];
        let mut touched: Vec<usize> = Vec::new();
        let mut b = RowBuilder::with_capacity(self.nrows, other.ncols, self.nnz());
        for i in 0..self.nrows {
            touched.clear();
            let (cols, vals) = self.row(i);
            for (k, a) in cols.iter().zip(vals) {
                let (ocols, ovals) = other.row(*k);
                for (j, bv) in ocols.iter().zip(ovals) {
                    if marker[*j] != i {
                        marker[*j] = i;
                        acc[*j] = T::zero();
                        touched.push(*j);
                    }
                    acc[*j] += *a * *bv;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                b.add(j, acc[j]);
            }
            b.finish_row();
        }
        Ok(b.build())
    }

    /// Applies `f(row, col, value)` to every stored entry; the pattern is kept.
    pub fn map_entries(&self, mut f: impl FnMut(usize, usize, T) -> T) -> Self {
        let mut out = self.clone();
        for i in 0..self.nrows {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.values[p] = f(i, self.col_idx[p], self.values[p]);
            }
        }
        out
    }

    /// `a * self + b * other` on the union of the two patterns.
    pub fn linear_combination(&self, a: T, other: &Self, b: T) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                found: other.nrows,
            });
        }
        let mut out = RowBuilder::with_capacity(self.nrows, self.ncols, self.nnz().max(other.nnz()));
        for i in 0..self.nrows {
            let (c1, v1) = self.row(i);
            let (c2, v2) = other.row(i);
            for (c, v) in c1.iter().zip(v1) {
                out.add(*c, a * *v);
            }
            for (c, v) in c2.iter().zip(v2) {
                out.add(*c, b * *v);
            }
            out.finish_row();
        }
        Ok(out.build())
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                row[*c] = *v;
            }
        }
        d
    }
}

impl CsrMatrix<f64> {
    pub fn to_complex(&self) -> SparseOperator {
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }
}

impl SparseOperator {
    /// Writes `row col re im` lines (zero-based indices).
    pub fn write_triplets(&self, mut w: impl Write) -> std::io::Result<()> {
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                writeln!(w, "{i} {c} {:e} {:e}", v.re, v.im)?;
            }
        }
        Ok(())
    }

    /// Largest entrywise difference relative to the largest entry of `self`.
    pub fn max_relative_difference(&self, other: &Self) -> f64 {
        let scale = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            let (c1, v1) = self.row(i);
            for (c, v) in c1.iter().zip(v1) {
                worst = worst.max((v - other.get(i, *c)).norm());
            }
            let (c2, v2) = other.row(i);
            for (c, v) in c2.iter().zip(v2) {
                worst = worst.max((v - self.get(i, *c)).norm());
            }
        }
        worst / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_sparse(n: usize, density: f64, seed: u64) -> SparseOperator {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if rng.gen::<f64>() < density {
                    t.push((i, j, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
                }
            }
        }
        SparseOperator::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn spmv_against_dense() {
        let a = random_sparse(50, 0.15, 3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let x: Vec<Complex64> = (0..50).map(|_| c(rng.gen(), rng.gen())).collect();
        let y = a.spmv(&x).unwrap();
        let d = a.to_dense();
        for i in 0..50 {
            let mut r = c(0.0, 0.0);
            for j in 0..50 {
                r += d[i][j] * x[j];
            }
            assert!((r - y[i]).norm() <= 1e-13);
        }
        assert!(a.spmv(&x[..49]).is_err());
        assert!(a.spmv(&vec![c(0.0, 0.0); 50]).unwrap().iter().all(|v| v.norm() == 0.0));
        let id = SparseOperator::identity(50);
        assert_eq!(id.spmv(&x).unwrap(), x);
    }

    #[test]
    fn builder_merges_duplicates() {
        let a = CsrMatrix::<f64>::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 0.5), (1, 1, 4.0)]).unwrap();
        assert_eq!(a.row(0), (&[0usize, 2][..], &[2.0, 1.5][..]));
        assert!(a.is_well_formed());
        assert_eq!(a.get(1, 0), 0.0);
    }

    #[test]
    fn transpose_and_matmul_against_dense() {
        let a = random_sparse(20, 0.2, 9);
        let b = random_sparse(20, 0.2, 10);
        let ab = a.matmul(&b).unwrap();
        let (da, db) = (a.to_dense(), b.to_dense());
        for i in 0..20 {
            for j in 0..20 {
                let mut r = c(0.0, 0.0);
                for k in 0..20 {
                    r += da[i][k] * db[k][j];
                }
                assert!((r - ab.get(i, j)).norm() < 1e-13);
                assert_eq!(a.transpose().get(j, i), a.get(i, j));
            }
        }
        assert!(ab.is_well_formed());
    }

    #[test]
    fn union_combination() {
        let a = SparseOperator::identity(3);
        let b = SparseOperator::from_triplets(3, 3, &[(0, 1, c(1.0, 1.0))]).unwrap();
        let s = a.linear_combination(c(0.75, 0.0), &b, c(0.25, 0.0)).unwrap();
        assert_eq!(s.get(0, 0), c(0.75, 0.0));
        assert_eq!(s.get(0, 1), c(0.25, 0.25));
        assert_eq!(s.nnz(), 4);
    }

    #[test]
    fn triplet_export() {
        let a = SparseOperator::from_triplets(2, 2, &[(1, 0, c(1.5, -2.0))]).unwrap();
        let mut out = Vec::new();
        a.write_triplets(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "1 0 1.5e0 -2e0\n");
    }
}
