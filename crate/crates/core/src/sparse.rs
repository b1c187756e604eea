//! Compressed-row sparse operators whose rows and columns carry the index
//! space they act on.
//!
//! Every operator records which complex and which signal grade index its
//! rows and its columns. Composition checks these tags, so multiplying a
//! boundary map by an operator living on the wrong grade is an error rather
//! than a silently wrong product.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
use num_traits::NumAssign;

use crate::error::{Error, Result};

static NEXT_COMPLEX_ID: AtomicU64 = AtomicU64::new(1);

/// Identity of a complex, shared by all operators built from it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ComplexId(u64);

impl ComplexId {
    pub fn fresh() -> Self {
        ComplexId(NEXT_COMPLEX_ID.fetch_add(1, Ordering::Relaxed))
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

/// Which signal space of a complex an axis is indexed by.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Grade {
    /// The zero space below dimension 0 (target of `B_0`).
    Null,
    /// `k`-cells of a single complex, or the total degree `k` of a product.
    Single(usize),
    /// Bigraded summand `C^{i,j}` of a product complex.
    Bi(usize, usize),
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grade::Null => write!(f, "null"),
            Grade::Single(k) => write!(f, "{k}"),
            Grade::Bi(i, j) => write!(f, "({i},{j})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IndexSpace {
    pub complex: ComplexId,
    pub grade: Grade,
    pub len: usize,
}

impl IndexSpace {
    pub fn new(complex: ComplexId, grade: Grade, len: usize) -> Self {
        Self {
            complex,
            grade,
            len,
        }
    }

    pub fn null(complex: ComplexId) -> Self {
        Self {
            complex,
            grade: Grade::Null,
            len: 0,
        }
    }
}

impl fmt::Display for IndexSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "complex#{} grade {} (dim {})",
            self.complex.0, self.grade, self.len
        )
    }
}

/// Entry type of a sparse operator. Boundary maps use `i64` so that all
/// incidence algebra is exact; weighted operators use `f64`.
pub trait Scalar: NumAssign + Copy + fmt::Debug + PartialOrd + Send + Sync + 'static {
    fn to_f64(self) -> f64;
    fn from_i64(v: i64) -> Self;
    fn abs_val(self) -> Self;
}

impl Scalar for i64 {
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn from_i64(v: i64) -> Self {
        v
    }
    fn abs_val(self) -> Self {
        self.abs()
    }
}

impl Scalar for f64 {
    fn to_f64(self) -> f64 {
        self
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn abs_val(self) -> Self {
        self.abs()
    }
}

/// Sparse matrix in CSR layout. Entries are kept sorted by column within
/// each row, duplicates are summed and explicit zeros are dropped, so two
/// operators with the same action compare equal.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator<T = f64> {
    rows: IndexSpace,
    cols: IndexSpace,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseOperator<T> {
    pub fn from_triplets<I>(rows: IndexSpace, cols: IndexSpace, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut trip: Vec<(usize, usize, T)> = triplets.into_iter().collect();
        for &(r, c, _) in &trip {
            assert!(
                r < rows.len && c < cols.len,
                "triplet ({r},{c}) outside {}x{} operator",
                rows.len,
                cols.len
            );
        }
        trip.sort_by_key(|&(r, c, _)| (r, c));

        let mut indptr = vec![0usize; rows.len + 1];
        let mut indices = Vec::with_capacity(trip.len());
        let mut values: Vec<T> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        let mut counts = vec![0usize; rows.len];
        for (r, c, v) in trip {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                // drop the previous entry if it summed to zero
                if let Some((lr, _)) = last {
                    if *values.last().unwrap() == T::zero() {
                        values.pop();
                        indices.pop();
                        counts[lr] -= 1;
                    }
                }
                indices.push(c);
                values.push(v);
                counts[r] += 1;
                last = Some((r, c));
            }
        }
        if let Some((lr, _)) = last {
            if *values.last().unwrap() == T::zero() {
                values.pop();
                indices.pop();
                counts[lr] -= 1;
            }
        }
        for r in 0..rows.len {
            indptr[r + 1] = indptr[r] + counts[r];
        }
        Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn zeros(rows: IndexSpace, cols: IndexSpace) -> Self {
        Self {
            rows,
            cols,
            indptr: vec![0; rows.len + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(space: IndexSpace) -> Self {
        Self {
            rows: space,
            cols: space,
            indptr: (0..=space.len).collect(),
            indices: (0..space.len).collect(),
            values: vec![T::one(); space.len],
        }
    }

    pub fn rows(&self) -> IndexSpace {
        self.rows
    }

    pub fn cols(&self) -> IndexSpace {
        self.cols
    }

    pub fn nrows(&self) -> usize {
        self.rows.len
    }

    pub fn ncols(&self) -> usize {
        self.cols.len
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&c) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => T::zero(),
        }
    }

    /// Nonzeros of row `r` as `(col, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// All nonzeros as `(row, col, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows()).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    /// Replace the index-space tags without touching the entries.
    pub fn relabel(mut self, rows: IndexSpace, cols: IndexSpace) -> Self {
        assert_eq!(rows.len, self.rows.len, "relabel must preserve row count");
        assert_eq!(
            cols.len, self.cols.len,
            "relabel must preserve column count"
        );
        self.rows = rows;
        self.cols = cols;
        self
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.cols, self.rows, self.iter().map(|(r, c, v)| (c, r, v)))
    }

    /// `self * rhs`. The column space of `self` must equal the row space of `rhs`.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::SpaceMismatch {
                left: self.cols,
                right: rhs.rows,
            });
        }
        let n = rhs.ncols();
        let mut acc = vec![T::zero(); n];
        let mut touched = vec![false; n];
        let mut list: Vec<usize> = Vec::new();
        let mut trip = Vec::new();
        for r in 0..self.nrows() {
            for (k, a) in self.row(r) {
                for (c, b) in rhs.row(k) {
                    if !touched[c] {
                        touched[c] = true;
                        list.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            for &c in &list {
                trip.push((r, c, acc[c]));
                acc[c] = T::zero();
                touched[c] = false;
            }
            list.clear();
        }
        Ok(Self::from_triplets(self.rows, rhs.cols, trip))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::SpaceMismatch {
                left: self.rows,
                right: other.rows,
            });
        }
        if self.cols != other.cols {
            return Err(Error::SpaceMismatch {
                left: self.cols,
                right: other.cols,
            });
        }
        Ok(Self::from_triplets(
            self.rows,
            self.cols,
            self.iter().chain(other.iter()),
        ))
    }

    pub fn scale(&self, s: T) -> Self {
        Self::from_triplets(
            self.rows,
            self.cols,
            self.iter().map(|(r, c, v)| (r, c, v * s)),
        )
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> SparseOperator<U> {
        SparseOperator::from_triplets(
            self.rows,
            self.cols,
            self.iter().map(|(r, c, v)| (r, c, f(v))),
        )
    }

    pub fn to_f64(&self) -> SparseOperator<f64> {
        self.map(Scalar::to_f64)
    }

    /// Kronecker product `a ⊗ b` with row index `ra * b.nrows() + rb`, tagged
    /// with the given product index spaces.
    pub fn kron(a: &Self, b: &Self, rows: IndexSpace, cols: IndexSpace) -> Self {
        assert_eq!(
            rows.len,
            a.nrows() * b.nrows(),
            "kron row space has wrong length"
        );
        assert_eq!(
            cols.len,
            a.ncols() * b.ncols(),
            "kron column space has wrong length"
        );
        let (br, bc) = (b.nrows(), b.ncols());
        let trip = a.iter().flat_map(|(ra, ca, va)| {
            b.iter()
                .map(move |(rb, cb, vb)| (ra * br + rb, ca * bc + cb, va * vb))
        });
        Self::from_triplets(rows, cols, trip)
    }

    /// Copy of the block starting at `(row_off, col_off)` whose extent is
    /// given by the lengths of the target spaces.
    pub fn block(
        &self,
        row_off: usize,
        col_off: usize,
        rows: IndexSpace,
        cols: IndexSpace,
    ) -> Self {
        let trip = (row_off..row_off + rows.len).flat_map(|r| {
            self.row(r)
                .filter(move |&(c, _)| c >= col_off && c < col_off + cols.len)
                .map(move |(c, v)| (r - row_off, c - col_off, v))
        });
        Self::from_triplets(rows, cols, trip)
    }

    /// Assemble an operator from blocks placed at the given offsets.
    pub fn from_blocks<'a>(
        rows: IndexSpace,
        cols: IndexSpace,
        blocks: impl IntoIterator<Item = (usize, usize, &'a Self)>,
    ) -> Self {
        let mut trip = Vec::new();
        for (ro, co, blk) in blocks {
            trip.extend(blk.iter().map(|(r, c, v)| (r + ro, c + co, v)));
        }
        Self::from_triplets(rows, cols, trip)
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest `|A_ij - A_ji|`; requires a square operator.
    pub fn max_asymmetry(&self) -> f64 {
        if self.nrows() != self.ncols() {
            return f64::INFINITY;
        }
        self.iter()
            .map(|(r, c, v)| (v.to_f64() - self.get(c, r).to_f64()).abs())
            .fold(0.0, f64::max)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows()];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols(), "matvec input length");
        assert_eq!(y.len(), self.nrows(), "matvec output length");
        for (r, out) in y.iter_mut().enumerate() {
            *out = self.row(r).map(|(c, v)| v.to_f64() * x[c]).sum();
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows(), self.ncols());
        for (r, c, v) in self.iter() {
            m[(r, c)] = v.to_f64();
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(id: ComplexId, k: usize, len: usize) -> IndexSpace {
        IndexSpace::new(id, Grade::Single(k), len)
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let id = ComplexId::fresh();
        let op = SparseOperator::<i64>::from_triplets(
            space(id, 0, 2),
            space(id, 1, 2),
            vec![(0, 1, 2), (0, 1, -2), (1, 0, 1), (1, 0, 3)],
        );
        assert_eq!(op.nnz(), 1);
        assert_eq!(op.get(1, 0), 4);
        assert_eq!(op.get(0, 1), 0);
    }

    #[test]
    fn compose_checks_spaces() {
        let x = ComplexId::fresh();
        let a = SparseOperator::<i64>::identity(space(x, 1, 3));
        let b = SparseOperator::<i64>::identity(space(x, 2, 3));
        assert!(matches!(a.compose(&b), Err(Error::SpaceMismatch { .. })));
        assert!(a.compose(&a).is_ok());
    }

    #[test]
    fn compose_matches_dense_product() {
        let x = ComplexId::fresh();
        let a = SparseOperator::<i64>::from_triplets(
            space(x, 0, 2),
            space(x, 1, 3),
            vec![(0, 0, 1), (0, 2, -1), (1, 1, 2)],
        );
        let b = SparseOperator::<i64>::from_triplets(
            space(x, 1, 3),
            space(x, 2, 2),
            vec![(0, 0, 3), (1, 1, 1), (2, 0, 3), (2, 1, 5)],
        );
        let c = a.compose(&b).unwrap();
        assert_eq!(c.to_dense(), a.to_dense() * b.to_dense());
        // (0,0): 1*3 + (-1)*3 = 0 must not be stored
        assert_eq!(c.nnz(), 2);
    }

    #[test]
    fn kron_matches_dense_definition() {
        let x = ComplexId::fresh();
        let a = SparseOperator::<f64>::from_triplets(
            space(x, 0, 2),
            space(x, 0, 2),
            vec![(0, 0, 1.0), (0, 1, 2.0), (1, 1, -1.0)],
        );
        let b = SparseOperator::<f64>::from_triplets(
            space(x, 1, 2),
            space(x, 1, 3),
            vec![(0, 2, 4.0), (1, 0, 1.5)],
        );
        let z = ComplexId::fresh();
        let k = SparseOperator::kron(&a, &b, space(z, 0, 4), space(z, 0, 6));
        assert_eq!(k.to_dense(), a.to_dense().kronecker(&b.to_dense()));
    }

    #[test]
    fn block_round_trip() {
        let x = ComplexId::fresh();
        let s = space(x, 0, 4);
        let op =
            SparseOperator::<i64>::from_triplets(s, s, (0..4).map(|i| (i, 3 - i, i as i64 + 1)));
        let sub = op.block(1, 1, space(x, 9, 2), space(x, 9, 2));
        assert_eq!(sub.get(0, 1), 2);
        assert_eq!(sub.get(1, 0), 3);
        let back = SparseOperator::from_blocks(s, s, vec![(1, 1, &sub)]);
        assert_eq!(back.get(1, 2), 2);
        assert_eq!(back.nnz(), 2);
    }

    #[test]
    fn asymmetry_of_nonsymmetric_operator() {
        let x = ComplexId::fresh();
        let s = space(x, 0, 2);
        let op = SparseOperator::<f64>::from_triplets(s, s, vec![(0, 1, 1.0)]);
        assert_eq!(op.max_asymmetry(), 1.0);
        assert_eq!(op.transpose().compose(&op).unwrap().max_asymmetry(), 0.0);
    }
}
