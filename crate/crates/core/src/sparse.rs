//! Compressed sparse row matrices.
//!
//! The single canonical sparse format of the crate. Matrices are immutable
//! after construction: rows are sorted by column, duplicates summed and
//! explicit zeros dropped by [`SparseMatrix::from_triplets`]. Transpose
//! products are computed by scattering instead of materializing the
//! transpose, since the Lanczos driver needs both directions.

use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from (row, col, value) triplets. Duplicate positions
    /// are summed; entries that sum to exactly zero are dropped.
    pub fn from_triplets(
        triplets: &[(usize, usize, f64)],
        n_rows: usize,
        n_cols: usize,
    ) -> Result<Self> {
        for &(row, col, value) in triplets {
            if row >= n_rows || col >= n_cols {
                return Err(Error::TripletOutOfRange {
                    row,
                    col,
                    value,
                    n_rows,
                    n_cols,
                });
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_unstable_by_key(|&(r, c, _)| (r, c));

        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());

        let mut iter = sorted.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v != 0.0 {
                row_offsets[r + 1] += 1;
                col_indices.push(c);
                values.push(v);
            }
        }
        for r in 0..n_rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Assembles a matrix from already-canonical CSR arrays (sorted columns
    /// within rows, no duplicates). Used by factorizations that build their
    /// output structurally.
    pub(crate) fn from_csr_parts(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(row_offsets.len(), n_rows + 1);
        debug_assert_eq!(col_indices.len(), values.len());
        debug_assert_eq!(row_offsets[n_rows], values.len());
        Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let triplets: Vec<(usize, usize, f64)> = diag
            .iter()
            .enumerate()
            .map(|(i, &v)| (i, i, v))
            .collect();
        Self::from_triplets(&triplets, diag.len(), diag.len()).expect("diagonal in range")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
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

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    /// Entry lookup by binary search within the row.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                context: "matvec",
                expected: self.n_cols,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.n_rows];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            y[i] = acc;
        }
        Ok(y)
    }

    /// y = A^T x, computed by scattering rows.
    pub fn matvec_t(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                context: "matvec_t",
                expected: self.n_rows,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.n_cols];
        for i in 0..self.n_rows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                y[c] += v * xi;
            }
        }
        Ok(y)
    }

    /// Euclidean norms of the columns.
    pub fn column_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.n_cols];
        for (&c, &v) in self.col_indices.iter().zip(&self.values) {
            sq[c] += v * v;
        }
        sq.iter().map(|s| s.sqrt()).collect()
    }

    /// Returns A D^(d-1) where D holds the column Euclidean norms.
    /// Zero-norm columns keep multiplier 1 so they stay untouched.
    /// With d = 1 the result is the identity transform, bit for bit.
    pub fn scale_columns(&self, d: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&d) {
            return Err(Error::ScalingOutOfRange(d));
        }
        if d == 1.0 {
            return Ok(self.clone());
        }
        let norms = self.column_norms();
        let mult: Vec<f64> = norms
            .iter()
            .map(|&n| if n > 0.0 { n.powf(d - 1.0) } else { 1.0 })
            .collect();
        let mut out = self.clone();
        for (c, v) in out.col_indices.iter().zip(out.values.iter_mut()) {
            *v *= mult[*c];
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.n_cols {
            counts[c + 1] += counts[c];
        }
        let mut cursor = counts.clone();
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                let p = cursor[c];
                cursor[c] += 1;
                col_indices[p] = i;
                values[p] = v;
            }
        }
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets: counts,
            col_indices,
            values,
        }
    }

    pub fn to_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                out.push((i, c, v));
            }
        }
        out
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                out.set(i, c, v);
            }
        }
        out
    }

    pub fn from_dense(a: &DenseMatrix) -> Self {
        let mut triplets = Vec::new();
        for i in 0..a.n_rows() {
            for j in 0..a.n_cols() {
                let v = a.get(i, j);
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(&triplets, a.n_rows(), a.n_cols()).expect("indices in range")
    }

    /// max |A - A^T| over all positions; the matrix must be square.
    pub fn max_asymmetry(&self) -> f64 {
        debug_assert_eq!(self.n_rows, self.n_cols);
        let t = self.transpose();
        let mut worst = 0.0f64;
        for i in 0..self.n_rows {
            let (ca, va) = self.row(i);
            let (cb, vb) = t.row(i);
            let (mut pa, mut pb) = (0, 0);
            while pa < ca.len() || pb < cb.len() {
                let col_a = ca.get(pa).copied().unwrap_or(usize::MAX);
                let col_b = cb.get(pb).copied().unwrap_or(usize::MAX);
                let diff = if col_a == col_b {
                    let d = va[pa] - vb[pb];
                    pa += 1;
                    pb += 1;
                    d
                } else if col_a < col_b {
                    pa += 1;
                    va[pa - 1]
                } else {
                    pb += 1;
                    vb[pb - 1]
                };
                worst = worst.max(diff.abs());
            }
        }
        worst
    }

    /// (A + A^T) / 2.
    pub fn symmetrized(&self) -> Self {
        let mut triplets = self.to_triplets();
        for t in triplets.iter_mut() {
            t.2 *= 0.5;
        }
        for (i, j, v) in self.transpose().to_triplets() {
            triplets.push((i, j, 0.5 * v));
        }
        Self::from_triplets(&triplets, self.n_rows, self.n_cols).expect("indices in range")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1() -> SparseMatrix {
        // Alice, Bob, Carol over five items; item 4 has no interactions.
        let t = [
            (0, 0, 1.0),
            (0, 2, 1.0),
            (0, 3, 1.0),
            (1, 0, 1.0),
            (1, 1, 1.0),
            (1, 3, 1.0),
            (2, 0, 1.0),
            (2, 3, 1.0),
        ];
        SparseMatrix::from_triplets(&t, 3, 5).unwrap()
    }

    #[test]
    fn duplicates_are_summed() {
        let a = SparseMatrix::from_triplets(&[(0, 0, 1.0), (0, 0, 1.0)], 1, 1).unwrap();
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.get(0, 0), 2.0);
    }

    #[test]
    fn empty_triplets_give_zero_matrix() {
        let a = SparseMatrix::from_triplets(&[], 2, 3).unwrap();
        assert_eq!(a.nnz(), 0);
        assert_eq!(a.matvec(&[1.0, 2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn explicit_zeros_dropped() {
        let a =
            SparseMatrix::from_triplets(&[(0, 0, 1.0), (0, 0, -1.0), (0, 1, 0.0)], 1, 2).unwrap();
        assert_eq!(a.nnz(), 0);
    }

    #[test]
    fn out_of_range_triplet_is_reported() {
        let err = SparseMatrix::from_triplets(&[(2, 0, 1.0)], 2, 3).unwrap_err();
        match err {
            Error::TripletOutOfRange { row, col, .. } => {
                assert_eq!((row, col), (2, 0));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn table1_shape_and_empty_column() {
        let a = table1();
        assert_eq!(a.nnz(), 8);
        assert_eq!(a.column_norms()[4], 0.0);
    }

    #[test]
    fn matvec_identity() {
        let a = SparseMatrix::identity(3);
        assert_eq!(a.matvec(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(a.matvec_t(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn matvec_table1_item1_indicator() {
        let a = table1();
        let e1 = [1.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(a.matvec(&e1).unwrap(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn matvec_t_table1_column_sums() {
        let a = table1();
        assert_eq!(
            a.matvec_t(&[1.0, 1.0, 1.0]).unwrap(),
            vec![3.0, 1.0, 1.0, 3.0, 0.0]
        );
    }

    #[test]
    fn matvec_t_single_entry() {
        let a = SparseMatrix::from_triplets(&[(0, 2, 5.0)], 1, 4).unwrap();
        assert_eq!(a.matvec_t(&[2.0]).unwrap(), vec![0.0, 0.0, 10.0, 0.0]);
    }

    #[test]
    fn matvec_dimension_mismatch() {
        let a = table1();
        assert!(a.matvec(&[1.0; 4]).is_err());
        assert!(a.matvec_t(&[1.0; 5]).is_err());
    }

    #[test]
    fn scale_columns_identity_at_d1() {
        let a = table1();
        let b = a.scale_columns(1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scale_columns_d0_normalizes() {
        let a = SparseMatrix::from_triplets(&[(0, 0, 3.0), (1, 0, 4.0)], 2, 1).unwrap();
        let b = a.scale_columns(0.0).unwrap();
        assert!((b.get(0, 0) - 0.6).abs() < 1e-15);
        assert!((b.get(1, 0) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn scale_columns_zero_column_untouched() {
        let a = table1();
        let b = a.scale_columns(0.4).unwrap();
        for v in b.values() {
            assert!(v.is_finite());
        }
        assert_eq!(b.column_norms()[4], 0.0);
    }

    #[test]
    fn scale_columns_rejects_out_of_range() {
        let a = table1();
        assert!(a.scale_columns(-0.1).is_err());
        assert!(a.scale_columns(1.5).is_err());
    }

    #[test]
    fn transpose_round_trip() {
        let a = table1();
        assert_eq!(a.transpose().transpose(), a);
    }

    #[test]
    fn asymmetry_of_symmetric_matrix_is_zero() {
        let s =
            SparseMatrix::from_triplets(&[(0, 0, 1.0), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 1.0)], 2, 2)
                .unwrap();
        assert_eq!(s.max_asymmetry(), 0.0);
        let a = SparseMatrix::from_triplets(&[(0, 1, 0.5)], 2, 2).unwrap();
        assert_eq!(a.max_asymmetry(), 0.5);
    }
}
