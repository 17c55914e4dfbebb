//! Truncated SVD via Golub-Kahan bidiagonalization, plus a dense oracle.
//!
//! The Lanczos driver works on any [`LinearOperator`] and keeps both Krylov
//! bases fully reorthogonalized (two Gram-Schmidt passes per step), which is
//! the simplest way to get oracle-grade accuracy at the scales this crate
//! targets. `dense_svd` wraps the LAPACK-style decomposition from nalgebra
//! and serves as the brute-force reference in tests.

use nalgebra::DMatrix;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::linop::{check_linearity, LinearOperator};
use crate::rng::SplitMix64;

#[derive(Clone, Debug)]
pub struct SvdOptions {
    /// Cap on the bidiagonalization subspace size; defaults to min(m, n).
    pub max_iter: Option<usize>,
    /// Residual tolerance relative to the leading singular value.
    pub tol: f64,
    /// Seed for the starting vector (and for deflation restarts).
    pub seed: u64,
    /// Extra subspace dimensions beyond k before convergence is accepted.
    pub oversample: usize,
}

impl Default for SvdOptions {
    fn default() -> Self {
        Self {
            max_iter: None,
            tol: 1e-10,
            seed: 0,
            oversample: 10,
        }
    }
}

/// Singular triplets, sorted by non-increasing singular value. Column signs
/// follow a fixed convention: in every left singular vector the entry of
/// largest magnitude is non-negative (first such entry on ties).
#[derive(Clone, Debug)]
pub struct SvdFactors {
    pub left: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub right: DenseMatrix,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn truncate(&self, k: usize) -> Self {
        assert!(k <= self.rank());
        Self {
            left: self.left.slice_columns(k),
            singular_values: self.singular_values[..k].to_vec(),
            right: self.right.slice_columns(k),
        }
    }

    /// max |X^T X - I| over both factors.
    pub fn orthonormality_error(&self) -> f64 {
        let gu = self
            .left
            .transpose_matmul(&self.left)
            .expect("square gram")
            .max_abs_diff_identity();
        let gv = self
            .right
            .transpose_matmul(&self.right)
            .expect("square gram")
            .max_abs_diff_identity();
        gu.max(gv)
    }

    fn normalize_signs(&mut self) {
        for j in 0..self.singular_values.len() {
            let col = self.left.column(j);
            let mut best = 0usize;
            for (i, v) in col.iter().enumerate() {
                if v.abs() > col[best].abs() {
                    best = i;
                }
            }
            if col[best] < 0.0 {
                for v in self.left.column_mut(j) {
                    *v = -*v;
                }
                for v in self.right.column_mut(j) {
                    *v = -*v;
                }
            }
        }
    }
}

/// Leading `k` singular triplets of an operator-defined matrix.
///
/// Restart-free Golub-Kahan bidiagonalization: the subspace grows one step
/// at a time until the top-k residual estimates fall below `tol * sigma_1`
/// and the subspace holds at least k + oversample directions (or the full
/// min(m, n)). Deterministic for a fixed seed.
pub fn truncated_svd(
    op: &dyn LinearOperator,
    k: usize,
    opts: &SvdOptions,
) -> Result<SvdFactors> {
    let (m, n) = (op.n_rows(), op.n_cols());
    let dim_cap = m.min(n);
    if k == 0 || k > dim_cap {
        return Err(Error::RankOutOfRange { k, max: dim_cap });
    }
    #[cfg(debug_assertions)]
    check_linearity(op, opts.seed)?;

    let limit = opts.max_iter.unwrap_or(dim_cap).min(dim_cap).max(1);
    let min_subspace = (k + opts.oversample).min(dim_cap).min(limit);

    let mut rng = SplitMix64::new(opts.seed ^ 0x9d2c_5680);
    let mut us: Vec<Vec<f64>> = Vec::new(); // left Lanczos basis
    let mut vs: Vec<Vec<f64>> = Vec::new(); // right Lanczos basis
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    // The start vector is pushed through A^T so it lies in the row space;
    // otherwise a wide matrix could not be resolved within min(m, n) steps.
    let v1 = {
        let w: Vec<f64> = (0..m).map(|_| rng.next_f64() - 0.5).collect();
        let mut v = op.apply_t(&w);
        let nv = norm(&v);
        if nv > 0.0 {
            scale(&mut v, 1.0 / nv);
            v
        } else {
            fresh_unit(&mut rng, n, &vs)
        }
    };
    let mut p = op.apply(&v1);
    vs.push(v1);
    let alpha1 = norm(&p);
    if alpha1 > 0.0 {
        scale(&mut p, 1.0 / alpha1);
        us.push(p);
    } else {
        us.push(fresh_unit(&mut rng, m, &us));
    }
    alphas.push(alpha1);

    loop {
        let s = vs.len();

        // coupling to the next right vector
        let mut r = op.apply_t(&us[s - 1]);
        axpy(&mut r, -alphas[s - 1], &vs[s - 1]);
        reorthogonalize(&mut r, &vs);
        let beta = norm(&r);

        // Ritz values of the current bidiagonal block plus the residual
        // estimate beta * |last row of the small left factor|.
        let (sigma, small_left, small_right) = bidiagonal_svd(&alphas, &betas);
        let sigma1 = sigma.first().copied().unwrap_or(0.0);
        let converged_count = (0..k.min(s))
            .take_while(|&i| beta * small_left.get(s - 1, i).abs() <= opts.tol * sigma1)
            .count();
        let converged = s >= k && (sigma1 == 0.0 || converged_count == k);

        if (converged && s >= min_subspace) || s == limit {
            if !converged {
                return Err(Error::SvdNotConverged {
                    converged: converged_count,
                    requested: k,
                    iterations: s,
                });
            }
            let mut factors = assemble(&us, &vs, &sigma, &small_left, &small_right, k);
            factors.normalize_signs();
            debug_assert!(factors.orthonormality_error() < 1e-8);
            return Ok(factors);
        }

        // expand the subspace
        let scale_ref = max_coeff(&alphas, &betas);
        let v_next = if beta > scale_ref * 1e-14 {
            scale(&mut r, 1.0 / beta);
            betas.push(beta);
            r
        } else {
            betas.push(0.0);
            fresh_unit(&mut rng, n, &vs)
        };
        let mut p = op.apply(&v_next);
        axpy(&mut p, -betas[s - 1], &us[s - 1]);
        reorthogonalize(&mut p, &us);
        let alpha = norm(&p);
        let u_next = if alpha > scale_ref * 1e-14 {
            scale(&mut p, 1.0 / alpha);
            alphas.push(alpha);
            p
        } else {
            alphas.push(0.0);
            fresh_unit(&mut rng, m, &us)
        };
        vs.push(v_next);
        us.push(u_next);
    }
}

/// Full SVD of a dense matrix through nalgebra, with the same ordering and
/// sign convention as [`truncated_svd`].
pub fn dense_svd(a: &DenseMatrix) -> SvdFactors {
    let (m, n) = (a.n_rows(), a.n_cols());
    let mat = DMatrix::from_column_slice(m, n, a.values());
    let svd = mat.svd(true, true);
    let u = svd.u.expect("left vectors requested");
    let vt = svd.v_t.expect("right vectors requested");
    let r = svd.singular_values.len();

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap()
            .then(i.cmp(&j))
    });

    let mut left = DenseMatrix::zeros(m, r);
    let mut right = DenseMatrix::zeros(n, r);
    let mut singular_values = Vec::with_capacity(r);
    for (dst, &src) in order.iter().enumerate() {
        singular_values.push(svd.singular_values[src]);
        for i in 0..m {
            left.set(i, dst, u[(i, src)]);
        }
        for i in 0..n {
            right.set(i, dst, vt[(src, i)]);
        }
    }
    let mut factors = SvdFactors {
        left,
        singular_values,
        right,
    };
    factors.normalize_signs();
    factors
}

/// Principal angles (radians, ascending cosines -> descending angles not
/// guaranteed; callers take the max) between the column spans of two
/// orthonormal blocks of equal width.
pub fn principal_angles(a: &DenseMatrix, b: &DenseMatrix) -> Vec<f64> {
    let m = a.transpose_matmul(b).expect("conforming blocks");
    dense_svd(&m)
        .singular_values
        .iter()
        .map(|&c| c.min(1.0).acos())
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn scale(v: &mut [f64], s: f64) {
    for x in v {
        *x *= s;
    }
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    if a == 0.0 {
        return;
    }
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Two passes of classical Gram-Schmidt against the whole basis.
fn reorthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(v, q);
            axpy(v, -c, q);
        }
    }
}

fn max_coeff(alphas: &[f64], betas: &[f64]) -> f64 {
    alphas
        .iter()
        .chain(betas)
        .fold(f64::MIN_POSITIVE, |m, &x| m.max(x.abs()))
}

/// Random unit vector orthogonal to `basis` (used on breakdown/deflation).
fn fresh_unit(rng: &mut SplitMix64, len: usize, basis: &[Vec<f64>]) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..len).map(|_| rng.next_f64() - 0.5).collect();
        reorthogonalize(&mut v, basis);
        let nv = norm(&v);
        if nv > 1e-6 {
            scale(&mut v, 1.0 / nv);
            return v;
        }
    }
}

/// SVD of the s x s upper bidiagonal matrix with `alphas` on the diagonal
/// and `betas` on the superdiagonal.
fn bidiagonal_svd(alphas: &[f64], betas: &[f64]) -> (Vec<f64>, DenseMatrix, DenseMatrix) {
    let s = alphas.len();
    let mut b = DenseMatrix::zeros(s, s);
    for (i, &a) in alphas.iter().enumerate() {
        b.set(i, i, a);
    }
    for (i, &bt) in betas.iter().enumerate() {
        b.set(i, i + 1, bt);
    }
    let f = dense_svd(&b);
    (f.singular_values, f.left, f.right)
}

/// Rotate the Lanczos bases by the small factors and keep the top k triplets.
fn assemble(
    us: &[Vec<f64>],
    vs: &[Vec<f64>],
    sigma: &[f64],
    small_left: &DenseMatrix,
    small_right: &DenseMatrix,
    k: usize,
) -> SvdFactors {
    let m = us[0].len();
    let n = vs[0].len();
    let s = us.len();
    let mut left = DenseMatrix::zeros(m, k);
    let mut right = DenseMatrix::zeros(n, k);
    for j in 0..k {
        let lcol = left.column_mut(j);
        for l in 0..s {
            let c = small_left.get(l, j);
            axpy(lcol, c, &us[l]);
        }
        let rcol = right.column_mut(j);
        for l in 0..s {
            let c = small_right.get(l, j);
            axpy(rcol, c, &vs[l]);
        }
    }
    SvdFactors {
        left,
        singular_values: sigma[..k].to_vec(),
        right,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseMatrix;

    fn diag_op(values: &[f64]) -> SparseMatrix {
        SparseMatrix::from_diag(values)
    }

    #[test]
    fn diagonal_operator_triplets() {
        let a = diag_op(&[3.0, 2.0, 1.0]);
        let f = truncated_svd(&a, 2, &SvdOptions::default()).unwrap();
        assert!((f.singular_values[0] - 3.0).abs() < 1e-12);
        assert!((f.singular_values[1] - 2.0).abs() < 1e-12);
        // singular vectors are signed unit basis vectors
        for j in 0..2 {
            let col = f.left.column(j);
            let ones: Vec<usize> = col
                .iter()
                .enumerate()
                .filter(|(_, v)| v.abs() > 1e-10)
                .map(|(i, _)| i)
                .collect();
            assert_eq!(ones, vec![j]);
            assert!((col[j] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rank_one_outer_product() {
        let a = vec![1.0, -2.0, 2.0];
        let b = vec![3.0, 4.0];
        let mut triplets = Vec::new();
        for (i, &ai) in a.iter().enumerate() {
            for (j, &bj) in b.iter().enumerate() {
                triplets.push((i, j, ai * bj));
            }
        }
        let m = SparseMatrix::from_triplets(&triplets, 3, 2).unwrap();
        let f = truncated_svd(&m, 1, &SvdOptions::default()).unwrap();
        let expected = norm(&a) * norm(&b);
        assert!((f.singular_values[0] - expected).abs() < 1e-10 * expected);
    }

    #[test]
    fn table1_matches_dense_oracle() {
        let t = [
            (0usize, 0usize, 1.0),
            (0, 2, 1.0),
            (0, 3, 1.0),
            (1, 0, 1.0),
            (1, 1, 1.0),
            (1, 3, 1.0),
            (2, 0, 1.0),
            (2, 3, 1.0),
        ];
        let r = SparseMatrix::from_triplets(&t, 3, 5).unwrap();
        let lanczos = truncated_svd(&r, 2, &SvdOptions::default()).unwrap();
        let oracle = dense_svd(&r.to_dense());
        assert!(
            (lanczos.singular_values[0] - oracle.singular_values[0]).abs()
                <= 1e-8 * oracle.singular_values[0]
        );
    }

    #[test]
    fn residuals_meet_contract() {
        let t = [
            (0usize, 0usize, 2.0),
            (0, 3, -1.0),
            (1, 1, 1.5),
            (2, 2, 0.5),
            (2, 4, 1.0),
            (3, 0, 0.25),
        ];
        let a = SparseMatrix::from_triplets(&t, 4, 5).unwrap();
        let opts = SvdOptions::default();
        let f = truncated_svd(&a, 3, &opts).unwrap();
        let sigma1 = f.singular_values[0];
        for i in 0..3 {
            let v: Vec<f64> = f.right.column(i).to_vec();
            let mut res = a.matvec(&v).unwrap();
            for (r, &u) in res.iter_mut().zip(f.left.column(i)) {
                *r -= f.singular_values[i] * u;
            }
            assert!(norm(&res) <= opts.tol * sigma1);
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let t = [(0usize, 1usize, 1.0), (1, 0, 2.0), (2, 2, 3.0), (0, 2, -1.0)];
        let a = SparseMatrix::from_triplets(&t, 3, 3).unwrap();
        let f1 = truncated_svd(&a, 2, &SvdOptions::default()).unwrap();
        let f2 = truncated_svd(&a, 2, &SvdOptions::default()).unwrap();
        assert_eq!(f1.singular_values, f2.singular_values);
        assert_eq!(f1.left.values(), f2.left.values());
        assert_eq!(f1.right.values(), f2.right.values());
    }

    #[test]
    fn k_out_of_range_is_rejected() {
        let a = diag_op(&[1.0, 2.0]);
        assert!(truncated_svd(&a, 0, &SvdOptions::default()).is_err());
        assert!(truncated_svd(&a, 3, &SvdOptions::default()).is_err());
    }

    #[test]
    fn non_convergence_carries_progress() {
        // a matrix whose spectrum cannot be resolved in 2 steps
        let mut triplets = Vec::new();
        let mut rng = SplitMix64::new(5);
        for i in 0..30 {
            for j in 0..30 {
                if rng.next_f64() < 0.2 {
                    triplets.push((i, j, rng.next_f64() - 0.5));
                }
            }
        }
        let a = SparseMatrix::from_triplets(&triplets, 30, 30).unwrap();
        let opts = SvdOptions {
            max_iter: Some(4),
            ..SvdOptions::default()
        };
        match truncated_svd(&a, 4, &opts) {
            Err(Error::SvdNotConverged {
                converged,
                requested,
                ..
            }) => {
                assert!(converged < requested);
            }
            Ok(_) => panic!("expected non-convergence at max_iter = 4"),
            Err(other) => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn dense_svd_identity_and_permutation() {
        let id = DenseMatrix::identity(2);
        let f = dense_svd(&id);
        assert!((f.singular_values[0] - 1.0).abs() < 1e-14);
        assert!((f.singular_values[1] - 1.0).abs() < 1e-14);

        let p = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let f = dense_svd(&p);
        assert!((f.singular_values[0] - 1.0).abs() < 1e-14);
        assert!((f.singular_values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_matrix_has_zero_spectrum() {
        let z = SparseMatrix::from_triplets(&[], 4, 3).unwrap();
        let f = truncated_svd(&z, 2, &SvdOptions::default()).unwrap();
        assert_eq!(f.singular_values, vec![0.0, 0.0]);
        assert!(f.orthonormality_error() < 1e-12);
    }
}
