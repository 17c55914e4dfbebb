//! Matrix-free linear operators.
//!
//! The Lanczos driver only needs a rule for multiplying a matrix (and its
//! transpose) by a dense vector, so the auxiliary matrix of the hybrid
//! model is never materialized.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::sparse::SparseMatrix;

pub trait LinearOperator {
    fn n_rows(&self) -> usize;
    fn n_cols(&self) -> usize;
    /// A x; `x` has length `n_cols`, the result length `n_rows`.
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    /// A^T x; `x` has length `n_rows`, the result length `n_cols`.
    fn apply_t(&self, x: &[f64]) -> Vec<f64>;
}

impl LinearOperator for SparseMatrix {
    fn n_rows(&self) -> usize {
        SparseMatrix::n_rows(self)
    }

    fn n_cols(&self) -> usize {
        SparseMatrix::n_cols(self)
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matvec(x).expect("operator dimension")
    }

    fn apply_t(&self, x: &[f64]) -> Vec<f64> {
        self.matvec_t(x).expect("operator dimension")
    }
}

impl LinearOperator for DenseMatrix {
    fn n_rows(&self) -> usize {
        DenseMatrix::n_rows(self)
    }

    fn n_cols(&self) -> usize {
        DenseMatrix::n_cols(self)
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.mul_vec(x).expect("operator dimension")
    }

    fn apply_t(&self, x: &[f64]) -> Vec<f64> {
        self.transpose_mul_vec(x).expect("operator dimension")
    }
}

/// Stochastic linearity check: op(a x + b y) must match a op(x) + b op(y)
/// to relative accuracy 1e-10, and apply/apply_t must be mutually adjoint.
pub fn check_linearity(op: &dyn LinearOperator, seed: u64) -> Result<()> {
    let mut rng = SplitMix64::new(seed ^ 0x11ea_11ea);
    let (m, n) = (op.n_rows(), op.n_cols());
    if m == 0 || n == 0 {
        return Ok(());
    }
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let x: Vec<f64> = (0..n).map(|_| rng.next_f64() - 0.5).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.next_f64() - 0.5).collect();
        let (a, b) = (rng.next_f64() * 4.0 - 2.0, rng.next_f64() * 4.0 - 2.0);
        let combined: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| a * xi + b * yi).collect();
        let lhs = op.apply(&combined);
        let op_x = op.apply(&x);
        let op_y = op.apply(&y);
        let mut scale = 0.0f64;
        let mut dev = 0.0f64;
        for i in 0..m {
            let rhs = a * op_x[i] + b * op_y[i];
            dev = dev.max((lhs[i] - rhs).abs());
            scale = scale.max(rhs.abs());
        }
        worst = worst.max(if scale > 0.0 { dev / scale } else { dev });

        // adjointness: <A x, u> == <x, A^T u>
        let u: Vec<f64> = (0..m).map(|_| rng.next_f64() - 0.5).collect();
        let ax_u: f64 = op.apply(&x).iter().zip(&u).map(|(p, q)| p * q).sum();
        let x_atu: f64 = op.apply_t(&u).iter().zip(&x).map(|(p, q)| p * q).sum();
        let scale = ax_u.abs().max(x_atu.abs()).max(1e-300);
        worst = worst.max((ax_u - x_atu).abs() / scale);
    }
    if worst > 1e-10 {
        return Err(Error::NotLinear { deviation: worst });
    }
    Ok(())
}
