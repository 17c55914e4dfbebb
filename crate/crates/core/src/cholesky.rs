//! Sparse Cholesky factorization with separable symbolic analysis.
//!
//! `CholeskyFactor::new` runs the full pipeline: symmetry check, a greedy
//! minimum-degree fill-reducing ordering, elimination-tree based symbolic
//! analysis, and an up-looking numeric factorization. The symbolic phase is
//! kept in a shared handle so `refactorize` can recompute values for any
//! matrix whose pattern is contained in the analyzed one without repeating
//! the analysis. This is what makes sweeping the similarity blending weight
//! cheap: all blends of one feature matrix share a sparsity pattern.
//!
//! The stored triangular factor satisfies P S P^T = L L^T. Callers never see
//! permuted coordinates: `solve_lower` and `mul_lower` act as the effective
//! factor C = P^T L with C C^T = S.

use std::cell::Cell;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

const SYMMETRY_TOL: f64 = 1e-12;

thread_local! {
    static SYMBOLIC_ANALYSES: Cell<u64> = const { Cell::new(0) };
}

static NEXT_SYMBOLIC_ID: AtomicU64 = AtomicU64::new(1);

/// Number of symbolic analyses performed by the current thread. Tests and
/// the training log use deltas of this counter to prove pattern reuse.
pub fn symbolic_analysis_count() -> u64 {
    SYMBOLIC_ANALYSES.with(|c| c.get())
}

#[derive(Clone, Debug, Default)]
pub struct CholeskyOptions {
    /// Replace S by (S + S^T)/2 before factorizing instead of failing the
    /// symmetry check. Off by default.
    pub symmetrize: bool,
}

/// Elimination structure reusable across numeric refactorizations.
#[derive(Debug)]
pub struct CholeskySymbolic {
    id: u64,
    n: usize,
    /// perm[i] = original index placed at permuted position i.
    perm: Vec<usize>,
    inv_perm: Vec<usize>,
    /// Pattern of the permuted input matrix (full symmetric storage).
    ap_row_offsets: Vec<usize>,
    ap_col_indices: Vec<usize>,
    /// Row patterns of L (excluding the diagonal), in elimination order.
    pattern_offsets: Vec<usize>,
    pattern_nodes: Vec<usize>,
    /// Column-compressed structure of L: diagonal entry first per column.
    l_col_offsets: Vec<usize>,
    l_row_indices: Vec<usize>,
    /// Map from CSC positions of L to CSR positions.
    csc_to_csr: Vec<usize>,
    csr_row_offsets: Vec<usize>,
    csr_col_indices: Vec<usize>,
}

impl CholeskySymbolic {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn nnz(&self) -> usize {
        self.l_row_indices.len()
    }
}

#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    lower: SparseMatrix,
    symbolic: Arc<CholeskySymbolic>,
}

impl CholeskyFactor {
    /// Factors a symmetric positive definite sparse matrix.
    pub fn new(s: &SparseMatrix) -> Result<Self> {
        Self::new_with(s, &CholeskyOptions::default())
    }

    pub fn new_with(s: &SparseMatrix, opts: &CholeskyOptions) -> Result<Self> {
        let s = check_symmetry(s, opts)?;
        let symbolic = Arc::new(analyze(&s));
        let lower = factor_values(&symbolic, &s)?;
        Ok(Self { lower, symbolic })
    }

    /// Recomputes factor values for a matrix whose pattern is contained in
    /// the analyzed pattern. No symbolic work is performed.
    pub fn refactorize(&self, s_new: &SparseMatrix) -> Result<Self> {
        self.refactorize_with(s_new, &CholeskyOptions::default())
    }

    pub fn refactorize_with(&self, s_new: &SparseMatrix, opts: &CholeskyOptions) -> Result<Self> {
        if s_new.n_rows() != self.symbolic.n {
            return Err(Error::DimensionMismatch {
                context: "refactorize",
                expected: self.symbolic.n,
                got: s_new.n_rows(),
            });
        }
        let s_new = check_symmetry(s_new, opts)?;
        let lower = factor_values(&self.symbolic, &s_new)?;
        Ok(Self {
            lower,
            symbolic: Arc::clone(&self.symbolic),
        })
    }

    /// The triangular factor L with P S P^T = L L^T.
    pub fn lower(&self) -> &SparseMatrix {
        &self.lower
    }

    /// Fill-reducing permutation: perm[i] is the original index at permuted
    /// position i.
    pub fn permutation(&self) -> &[usize] {
        &self.symbolic.perm
    }

    pub fn symbolic(&self) -> &Arc<CholeskySymbolic> {
        &self.symbolic
    }

    pub fn n(&self) -> usize {
        self.symbolic.n
    }

    pub fn nnz(&self) -> usize {
        self.lower.nnz()
    }

    /// Solves C x = b (or C^T x = b) for the effective factor C = P^T L.
    pub fn solve_vec(&self, b: &[f64], transpose: bool) -> Result<Vec<f64>> {
        let n = self.symbolic.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                context: "solve_lower",
                expected: n,
                got: b.len(),
            });
        }
        let perm = &self.symbolic.perm;
        if !transpose {
            // C x = b  <=>  L x = P b
            let mut x: Vec<f64> = (0..n).map(|i| b[perm[i]]).collect();
            self.forward_substitute(&mut x);
            Ok(x)
        } else {
            // C^T x = b  <=>  x = P^T (L^-T b)
            let mut z = b.to_vec();
            self.backward_substitute(&mut z);
            let mut x = vec![0.0; n];
            for i in 0..n {
                x[perm[i]] = z[i];
            }
            Ok(x)
        }
    }

    /// C b (or C^T b) for the effective factor C = P^T L.
    pub fn mul_vec(&self, b: &[f64], transpose: bool) -> Result<Vec<f64>> {
        let n = self.symbolic.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                context: "mul_lower",
                expected: n,
                got: b.len(),
            });
        }
        let perm = &self.symbolic.perm;
        if !transpose {
            // C b = P^T (L b)
            let y = self.lower.matvec(b)?;
            let mut out = vec![0.0; n];
            for i in 0..n {
                out[perm[i]] = y[i];
            }
            Ok(out)
        } else {
            // C^T b = L^T (P b)
            let pb: Vec<f64> = (0..n).map(|i| b[perm[i]]).collect();
            self.lower.matvec_t(&pb)
        }
    }

    /// Column-wise [`Self::solve_vec`] over a dense block.
    pub fn solve_lower(&self, b: &DenseMatrix, transpose: bool) -> Result<DenseMatrix> {
        let cols: Result<Vec<Vec<f64>>> = (0..b.n_cols())
            .map(|j| self.solve_vec(b.column(j), transpose))
            .collect();
        Ok(DenseMatrix::from_columns(b.n_rows(), &cols?))
    }

    /// Column-wise [`Self::mul_vec`] over a dense block.
    pub fn mul_lower(&self, b: &DenseMatrix, transpose: bool) -> Result<DenseMatrix> {
        let cols: Result<Vec<Vec<f64>>> = (0..b.n_cols())
            .map(|j| self.mul_vec(b.column(j), transpose))
            .collect();
        Ok(DenseMatrix::from_columns(b.n_rows(), &cols?))
    }

    /// In-place L x = b on permuted coordinates; rows of the CSR factor end
    /// with their diagonal entry.
    fn forward_substitute(&self, x: &mut [f64]) {
        for i in 0..self.symbolic.n {
            let (cols, vals) = self.lower.row(i);
            let mut acc = x[i];
            for (&c, &v) in cols.iter().zip(vals).take(cols.len() - 1) {
                acc -= v * x[c];
            }
            x[i] = acc / vals[cols.len() - 1];
        }
    }

    /// In-place L^T x = b on permuted coordinates (scatter form).
    fn backward_substitute(&self, x: &mut [f64]) {
        for i in (0..self.symbolic.n).rev() {
            let (cols, vals) = self.lower.row(i);
            let diag = vals[cols.len() - 1];
            let xi = x[i] / diag;
            x[i] = xi;
            for (&c, &v) in cols.iter().zip(vals).take(cols.len() - 1) {
                x[c] -= v * xi;
            }
        }
    }
}

fn check_symmetry(s: &SparseMatrix, opts: &CholeskyOptions) -> Result<SparseMatrix> {
    let asym = s.max_asymmetry();
    if asym > SYMMETRY_TOL {
        if opts.symmetrize {
            return Ok(s.symmetrized());
        }
        return Err(Error::NotSymmetric {
            max_asymmetry: asym,
            tol: SYMMETRY_TOL,
        });
    }
    Ok(s.clone())
}

/// Greedy minimum-degree ordering on the off-diagonal pattern; ties are
/// broken by the smallest node index, so the ordering is deterministic.
fn min_degree_ordering(s: &SparseMatrix) -> Vec<usize> {
    use std::collections::BTreeSet;
    let n = s.n_rows();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (i, j, _) in s.to_triplets() {
        if i != j {
            adj[i].insert(j);
            adj[j].insert(i);
        }
    }
    let mut queue: BTreeSet<(usize, usize)> =
        (0..n).map(|v| (adj[v].len(), v)).collect();
    let mut perm = Vec::with_capacity(n);
    while let Some(&(_, v)) = queue.iter().next() {
        queue.remove(&(adj[v].len(), v));
        perm.push(v);
        let neighbors: Vec<usize> = adj[v].iter().copied().collect();
        for &u in &neighbors {
            queue.remove(&(adj[u].len(), u));
            adj[u].remove(&v);
        }
        for (a_pos, &a) in neighbors.iter().enumerate() {
            for &b in &neighbors[a_pos + 1..] {
                if adj[a].insert(b) {
                    adj[b].insert(a);
                }
            }
        }
        for &u in &neighbors {
            queue.insert((adj[u].len(), u));
        }
        adj[v].clear();
    }
    perm
}

/// Permutes S into A_p = P S P^T and returns its full symmetric CSR pattern
/// plus values.
fn permute(s: &SparseMatrix, inv_perm: &[usize]) -> SparseMatrix {
    let triplets: Vec<(usize, usize, f64)> = s
        .to_triplets()
        .into_iter()
        .map(|(i, j, v)| (inv_perm[i], inv_perm[j], v))
        .collect();
    SparseMatrix::from_triplets(&triplets, s.n_rows(), s.n_cols()).expect("permuted indices")
}

/// Ordering, elimination tree, row patterns, and the full structure of L.
fn analyze(s: &SparseMatrix) -> CholeskySymbolic {
    SYMBOLIC_ANALYSES.with(|c| c.set(c.get() + 1));
    let n = s.n_rows();
    let perm = min_degree_ordering(s);
    let mut inv_perm = vec![0usize; n];
    for (i, &p) in perm.iter().enumerate() {
        inv_perm[p] = i;
    }
    let ap = permute(s, &inv_perm);

    // elimination tree (Liu's algorithm with path compression)
    const NONE: usize = usize::MAX;
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        let (cols, _) = ap.row(k);
        for &j in cols.iter().take_while(|&&c| c < k) {
            let mut i = j;
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                    break;
                }
                i = next;
            }
        }
    }

    // row patterns of L via elimination-tree reach, in topological order
    let mut mark = vec![NONE; n];
    let mut stack = vec![0usize; n];
    let mut path = Vec::with_capacity(n);
    let mut pattern_offsets = vec![0usize; n + 1];
    let mut pattern_nodes = Vec::new();
    let mut col_counts = vec![1usize; n]; // diagonal
    for k in 0..n {
        mark[k] = k;
        let mut top = n;
        let (cols, _) = ap.row(k);
        for &j in cols.iter().take_while(|&&c| c < k) {
            let mut i = j;
            path.clear();
            while mark[i] != k {
                path.push(i);
                mark[i] = k;
                i = if parent[i] == NONE { k } else { parent[i] };
            }
            while let Some(node) = path.pop() {
                top -= 1;
                stack[top] = node;
            }
        }
        for &j in &stack[top..n] {
            pattern_nodes.push(j);
            col_counts[j] += 1;
        }
        pattern_offsets[k + 1] = pattern_nodes.len();
    }

    // CSC structure of L: diagonal first, then subdiagonal rows ascending
    let mut l_col_offsets = vec![0usize; n + 1];
    for j in 0..n {
        l_col_offsets[j + 1] = l_col_offsets[j] + col_counts[j];
    }
    let nnz = l_col_offsets[n];
    let mut cursor: Vec<usize> = l_col_offsets[..n].to_vec();
    let mut l_row_indices = vec![0usize; nnz];
    for k in 0..n {
        l_row_indices[cursor[k]] = k; // diagonal opens column k
        cursor[k] += 1;
        for &j in &pattern_nodes[pattern_offsets[k]..pattern_offsets[k + 1]] {
            l_row_indices[cursor[j]] = k;
            cursor[j] += 1;
        }
    }

    // CSR structure of L and the CSC -> CSR position map
    let mut csr_row_offsets = vec![0usize; n + 1];
    for &r in &l_row_indices {
        csr_row_offsets[r + 1] += 1;
    }
    for r in 0..n {
        csr_row_offsets[r + 1] += csr_row_offsets[r];
    }
    let mut row_cursor: Vec<usize> = csr_row_offsets[..n].to_vec();
    let mut csr_col_indices = vec![0usize; nnz];
    let mut csc_to_csr = vec![0usize; nnz];
    for j in 0..n {
        for p in l_col_offsets[j]..l_col_offsets[j + 1] {
            let r = l_row_indices[p];
            let q = row_cursor[r];
            row_cursor[r] += 1;
            csr_col_indices[q] = j;
            csc_to_csr[p] = q;
        }
    }

    CholeskySymbolic {
        id: NEXT_SYMBOLIC_ID.fetch_add(1, Ordering::Relaxed),
        n,
        perm,
        inv_perm,
        ap_row_offsets: ap.row_offsets().to_vec(),
        ap_col_indices: ap.col_indices().to_vec(),
        pattern_offsets,
        pattern_nodes,
        l_col_offsets,
        l_row_indices,
        csc_to_csr,
        csr_row_offsets,
        csr_col_indices,
    }
}

/// Up-looking numeric factorization over a fixed symbolic structure.
fn factor_values(sym: &CholeskySymbolic, s: &SparseMatrix) -> Result<SparseMatrix> {
    let n = sym.n;
    let ap = permute(s, &sym.inv_perm);
    check_pattern_subset(sym, &ap)?;

    let nnz = sym.l_row_indices.len();
    let mut lx = vec![0.0f64; nnz]; // CSC values
    let mut cursor: Vec<usize> = sym.l_col_offsets[..n].to_vec();
    let mut x = vec![0.0f64; n];
    for k in 0..n {
        let (cols, vals) = ap.row(k);
        let mut d = 0.0;
        for (&c, &v) in cols.iter().zip(vals) {
            if c < k {
                x[c] = v;
            } else if c == k {
                d = v;
            }
        }
        for &j in &sym.pattern_nodes[sym.pattern_offsets[k]..sym.pattern_offsets[k + 1]] {
            let head = sym.l_col_offsets[j];
            let lkj = x[j] / lx[head];
            x[j] = 0.0;
            for p in head + 1..cursor[j] {
                x[sym.l_row_indices[p]] -= lx[p] * lkj;
            }
            d -= lkj * lkj;
            lx[cursor[j]] = lkj;
            cursor[j] += 1;
        }
        if d <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                pivot: sym.perm[k],
            });
        }
        lx[cursor[k]] = d.sqrt();
        cursor[k] += 1;
    }

    // scatter CSC values into the precomputed CSR layout
    let mut csr_values = vec![0.0f64; nnz];
    for (p, &q) in sym.csc_to_csr.iter().enumerate() {
        csr_values[q] = lx[p];
    }
    Ok(SparseMatrix::from_csr_parts(
        n,
        n,
        sym.csr_row_offsets.clone(),
        sym.csr_col_indices.clone(),
        csr_values,
    ))
}

/// Every entry of the permuted new matrix must lie in the analyzed pattern.
fn check_pattern_subset(sym: &CholeskySymbolic, ap_new: &SparseMatrix) -> Result<()> {
    for k in 0..sym.n {
        let (new_cols, _) = ap_new.row(k);
        let old_cols = &sym.ap_col_indices[sym.ap_row_offsets[k]..sym.ap_row_offsets[k + 1]];
        let mut p = 0usize;
        for &c in new_cols {
            while p < old_cols.len() && old_cols[p] < c {
                p += 1;
            }
            if p >= old_cols.len() || old_cols[p] != c {
                return Err(Error::PatternMismatch {
                    row: sym.perm[k],
                    col: sym.perm[c],
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn dense_of(f: &CholeskyFactor) -> DenseMatrix {
        f.lower().to_dense()
    }

    /// || P S P^T - L L^T ||_F / ||S||_F
    fn reconstruction_error(f: &CholeskyFactor, s: &SparseMatrix) -> f64 {
        let n = s.n_rows();
        let l = dense_of(f);
        let llt = l.matmul(&l.transpose()).unwrap();
        let perm = f.permutation();
        let mut worst = 0.0f64;
        let mut norm = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let sij = s.get(perm[i], perm[j]);
                let d = sij - llt.get(i, j);
                worst += d * d;
                norm += sij * sij;
            }
        }
        (worst / norm.max(1e-300)).sqrt()
    }

    /// (1 - alpha) I + alpha Z with unit-diagonal Z whose off-diagonal rows
    /// are scaled to sum below 1, so the blend is strictly diagonally
    /// dominant (hence positive definite) for any alpha in [0, 1].
    fn random_spd(n: usize, alpha: f64, density: f64, seed: u64) -> SparseMatrix {
        let mut rng = SplitMix64::new(seed);
        let mut off = Vec::new();
        let mut row_sums = vec![0.0f64; n];
        for i in 0..n {
            for j in i + 1..n {
                if rng.next_f64() < density {
                    let z = rng.next_f64();
                    off.push((i, j, z));
                    row_sums[i] += z;
                    row_sums[j] += z;
                }
            }
        }
        let worst = row_sums.iter().cloned().fold(0.0f64, f64::max);
        let scale = if worst > 0.0 { 1.0 / (1.05 * worst) } else { 1.0 };
        let mut triplets: Vec<(usize, usize, f64)> =
            (0..n).map(|i| (i, i, 1.0)).collect();
        for (i, j, z) in off {
            triplets.push((i, j, alpha * z * scale));
            triplets.push((j, i, alpha * z * scale));
        }
        SparseMatrix::from_triplets(&triplets, n, n).unwrap()
    }

    #[test]
    fn identity_factors_to_identity() {
        let s = SparseMatrix::identity(6);
        let f = CholeskyFactor::new(&s).unwrap();
        assert!(reconstruction_error(&f, &s) < 1e-15);
        for i in 0..6 {
            let (cols, vals) = f.lower().row(i);
            assert_eq!(cols, &[i]);
            assert!((vals[0] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn two_by_two_closed_form() {
        let s = SparseMatrix::from_triplets(
            &[(0, 0, 1.0), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 1.0)],
            2,
            2,
        )
        .unwrap();
        let f = CholeskyFactor::new(&s).unwrap();
        // equal degrees, ties break to natural order
        assert_eq!(f.permutation(), &[0, 1]);
        let l = dense_of(&f);
        assert!((l.get(0, 0) - 1.0).abs() < 1e-15);
        assert!((l.get(1, 0) - 0.5).abs() < 1e-15);
        assert!((l.get(1, 1) - 0.75f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn indefinite_matrix_reports_pivot() {
        // alpha = 1 with a zero eigenvalue: [[1, 1], [1, 1]]
        let s = SparseMatrix::from_triplets(
            &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)],
            2,
            2,
        )
        .unwrap();
        match CholeskyFactor::new(&s) {
            Err(Error::NotPositiveDefinite { .. }) => {}
            other => panic!("expected pivot failure, got {other:?}"),
        }
    }

    #[test]
    fn asymmetric_input_rejected_unless_symmetrized() {
        let s = SparseMatrix::from_triplets(&[(0, 0, 2.0), (0, 1, 0.5), (1, 1, 2.0)], 2, 2)
            .unwrap();
        assert!(matches!(
            CholeskyFactor::new(&s),
            Err(Error::NotSymmetric { .. })
        ));
        let f = CholeskyFactor::new_with(
            &s,
            &CholeskyOptions { symmetrize: true },
        )
        .unwrap();
        // symmetrized halves the one-sided entry
        let sym = s.symmetrized();
        assert!(reconstruction_error(&f, &sym) < 1e-14);
    }

    #[test]
    fn reconstruction_on_random_spd() {
        for seed in 0..5 {
            let s = random_spd(40, 0.2, 0.1, seed);
            let f = CholeskyFactor::new(&s).unwrap();
            assert!(reconstruction_error(&f, &s) < 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn refactorize_idempotent_and_matches_fresh() {
        let s03 = random_spd(30, 0.3, 0.15, 9);
        let s05 = random_spd(30, 0.5, 0.15, 9); // same pattern, same rng stream
        let f03 = CholeskyFactor::new(&s03).unwrap();

        let again = f03.refactorize(&s03).unwrap();
        assert_eq!(again.lower().values(), f03.lower().values());

        let before = symbolic_analysis_count();
        let f05 = f03.refactorize(&s05).unwrap();
        assert_eq!(symbolic_analysis_count(), before);
        assert_eq!(f05.symbolic().id(), f03.symbolic().id());

        let fresh = CholeskyFactor::new(&s05).unwrap();
        assert_eq!(fresh.permutation(), f05.permutation());
        let worst = f05
            .lower()
            .to_dense()
            .max_abs_diff(&fresh.lower().to_dense());
        assert!(worst <= 1e-12);
    }

    #[test]
    fn refactorize_diagonal_within_identity_pattern() {
        let s = SparseMatrix::identity(4);
        let f = CholeskyFactor::new(&s).unwrap();
        let d4 = SparseMatrix::from_diag(&[4.0, 4.0, 4.0, 4.0]);
        let f2 = f.refactorize(&d4).unwrap();
        for i in 0..4 {
            assert!((f2.lower().get(i, i) - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn refactorize_rejects_new_pattern() {
        let s = SparseMatrix::identity(3);
        let f = CholeskyFactor::new(&s).unwrap();
        let wider = SparseMatrix::from_triplets(
            &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0), (0, 2, 0.3), (2, 0, 0.3)],
            3,
            3,
        )
        .unwrap();
        assert!(matches!(
            f.refactorize(&wider),
            Err(Error::PatternMismatch { .. })
        ));
    }

    #[test]
    fn solve_matches_hand_forward_substitution() {
        let s = SparseMatrix::from_triplets(
            &[(0, 0, 1.0), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 1.0)],
            2,
            2,
        )
        .unwrap();
        let f = CholeskyFactor::new(&s).unwrap();
        let b = DenseMatrix::from_rows(&[vec![1.0], vec![1.0]]);
        let x = f.solve_lower(&b, false).unwrap();
        assert!((x.get(0, 0) - 1.0).abs() < 1e-14);
        assert!((x.get(1, 0) - 0.5 / 0.75f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn solve_then_mul_round_trip() {
        let s = random_spd(25, 0.25, 0.2, 17);
        let f = CholeskyFactor::new(&s).unwrap();
        let mut rng = SplitMix64::new(3);
        let b: Vec<f64> = (0..25).map(|_| rng.next_f64() - 0.5).collect();
        for transpose in [false, true] {
            let x = f.solve_vec(&b, transpose).unwrap();
            let back = f.mul_vec(&x, transpose).unwrap();
            let bnorm: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            let err: f64 = back
                .iter()
                .zip(&b)
                .map(|(a, c)| (a - c) * (a - c))
                .sum::<f64>()
                .sqrt();
            assert!(err <= 1e-10 * bnorm);
        }
    }

    #[test]
    fn mul_by_effective_factor_reconstructs_s() {
        // C C^T x == S x for the effective factor
        let s = random_spd(20, 0.3, 0.25, 23);
        let f = CholeskyFactor::new(&s).unwrap();
        let mut rng = SplitMix64::new(4);
        let x: Vec<f64> = (0..20).map(|_| rng.next_f64() - 0.5).collect();
        let cx = f.mul_vec(&x, true).unwrap(); // C^T x
        let ccx = f.mul_vec(&cx, false).unwrap(); // C C^T x
        let sx = s.matvec(&x).unwrap();
        for (a, b) in ccx.iter().zip(&sx) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_factor_solves_are_identity() {
        let f = CholeskyFactor::new(&SparseMatrix::identity(5)).unwrap();
        let b = DenseMatrix::from_rows(&[
            vec![1.0, 2.0],
            vec![3.0, 4.0],
            vec![5.0, 6.0],
            vec![7.0, 8.0],
            vec![9.0, 0.0],
        ]);
        assert!(f.solve_lower(&b, false).unwrap().max_abs_diff(&b) < 1e-15);
        assert!(f.mul_lower(&b, true).unwrap().max_abs_diff(&b) < 1e-15);
    }

    #[test]
    fn basis_probe_reads_factor_column() {
        let s = SparseMatrix::from_triplets(
            &[(0, 0, 1.0), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 1.0)],
            2,
            2,
        )
        .unwrap();
        let f = CholeskyFactor::new(&s).unwrap();
        let e1 = DenseMatrix::from_rows(&[vec![1.0], vec![0.0]]);
        let col = f.mul_lower(&e1, false).unwrap();
        let l = dense_of(&f);
        assert!((col.get(0, 0) - l.get(0, 0)).abs() < 1e-15);
        assert!((col.get(1, 0) - l.get(1, 0)).abs() < 1e-15);
    }
}
