//! Sparse direct solves backed by faer's supernodal LU (fill-reducing column
//! ordering, partial pivoting).

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::MatMut;

use crate::error::{Error, Result};
use crate::solver::sparse::{Pattern, SparseMatrix};

/// Relative backward-error bound accepted after a solve.
pub const BACKWARD_TOLERANCE: f64 = 1e-10;

/// Column-compressed copy of a CSR pattern plus the value permutation.
struct CscLayout {
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    /// `csc_values[k] = csr_values[from_csr[k]]`
    from_csr: Vec<usize>,
}

impl CscLayout {
    fn new(p: &Pattern) -> Self {
        let mut counts = vec![0usize; p.ncols + 1];
        for &c in &p.col_idx {
            counts[c + 1] += 1;
        }
        for c in 0..p.ncols {
            counts[c + 1] += counts[c];
        }
        let col_ptr = counts.clone();
        let mut next = counts;
        let mut row_idx = vec![0; p.nnz()];
        let mut from_csr = vec![0; p.nnz()];
        for r in 0..p.nrows {
            for k in p.row_ptr[r]..p.row_ptr[r + 1] {
                let c = p.col_idx[k];
                let dst = next[c];
                row_idx[dst] = r;
                from_csr[dst] = k;
                next[c] += 1;
            }
        }
        CscLayout {
            col_ptr,
            row_idx,
            from_csr,
        }
    }
}

/// Caches the symbolic analysis for a sparsity pattern so repeated
/// factorizations of matrices sharing it only redo the numeric phase.
/// Can also hold on to one numeric factorization for later reuse.
#[derive(Default)]
pub struct LuSolver {
    cache: Option<(Arc<Pattern>, Arc<CscLayoutHandle>)>,
    retained: Option<LuFactorization>,
}

struct CscLayoutHandle {
    layout: CscLayout,
    symbolic: SymbolicLu<usize>,
}

/// A numeric factorization ready for solves.
pub struct LuFactorization {
    n: usize,
    lu: Lu<usize, f64>,
    matrix: SparseMatrix,
    norm_inf: f64,
}

fn structural_check(a: &SparseMatrix) -> Result<()> {
    let mut col_nonzero = vec![false; a.ncols()];
    for r in 0..a.nrows() {
        let (cols, vals) = a.row(r);
        let mut any = false;
        for (&c, &v) in cols.iter().zip(vals) {
            if !v.is_finite() {
                return Err(Error::Numerical(format!("non-finite matrix entry in row {r}")));
            }
            if v != 0.0 {
                any = true;
                col_nonzero[c] = true;
            }
        }
        if !any {
            return Err(Error::Singular { row: r });
        }
    }
    if let Some(c) = col_nonzero.iter().position(|&nz| !nz) {
        return Err(Error::Singular { row: c });
    }
    Ok(())
}

impl LuSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn factorize(&mut self, a: &SparseMatrix) -> Result<LuFactorization> {
        if a.nrows() != a.ncols() {
            return Err(Error::Contract(format!(
                "LU requires a square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        structural_check(a)?;
        let n = a.nrows();
        let reuse = matches!(&self.cache, Some((p, _)) if Arc::ptr_eq(p, a.pattern()) || **p == **a.pattern());
        if !reuse {
            let layout = CscLayout::new(a.pattern());
            let sym = SymbolicSparseColMatRef::new_checked(n, n, &layout.col_ptr, None, &layout.row_idx);
            let symbolic = SymbolicLu::try_new(sym)
                .map_err(|e| Error::Numerical(format!("symbolic LU failed: {e:?}")))?;
            self.cache = Some((a.pattern().clone(), Arc::new(CscLayoutHandle { layout, symbolic })));
        }
        let handle = self.cache.as_ref().map(|(_, h)| h.clone()).expect("cache filled above");
        let layout = &handle.layout;
        let values: Vec<f64> = layout.from_csr.iter().map(|&k| a.values[k]).collect();
        let sym = SymbolicSparseColMatRef::new_checked(n, n, &layout.col_ptr, None, &layout.row_idx);
        let mat = SparseColMatRef::new(sym, &values);
        let lu = Lu::try_new_with_symbolic(handle.symbolic.clone(), mat).map_err(|e| match e {
            LuError::SymbolicSingular { index } => Error::Singular { row: index },
            LuError::Generic(g) => Error::Numerical(format!("LU factorization failed: {g:?}")),
        })?;
        Ok(LuFactorization {
            n,
            lu,
            matrix: a.clone(),
            norm_inf: a.norm_inf(),
        })
    }

    /// Factorizes `a` and keeps the result as the retained factorization.
    pub fn factorize_retained(&mut self, a: &SparseMatrix) -> Result<&LuFactorization> {
        self.retained = None;
        let f = self.factorize(a)?;
        Ok(self.retained.insert(f))
    }

    pub fn retained(&self) -> Option<&LuFactorization> {
        self.retained.as_ref()
    }

    pub fn clear_retained(&mut self) {
        self.retained = None;
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl LuFactorization {
    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.lu
            .solve_in_place(MatMut::from_column_major_slice_mut(&mut x, self.n, 1));
        x
    }

    /// Solves `A x = b`. One step of iterative refinement is applied if the
    /// first solution misses the backward-error bound.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::Contract(format!(
                "right-hand side has length {}, expected {}",
                b.len(),
                self.n
            )));
        }
        let mut x = self.raw_solve(b);
        for attempt in 0..2 {
            if let Some(i) = x.iter().position(|v| !v.is_finite()) {
                return Err(Error::Singular { row: i });
            }
            let ax = self.matrix.matvec(&x);
            let res: Vec<f64> = ax.iter().zip(b).map(|(a, b)| b - a).collect();
            let bound = BACKWARD_TOLERANCE * (self.norm_inf * inf_norm(&x) + inf_norm(b));
            let err = inf_norm(&res);
            if err <= bound {
                return Ok(x);
            }
            if attempt == 1 {
                return Err(Error::Numerical(format!(
                    "linear solve backward error {err:.3e} exceeds bound {bound:.3e}"
                )));
            }
            let dx = self.raw_solve(&res);
            x.iter_mut().zip(&dx).for_each(|(x, d)| *x += d);
        }
        unreachable!()
    }
}

pub fn lu_factorize(a: &SparseMatrix) -> Result<LuFactorization> {
    LuSolver::new().factorize(a)
}

/// One-shot factorize and solve.
pub fn solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    LuSolver::new().factorize(a)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laplacian_1d(n: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        SparseMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn small_examples() {
        let b: Vec<f64> = (1..=5).map(f64::from).collect();
        assert_eq!(solve(&SparseMatrix::identity(5), &b).unwrap(), b);
        let d = SparseMatrix::from_dense(&[vec![2.0, 0.0], vec![0.0, 4.0]]);
        assert_eq!(solve(&d, &[2.0, 4.0]).unwrap(), vec![1.0, 1.0]);
        let z = SparseMatrix::from_dense(&[vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert!(matches!(lu_factorize(&z), Err(Error::Singular { .. })));
    }

    #[test]
    fn solves_tridiagonal() {
        let a = laplacian_1d(50);
        let x_true: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.matvec(&x_true);
        let x = solve(&a, &b).unwrap();
        for (x, y) in x.iter().zip(&x_true) {
            assert!((x - y).abs() < 1e-11);
        }
    }

    #[test]
    fn nonsymmetric_needs_pivoting() {
        // Zero leading diagonal entry.
        let a = SparseMatrix::from_dense(&[
            vec![0.0, 1.0, 2.0],
            vec![3.0, 0.0, 1.0],
            vec![1.0, 4.0, 0.0],
        ]);
        let b = vec![5.0, 4.0, 9.0];
        let x = solve(&a, &b).unwrap();
        let r = a.matvec(&x);
        for (r, b) in r.iter().zip(&b) {
            assert!((r - b).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_row_is_singular() {
        let a = SparseMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 1, 0.0), (2, 2, 1.0), (1, 0, 0.0)]);
        match solve(&a, &[1.0, 1.0, 1.0]) {
            Err(Error::Singular { row }) => assert_eq!(row, 1),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn numerically_singular_is_reported() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(
            solve(&a, &[1.0, 3.0]),
            Err(Error::Singular { .. }) | Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn symbolic_reuse_across_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let base = laplacian_1d(30);
        let mut solver = LuSolver::new();
        for _ in 0..3 {
            let mut a = base.clone();
            for v in a.values.iter_mut() {
                *v *= 1.0 + 0.1 * rng.gen::<f64>();
            }
            let b: Vec<f64> = (0..30).map(|_| rng.gen()).collect();
            let x = solver.factorize(&a).unwrap().solve(&b).unwrap();
            let r = a.matvec(&x);
            assert!(r.iter().zip(&b).all(|(r, b)| (r - b).abs() < 1e-12));
        }
    }
}
