//! Sparse solvers for shifted symmetric operators. The symmetric indefinite
//! factorization (`P A Pᵀ = L B Lᵀ`, AMD ordering, Bunch–Kaufman pivoting
//! inside supernodes) is tried first; sparse LU takes over when its solves
//! fail a residual check.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::solvers::Solve;
use faer::perm::PermRef;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, IntranodeLbltRef, SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, MatMut, Par, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub(crate) struct SymmetricFactor {
    symbolic: SymbolicCholesky<usize>,
    values: Vec<f64>,
    subdiag: Vec<f64>,
    fwd: Vec<usize>,
    inv: Vec<usize>,
    solve_buf: MemBuffer,
}

impl SymmetricFactor {
    /// Factors the symmetric matrix whose lower triangle is given by `lower`
    /// (entries with `row >= col`; duplicates are summed).
    pub fn new(n: usize, lower: &[Triplet<usize, usize, f64>]) -> Result<Self> {
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, lower)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let symbolic = factorize_symbolic_cholesky(
            a.symbolic(),
            Side::Lower,
            SymmetricOrdering::Amd,
            CholeskySymbolicParams::default(),
        )
        .map_err(|e| Error::Factorization(format!("symbolic analysis: {e:?}")))?;
        let mut values = vec![0.0; symbolic.len_val()];
        let mut subdiag = vec![0.0; n];
        let mut fwd = vec![0usize; n];
        let mut inv = vec![0usize; n];
        let mut buf = MemBuffer::new(
            symbolic.factorize_numeric_intranode_lblt_scratch::<f64>(Par::Seq, Default::default()),
        );
        symbolic.factorize_numeric_intranode_lblt(
            &mut values,
            &mut subdiag,
            &mut fwd,
            &mut inv,
            a.as_ref(),
            Side::Lower,
            Par::Seq,
            MemStack::new(&mut buf),
            Default::default(),
        );
        drop(buf);
        if values.iter().chain(&subdiag).any(|v| !v.is_finite()) {
            return Err(Error::Factorization("factorization broke down; perturb the shift".into()));
        }
        let solve_buf = MemBuffer::new(symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
        Ok(Self { symbolic, values, subdiag, fwd, inv, solve_buf })
    }

    pub fn solve(&mut self, x: &mut [f64]) -> Result<()> {
        let n = self.fwd.len();
        let perm = PermRef::new_checked(&self.fwd, &self.inv, n);
        let f = IntranodeLbltRef::new(&self.symbolic, &self.values, &self.subdiag, perm);
        f.solve_in_place_with_conj(
            Conj::No,
            MatMut::from_column_major_slice_mut(x, n, 1),
            Par::Seq,
            MemStack::new(&mut self.solve_buf),
        );
        check_finite(x)
    }
}

fn check_finite(x: &[f64]) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Factorization("shifted operator is singular; perturb the shift".into()));
    }
    Ok(())
}

pub(crate) enum ShiftedSolver {
    Symmetric(SymmetricFactor),
    Lu(Lu<usize, f64>),
}

impl ShiftedSolver {
    /// `lower` holds the lower triangle of the symmetric matrix and `apply`
    /// its product with a vector.
    pub fn new(n: usize, lower: Vec<Triplet<usize, usize, f64>>, apply: &dyn Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        if let Ok(mut f) = SymmetricFactor::new(n, &lower) {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut x = b.clone();
            if f.solve(&mut x).is_ok() {
                let r = apply(&x);
                let err = r.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
                let xmax = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let amax = lower.iter().fold(0.0f64, |m, t| m.max(t.val.abs()));
                if err <= 1e-9 * (1.0 + amax * xmax) {
                    return Ok(Self::Symmetric(f));
                }
            }
        }
        let mut full = lower;
        let mirrored: Vec<_> = full.iter().filter(|t| t.row != t.col).map(|t| Triplet::new(t.col, t.row, t.val)).collect();
        full.extend(mirrored);
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &full)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let lu = m.sp_lu().map_err(|e| Error::Factorization(format!("sparse LU: {e:?}")))?;
        Ok(Self::Lu(lu))
    }

    pub fn solve(&mut self, x: &mut [f64]) -> Result<()> {
        match self {
            Self::Symmetric(f) => f.solve(x),
            Self::Lu(lu) => {
                let n = x.len();
                lu.solve_in_place(MatMut::from_column_major_slice_mut(x, n, 1));
                check_finite(x)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_an_indefinite_system() {
        // [[1, 2, 0], [2, -3, 1], [0, 1, 0]]
        let t = [
            Triplet::new(0, 0, 1.0),
            Triplet::new(1, 0, 2.0),
            Triplet::new(1, 1, -3.0),
            Triplet::new(2, 1, 1.0),
        ];
        let a = [[1.0, 2.0, 0.0], [2.0, -3.0, 1.0], [0.0, 1.0, 0.0]];
        let apply = |x: &[f64]| (0..3).map(|i| (0..3).map(|j| a[i][j] * x[j]).sum()).collect();
        let mut f = ShiftedSolver::new(3, t.to_vec(), &apply).unwrap();
        let mut x = vec![5.0, 0.0, 2.0];
        f.solve(&mut x).unwrap();
        let b = [5.0, 0.0, 2.0];
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a[i][j] * x[j]).sum();
            assert!((r - b[i]).abs() < 1e-13, "{x:?}");
        }
    }
}
