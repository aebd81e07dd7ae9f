use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::{MatMut, Side};

enum Inner {
    Cholesky(Llt<usize, f64>),
    Lu(Lu<usize, f64>),
}

/// A sparse direct factorization that solves `A x = b`.
pub struct Factorization {
    inner: Inner,
    n: usize,
}

impl Factorization {
    /// `LLᵀ` of a symmetric positive definite matrix.
    pub fn cholesky(a: &CsrMatrix) -> Result<Self> {
        let llt = a
            .to_faer()
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Factorization(format!("Cholesky of {}×{} matrix: {e:?}", a.n, a.n)))?;
        Ok(Self { inner: Inner::Cholesky(llt), n: a.n })
    }

    /// `LU` with partial pivoting, for symmetric indefinite shifted operators.
    pub fn lu(a: &CsrMatrix) -> Result<Self> {
        let lu = a
            .to_faer()
            .sp_lu()
            .map_err(|e| Error::Factorization(format!("LU of {}×{} matrix: {e:?}", a.n, a.n)))?;
        Ok(Self { inner: Inner::Lu(lu), n: a.n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let rhs = MatMut::from_column_major_slice_mut(x, self.n, 1);
        match &self.inner {
            Inner::Cholesky(f) => f.solve_in_place(rhs),
            Inner::Lu(f) => f.solve_in_place(rhs),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_systems() {
        let a = CsrMatrix::from_triplets(3, vec![(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0), (2, 2, 2.0)]);
        let b = [1.0, 2.0, 3.0];
        for f in [Factorization::cholesky(&a).unwrap(), Factorization::lu(&a).unwrap()] {
            let x = f.solve(&b);
            let r = a.mul(&x);
            for i in 0..3 {
                assert!((r[i] - b[i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn indefinite_matrix_fails_cholesky() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(Factorization::cholesky(&a).is_err());
        assert!(Factorization::lu(&a).is_ok());
    }
}
