//! Small dense Hermitian helpers on top of nalgebra.

use nalgebra::{Cholesky, SymmetricEigen};

use crate::{CMat, CVec, Complex64, Error, Result};

/// `m += scale * v v^H`
pub fn add_outer(m: &mut CMat, v: &CVec, scale: f64) {
    if scale == 0.0 {
        return;
    }
    let n = v.len();
    for j in 0..n {
        let vj = v[j].conj() * scale;
        for i in 0..n {
            m[(i, j)] += v[i] * vj;
        }
    }
}

/// `(m + m^H) / 2`, removing rounding asymmetry before factorization.
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

fn ridge(m: &CMat) -> f64 {
    let n = m.nrows().max(1) as f64;
    let tr: f64 = (0..m.nrows()).map(|i| m[(i, i)].re.abs()).sum();
    1e-12 * tr / n
}

/// Solve `A x = b` for Hermitian positive (semi)definite `A`.
///
/// Cholesky first; if the factorization fails a ridge of `1e-12 * tr(A)/N`
/// is added and the factorization retried once.
pub fn solve_hermitian(a: &CMat, b: &CVec) -> Result<CVec> {
    let a = hermitize(a);
    if let Some(ch) = Cholesky::new(a.clone()) {
        return Ok(ch.solve(b));
    }
    let mut reg = a;
    let eps = ridge(&reg).max(f64::MIN_POSITIVE);
    for i in 0..reg.nrows() {
        reg[(i, i)] += Complex64::new(eps, 0.0);
    }
    Cholesky::new(reg)
        .map(|ch| ch.solve(b))
        .ok_or_else(|| Error::Numerical("Hermitian system is not positive definite".into()))
}

/// Eigendecomposition `A = U diag(d) U^H` of a Hermitian matrix.
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn new(a: &CMat) -> Self {
        let eig = SymmetricEigen::new(hermitize(a));
        Self {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }

    /// Eigenvalues at or below this level are treated as zero.
    pub fn zero_threshold(&self) -> f64 {
        let n = self.values.len().max(1) as f64;
        let tr: f64 = self.values.iter().map(|v| v.abs()).sum();
        1e-12 * tr / n
    }
}
