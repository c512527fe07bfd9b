//! Dense brute-force oracles for small problems.

use nalgebra::{Cholesky, DMatrix, Schur, SVD};

use crate::error::{Error, Result};
use crate::sparse::C64;

/// Eigenvalues of `A v = λ M v` for Hermitian positive definite `M`, sorted
/// by real part.
pub fn generalized_eigenvalues(a: &DMatrix<C64>, m: &DMatrix<C64>) -> Result<Vec<C64>> {
    let l = Cholesky::new(m.clone())
        .ok_or_else(|| Error::arg("mass matrix is not positive definite"))?
        .l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::arg("singular Cholesky factor"))?;
    let c = &linv * a * linv.adjoint();
    let t = Schur::new(c).unpack().1;
    let mut ev: Vec<C64> = (0..t.nrows()).map(|i| t[(i, i)]).collect();
    ev.sort_by(|p, q| p.re.total_cmp(&q.re).then(p.im.total_cmp(&q.im)));
    Ok(ev)
}

/// Singular values in decreasing order.
pub fn singular_values(d: &DMatrix<C64>) -> Vec<f64> {
    let mut s: Vec<f64> = SVD::new(d.clone(), false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Norm of `D` from `(ℂⁿ, ‖·‖_{M_in})` to `(ℂᵐ, ‖·‖_{M_out})`.
pub fn weighted_norm(d: &DMatrix<C64>, m_in: &DMatrix<C64>, m_out: &DMatrix<C64>) -> Result<f64> {
    let l_in = Cholesky::new(m_in.clone())
        .ok_or_else(|| Error::arg("input weight is not positive definite"))?
        .l();
    let l_out = Cholesky::new(m_out.clone())
        .ok_or_else(|| Error::arg("output weight is not positive definite"))?
        .l();
    let l_in_inv = l_in.try_inverse().ok_or_else(|| Error::arg("singular weight"))?;
    let g = l_out.adjoint() * d * l_in_inv.adjoint();
    Ok(singular_values(&g).first().copied().unwrap_or(0.0))
}
