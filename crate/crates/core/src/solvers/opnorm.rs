//! Operator norms between weighted Hilbert spaces.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result, SolverFailure};
use crate::sparse::{dotc, C64};

/// A linear map `D: X → Y` together with its Hilbert-space adjoint. The inner
/// products default to the Euclidean ones.
pub trait LinearMap {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>>;
    /// `D*` with respect to `inner_in` and `inner_out`.
    fn adjoint(&self, y: &[C64]) -> Result<Vec<C64>>;
    fn inner_in(&self, x: &[C64], y: &[C64]) -> C64 {
        dotc(x, y)
    }
    fn inner_out(&self, x: &[C64], y: &[C64]) -> C64 {
        dotc(x, y)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OpNormEstimate {
    pub value: f64,
    pub iterations: usize,
    /// Relative residual of the leading Ritz pair of `D*D`.
    pub residual: f64,
}

/// Largest singular value of `D` by Lanczos on `D*D` with full
/// reorthogonalization, started from a seeded random vector. Stops when the
/// leading Ritz residual of `D*D` is below `tol` relative to its Ritz value.
pub fn opnorm_diff(d: &dyn LinearMap, tol: f64, seed: u64) -> Result<OpNormEstimate> {
    let n = d.dim_in();
    if n == 0 {
        return Ok(OpNormEstimate {
            value: 0.0,
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let norm = |x: &[C64]| d.inner_in(x, x).re.max(0.0).sqrt();
    let mut q: Vec<C64> = (0..n).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    let nq = norm(&q);
    q.iter_mut().for_each(|v| *v /= nq);
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let max_iter = n.min(300);
    let mut best = 0.0f64;
    let mut last_res = f64::INFINITY;
    for it in 1..=max_iter {
        let mut w = d.adjoint(&d.apply(&q)?)?;
        basis.push(q.clone());
        let a = d.inner_in(&q, &w).re;
        alpha.push(a);
        for _ in 0..2 {
            for b in &basis {
                let c = d.inner_in(b, &w);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
            }
        }
        let bnext = norm(&w);
        // Leading eigenpair of the tridiagonal matrix.
        let k = alpha.len();
        let t = DMatrix::<f64>::from_fn(k, k, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let (imax, theta) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        let theta = theta.max(0.0);
        best = best.max(theta.sqrt());
        let res = bnext * eig.eigenvectors[(k - 1, imax)].abs();
        last_res = if theta > 0.0 { res / theta } else { res };
        let scale = alpha.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if theta == 0.0 && res <= 1e-14 * scale.max(1e-300) {
            return Ok(OpNormEstimate {
                value: 0.0,
                iterations: it,
                residual: 0.0,
            });
        }
        if res <= tol * theta || bnext <= 1e-14 * scale || it == n {
            return Ok(OpNormEstimate {
                value: theta.sqrt(),
                iterations: it,
                residual: last_res,
            });
        }
        beta.push(bnext);
        q = w.into_iter().map(|v| v / bnext).collect();
    }
    Err(Error::solver(
        "operator norm iteration stagnated",
        SolverFailure {
            iterations: max_iter,
            residual: last_res,
            best_estimate: Some(best),
        },
    ))
}
