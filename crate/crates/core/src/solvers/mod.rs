//! Linear algebra kernels: sparse direct and Krylov solves, shift-invert
//! eigenvalue windows, operator-norm estimation and semigroup propagation.

pub mod dense;
mod eigen;
mod expm;
pub mod krylov;
mod ldl;
pub mod ordering;
mod opnorm;

use std::time::Instant;

use crate::assembly::DiscreteOperator;
use crate::error::{Error, Result, SolverFailure};
use crate::sparse::{norm2, CsrMatrix, Symmetry, C64};

pub use eigen::{eigs_window, EigenPair, EigenResult, EigsOptions};
pub use expm::{expm_apply, Propagator};
pub use krylov::{bicgstab, cg, KrylovOptions, KrylovOutcome};
pub use ldl::{LdlFactor, Symbolic};
pub use opnorm::{opnorm_diff, LinearMap, OpNormEstimate};

/// Largest system handled by the direct factorization.
pub const DIRECT_LIMIT: usize = 200_000;
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub reused_factorization: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
enum Backend {
    Direct(LdlFactor),
    Iterative,
}

/// A system matrix prepared for repeated solves. Direct factorizations are
/// computed once and shared by every subsequent solve.
#[derive(Debug, Clone)]
pub struct LinearSolver {
    a: CsrMatrix,
    backend: Backend,
    solves: std::sync::Arc<std::sync::atomic::AtomicUsize>,
}

impl LinearSolver {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let backend = if a.nrows() <= DIRECT_LIMIT && a.symmetry() != Symmetry::None {
            Backend::Direct(LdlFactor::new(a)?)
        } else {
            Backend::Iterative
        };
        Ok(Self {
            a: a.clone(),
            backend,
            solves: Default::default(),
        })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.a
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.backend, Backend::Direct(_))
    }

    /// Solves `A x = b` to relative residual `tol`.
    pub fn solve(&self, b: &[C64], tol: f64) -> Result<(Vec<C64>, SolveReport)> {
        self.solve_impl(b, tol, false)
    }

    /// Solves `Aᴴ x = b` to relative residual `tol`.
    pub fn solve_adjoint(&self, b: &[C64], tol: f64) -> Result<(Vec<C64>, SolveReport)> {
        self.solve_impl(b, tol, true)
    }

    fn solve_impl(&self, b: &[C64], tol: f64, adjoint: bool) -> Result<(Vec<C64>, SolveReport)> {
        if b.len() != self.a.nrows() {
            return Err(Error::arg("right-hand side has the wrong length"));
        }
        let start = Instant::now();
        let reused = self.solves.fetch_add(1, std::sync::atomic::Ordering::Relaxed) > 0;
        let bnorm = norm2(b);
        let residual = |x: &[C64]| -> Vec<C64> {
            let ax = if adjoint {
                // Aᴴ x = conj(Aᵀ conj x).
                let cx: Vec<C64> = x.iter().map(|v| v.conj()).collect();
                self.a.matvec_transpose(&cx).into_iter().map(|v| v.conj()).collect::<Vec<_>>()
            } else {
                self.a.matvec(x)
            };
            b.iter().zip(ax).map(|(p, q)| p - q).collect()
        };
        let (x, iterations, rel) = match &self.backend {
            Backend::Direct(f) => {
                let apply = |r: &[C64]| if adjoint { f.solve_adjoint(r) } else { f.solve(r) };
                let mut x = apply(b);
                let mut r = residual(&x);
                let mut rel = if bnorm > 0.0 { norm2(&r) / bnorm } else { 0.0 };
                let mut it = 0;
                while rel > tol && it < 5 {
                    let dx = apply(&r);
                    x.iter_mut().zip(dx).for_each(|(xi, d)| *xi += d);
                    r = residual(&x);
                    rel = norm2(&r) / bnorm;
                    it += 1;
                }
                (x, it, rel)
            }
            Backend::Iterative => {
                let opts = KrylovOptions {
                    tol,
                    max_iter: 20 * self.a.nrows().max(100),
                };
                let sym = self.a.symmetry();
                let out = if sym == Symmetry::Hermitian {
                    cg(&self.a, b, opts, None)?
                } else if adjoint {
                    bicgstab(&self.a.conj().transpose(), b, opts)?
                } else {
                    bicgstab(&self.a, b, opts)?
                };
                (out.x, out.iterations, out.relative_residual)
            }
        };
        if !(rel <= tol) {
            return Err(Error::solver(
                format!("relative residual {rel:.3e} above tolerance {tol:.1e}"),
                SolverFailure {
                    iterations,
                    residual: rel,
                    best_estimate: None,
                },
            ));
        }
        Ok((
            x,
            SolveReport {
                iterations,
                relative_residual: rel,
                reused_factorization: reused && self.is_direct(),
                seconds: start.elapsed().as_secs_f64(),
            },
        ))
    }
}

/// Solves the operator's system for a right-hand side on the free vertices.
pub fn solve(op: &DiscreteOperator, rhs: &[C64], tol: f64) -> Result<(Vec<C64>, SolveReport)> {
    let start = Instant::now();
    let s = LinearSolver::new(op.system())?;
    let (x, mut rep) = s.solve(rhs, tol)?;
    rep.seconds = start.elapsed().as_secs_f64();
    Ok((x, rep))
}
