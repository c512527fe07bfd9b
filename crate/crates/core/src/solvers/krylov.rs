//! Jacobi-preconditioned Krylov iterations.

use crate::error::{Error, Result, SolverFailure};
use crate::sparse::{axpy, dotc, dotu, norm2, CsrMatrix, C64, ZERO};

#[derive(Debug, Clone, Copy)]
pub struct KrylovOptions {
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub struct KrylovOutcome {
    pub x: Vec<C64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

fn jacobi(a: &CsrMatrix) -> Vec<C64> {
    a.diagonal()
        .into_iter()
        .map(|d| if d.norm() > 0.0 { d.inv() } else { C64::new(1.0, 0.0) })
        .collect()
}

fn fail(msg: &str, iterations: usize, residual: f64) -> Error {
    Error::solver(
        msg,
        SolverFailure {
            iterations,
            residual,
            best_estimate: None,
        },
    )
}

/// Preconditioned conjugate gradients for Hermitian positive definite `A`.
/// When `history` is given, every iterate is appended to it.
pub fn cg(a: &CsrMatrix, b: &[C64], opts: KrylovOptions, mut history: Option<&mut Vec<Vec<C64>>>) -> Result<KrylovOutcome> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![ZERO; n];
    if bnorm == 0.0 {
        return Ok(KrylovOutcome {
            x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let dinv = jacobi(a);
    let mut r = b.to_vec();
    let mut z: Vec<C64> = r.iter().zip(&dinv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dotc(&r, &z);
    let mut q = vec![ZERO; n];
    for it in 1..=opts.max_iter {
        a.matvec_into(&p, &mut q);
        let pq = dotc(&p, &q);
        if !(pq.re > 0.0) {
            return Err(fail("conjugate gradients broke down (matrix not positive definite)", it, norm2(&r) / bnorm));
        }
        let alpha = rz / pq;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        if let Some(h) = history.as_deref_mut() {
            h.push(x.clone());
        }
        let res = norm2(&r) / bnorm;
        if res <= opts.tol {
            return Ok(KrylovOutcome {
                x,
                iterations: it,
                relative_residual: res,
            });
        }
        for ((zi, ri), di) in z.iter_mut().zip(&r).zip(&dinv) {
            *zi = ri * di;
        }
        let rz_new = dotc(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(fail("conjugate gradients hit the iteration limit", opts.max_iter, norm2(&r) / bnorm))
}

/// Right-preconditioned BiCGStab for general complex systems.
pub fn bicgstab(a: &CsrMatrix, b: &[C64], opts: KrylovOptions) -> Result<KrylovOutcome> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![ZERO; n];
    if bnorm == 0.0 {
        return Ok(KrylovOutcome {
            x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let dinv = jacobi(a);
    let prec = |v: &[C64]| -> Vec<C64> { v.iter().zip(&dinv).map(|(v, d)| v * d).collect() };
    let mut r = b.to_vec();
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0));
    let mut v = vec![ZERO; n];
    let mut p = vec![ZERO; n];
    for it in 1..=opts.max_iter {
        let rho_new = dotu(&r0, &r);
        if rho_new.norm() < 1e-300 || omega.norm() < 1e-300 {
            return Err(fail("BiCGStab broke down", it, norm2(&r) / bnorm));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for ((pi, ri), vi) in p.iter_mut().zip(&r).zip(&v) {
            *pi = ri + beta * (*pi - omega * vi);
        }
        let ph = prec(&p);
        v = a.matvec(&ph);
        alpha = rho / dotu(&r0, &v);
        let mut s = r.clone();
        axpy(-alpha, &v, &mut s);
        axpy(alpha, &ph, &mut x);
        let sres = norm2(&s) / bnorm;
        if sres <= opts.tol {
            return Ok(KrylovOutcome {
                x,
                iterations: it,
                relative_residual: sres,
            });
        }
        let sh = prec(&s);
        let t = a.matvec(&sh);
        let tt = dotc(&t, &t);
        omega = dotc(&t, &s) / tt;
        axpy(omega, &sh, &mut x);
        r = s;
        axpy(-omega, &t, &mut r);
        let res = norm2(&r) / bnorm;
        if res <= opts.tol {
            return Ok(KrylovOutcome {
                x,
                iterations: it,
                relative_residual: res,
            });
        }
    }
    Err(fail("BiCGStab hit the iteration limit", opts.max_iter, norm2(&r) / bnorm))
}
