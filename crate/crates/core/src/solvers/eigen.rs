//! Eigenvalues of the pencil `A v = λ M v` inside a vertical strip
//! `lo ≤ Re λ ≤ hi`.
//!
//! Shift-invert Arnoldi in the `M` inner product. Shifts walk along the real
//! axis; at each shift the converged Ritz values closer to the shift than
//! every unconverged one are trusted, locked and deflated, and the next shift
//! is placed at the edge of the trusted disk. For Hermitian pencils the count
//! is cross-checked with Sylvester inertia.

use nalgebra::{DMatrix, Schur};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ldl::LdlFactor;
use crate::assembly::DiscreteOperator;
use crate::error::{Error, Result};
use crate::sparse::{dotc, norm2, CsrMatrix, Symmetry, C64, ONE, ZERO};

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: C64,
    /// `M`-normalized eigenvector on the free vertices.
    pub vector: Vec<C64>,
    /// Backward error `‖Av − λMv‖ / ((‖A‖₁ + |λ|‖M‖₁)‖v‖)`.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    /// Sorted by real part.
    pub pairs: Vec<EigenPair>,
    /// False when the sweep gave up before covering the window.
    pub converged: bool,
    /// True when more than `k_max` eigenvalues lie in the window.
    pub truncated: bool,
    pub shifts: usize,
}

impl EigenResult {
    pub fn values(&self) -> Vec<C64> {
        self.pairs.iter().map(|p| p.value).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EigsOptions {
    pub k_max: usize,
    pub tol: f64,
    pub krylov_dim: usize,
    pub max_shifts: usize,
    pub seed: u64,
}

impl Default for EigsOptions {
    fn default() -> Self {
        Self {
            k_max: 64,
            tol: 1e-10,
            krylov_dim: 40,
            max_shifts: 400,
            seed: 0x5eed,
        }
    }
}

/// Eigenvalues of the operator's system pencil with `Re λ ∈ [lo, hi]`.
pub fn eigs_window(op: &DiscreteOperator, lo: f64, hi: f64, k_max: usize, tol: f64) -> Result<EigenResult> {
    let opts = EigsOptions {
        k_max,
        tol,
        ..Default::default()
    };
    eigs_pencil(op.system(), op.mass_free(), lo, hi, &opts)
}

fn norm1(a: &CsrMatrix) -> f64 {
    let mut col = vec![0.0; a.ncols()];
    for (_, j, v) in a.triplets() {
        col[j] += v.norm();
    }
    col.into_iter().fold(0.0, f64::max)
}

struct Locked {
    q: Vec<Vec<C64>>,
    mq: Vec<Vec<C64>>,
}

impl Locked {
    /// Removes the locked components of `w`; returns the coefficients.
    fn project(&self, w: &mut [C64]) -> Vec<C64> {
        let mut f = vec![ZERO; self.q.len()];
        for _ in 0..2 {
            for (i, (q, mq)) in self.q.iter().zip(&self.mq).enumerate() {
                let c = dotc(mq, w);
                f[i] += c;
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
            }
        }
        f
    }
}

struct Pencil<'a> {
    a: &'a CsrMatrix,
    m: &'a CsrMatrix,
    norm_a: f64,
    norm_m: f64,
}

impl Pencil<'_> {
    fn shifted(&self, sigma: f64) -> Result<CsrMatrix> {
        CsrMatrix::lincomb(&[(ONE, self.a), (C64::new(-sigma, 0.0), self.m)])
    }

    fn backward_error(&self, lambda: C64, z: &[C64]) -> f64 {
        let az = self.a.matvec(z);
        let mz = self.m.matvec(z);
        let r: Vec<C64> = az.iter().zip(&mz).map(|(p, q)| p - lambda * q).collect();
        norm2(&r) / ((self.norm_a + lambda.norm() * self.norm_m) * norm2(z)).max(f64::MIN_POSITIVE)
    }
}

struct ShiftOutcome {
    accepted: Vec<(C64, Vec<C64>, f64)>,
    radius: f64,
}

/// One Arnoldi run at `sigma` against the locked space.
fn arnoldi_at(
    pencil: &Pencil,
    fac: &LdlFactor,
    sigma: f64,
    locked: &Locked,
    kdim: usize,
    tol: f64,
    rng: &mut ChaCha8Rng,
) -> Result<ShiftOutcome> {
    let n = pencil.a.nrows();
    let nl = locked.q.len();
    let kdim = kdim.min(n - nl);
    if kdim == 0 {
        return Ok(ShiftOutcome {
            accepted: Vec::new(),
            radius: f64::INFINITY,
        });
    }
    let m = pencil.m;
    let normalize = |v: &mut Vec<C64>| -> (f64, Vec<C64>) {
        let mv = m.matvec(v);
        let nrm = dotc(v, &mv).re.max(0.0).sqrt();
        v.iter_mut().for_each(|x| *x /= nrm);
        (nrm, mv.into_iter().map(|x| x / nrm).collect())
    };
    let mut v0: Vec<C64> = (0..n).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    locked.project(&mut v0);
    let (_, mv0) = normalize(&mut v0);
    let mut v = vec![v0];
    let mut mv = vec![mv0];
    let mut h = DMatrix::<C64>::zeros(kdim + 1, kdim);
    let mut f = DMatrix::<C64>::zeros(nl, kdim);
    let mut k = kdim;
    let mut exhausted = false;
    for j in 0..kdim {
        let mut w = fac.solve(&mv[j]);
        let tnorm = (dotc(&w, &m.matvec(&w)).re).max(0.0).sqrt();
        let fj = locked.project(&mut w);
        for (i, c) in fj.into_iter().enumerate() {
            f[(i, j)] = c;
        }
        for _ in 0..2 {
            for i in 0..=j {
                let c = dotc(&mv[i], &w);
                h[(i, j)] += c;
                w.iter_mut().zip(&v[i]).for_each(|(wi, vi)| *wi -= c * vi);
            }
        }
        let (nrm, mw) = normalize(&mut w);
        h[(j + 1, j)] = C64::new(nrm, 0.0);
        if nrm <= 1e-12 * tnorm.max(f64::MIN_POSITIVE) || j + 1 == n - nl {
            k = j + 1;
            exhausted = true;
            break;
        }
        v.push(w);
        mv.push(mw);
    }
    let hk = h.view((0, 0), (k, k)).into_owned();
    let beta = h[(k, k - 1)].norm();
    let (u, t) = Schur::new(hk).unpack();

    // R = Qᴴ M T Q for the locked space at this shift.
    let mut r = DMatrix::<C64>::zeros(nl, nl);
    for c in 0..nl {
        let tq = fac.solve(&locked.mq[c]);
        for i in 0..nl {
            r[(i, c)] = dotc(&locked.mq[i], &tq);
        }
    }

    let mut accepted = Vec::new();
    let mut radius = f64::INFINITY;
    for i in 0..k {
        let theta = t[(i, i)];
        if theta.norm() == 0.0 {
            continue;
        }
        let lambda = C64::new(sigma, 0.0) + theta.inv();
        // Eigenvector of the triangular factor.
        let mut s = vec![ZERO; k];
        s[i] = ONE;
        for jj in (0..i).rev() {
            let mut acc = ZERO;
            for l in jj + 1..=i {
                acc += t[(jj, l)] * s[l];
            }
            let den = t[(jj, jj)] - theta;
            let den = if den.norm() < 1e-14 * theta.norm() { C64::new(1e-14 * theta.norm(), 0.0) } else { den };
            s[jj] = -acc / den;
        }
        let mut y = vec![ZERO; k];
        for row in 0..k {
            for l in 0..=i {
                y[row] += u[(row, l)] * s[l];
            }
        }
        let ny = norm2(&y);
        y.iter_mut().for_each(|x| *x /= ny);
        let est = if exhausted { 0.0 } else { beta * y[k - 1].norm() };
        let mut z = vec![ZERO; n];
        for (col, yc) in y.iter().enumerate() {
            z.iter_mut().zip(&v[col]).for_each(|(zi, vi)| *zi += yc * vi);
        }
        if nl > 0 {
            let fy: Vec<C64> = (0..nl).map(|row| (0..k).map(|col| f[(row, col)] * y[col]).sum()).collect();
            let mut c = vec![ZERO; nl];
            for row in (0..nl).rev() {
                let mut acc = fy[row];
                for l in row + 1..nl {
                    acc += r[(row, l)] * c[l];
                }
                let den = theta - r[(row, row)];
                c[row] = if den.norm() <= 1e-10 * theta.norm() { ZERO } else { acc / den };
            }
            for (qi, ci) in locked.q.iter().zip(&c) {
                z.iter_mut().zip(qi).for_each(|(zi, q)| *zi += ci * q);
            }
        }
        let be = if est <= 1e-3 * theta.norm() { pencil.backward_error(lambda, &z) } else { f64::INFINITY };
        if be <= tol {
            accepted.push((lambda, z, be));
        } else {
            radius = radius.min((lambda - sigma).norm());
        }
    }
    accepted.retain(|(l, _, _)| (l - sigma).norm() < radius);
    Ok(ShiftOutcome { accepted, radius })
}

fn factor_near(pencil: &Pencil, sigma: f64, scale: f64) -> Result<(f64, LdlFactor)> {
    let mut s = sigma;
    let mut last = None;
    for attempt in 0..6 {
        match LdlFactor::new(&pencil.shifted(s)?) {
            Ok(f) => return Ok((s, f)),
            Err(e) => last = Some(e),
        }
        s = sigma + scale * 1e-6 * 7f64.powi(attempt);
    }
    Err(last.unwrap())
}

/// Eigenvalues of `A v = λ M v` with `Re λ ∈ [lo, hi]` (at most `k_max`, the
/// ones with smallest real part).
pub fn eigs_pencil(a: &CsrMatrix, m: &CsrMatrix, lo: f64, hi: f64, opts: &EigsOptions) -> Result<EigenResult> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::arg("eigenvalue window must be a bounded interval"));
    }
    if a.nrows() != m.nrows() || a.nrows() != a.ncols() {
        return Err(Error::arg("pencil matrices have mismatched shapes"));
    }
    let pencil = Pencil {
        a,
        m,
        norm_a: norm1(a),
        norm_m: norm1(m),
    };
    let hermitian = a.symmetry() == Symmetry::Hermitian && a.is_real() && m.is_real();
    let expected = if hermitian {
        let below = |s: f64| -> Result<usize> {
            let (_, f) = factor_near(&pencil, s, 1.0 + s.abs())?;
            Ok(f.negative_pivots().unwrap_or(0))
        };
        Some(below(hi)? - below(lo)?)
    } else {
        None
    };
    let scale = 1.0 + lo.abs().max(hi.abs());
    let mut kdim = opts.krylov_dim.max(4);
    loop {
        let res = sweep(&pencil, lo, hi, opts, kdim, scale)?;
        let count_ok = match expected {
            Some(e) => res.truncated || res.pairs.len() == e,
            None => true,
        };
        if count_ok || kdim >= a.nrows() {
            let mut res = res;
            res.converged &= count_ok;
            return Ok(res);
        }
        kdim *= 2;
    }
}

fn sweep(pencil: &Pencil, lo: f64, hi: f64, opts: &EigsOptions, kdim: usize, scale: f64) -> Result<EigenResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked = Locked { q: Vec::new(), mq: Vec::new() };
    let mut found: Vec<EigenPair> = Vec::new();
    let mut sigma = lo;
    let mut shifts = 0;
    let mut converged = true;
    let n = pencil.a.nrows();
    let min_step = 1e-6 * scale;
    loop {
        if shifts >= opts.max_shifts {
            converged = false;
            break;
        }
        let (s, fac) = factor_near(pencil, sigma, scale)?;
        shifts += 1;
        let mut radius;
        loop {
            let out = arnoldi_at(pencil, &fac, s, &locked, kdim, opts.tol, &mut rng)?;
            radius = out.radius;
            if out.accepted.is_empty() {
                break;
            }
            for (lambda, z, be) in out.accepted {
                let mut x = z.clone();
                locked.project(&mut x);
                let mx = pencil.m.matvec(&x);
                let nx = dotc(&x, &mx).re.max(0.0).sqrt();
                if nx <= 1e-8 * norm2(&z) {
                    continue;
                }
                locked.q.push(x.iter().map(|v| v / nx).collect());
                locked.mq.push(mx.iter().map(|v| v / nx).collect());
                let mz = pencil.m.matvec(&z);
                let nz = dotc(&z, &mz).re.sqrt();
                found.push(EigenPair {
                    value: lambda,
                    vector: z.iter().map(|v| v / nz).collect(),
                    residual: be,
                });
            }
            if locked.q.len() >= n {
                radius = f64::INFINITY;
                break;
            }
        }
        let covered = s + radius;
        let in_window = found.iter().filter(|p| p.value.re >= lo && p.value.re <= hi && p.value.re <= covered).count();
        if covered >= hi || in_window >= opts.k_max {
            break;
        }
        sigma = if radius < min_step {
            // Stalled: step past the unresolved Ritz value.
            converged = false;
            s + min_step
        } else {
            s + radius
        };
    }
    found.retain(|p| p.value.re >= lo && p.value.re <= hi);
    found.sort_by(|p, q| p.value.re.total_cmp(&q.value.re).then(p.value.im.total_cmp(&q.value.im)));
    let mut pairs: Vec<EigenPair> = Vec::with_capacity(found.len());
    for p in found {
        let dup = pairs.iter().any(|q| {
            (q.value - p.value).norm() <= 1e-8 * (1.0 + p.value.norm()) && {
                let c = dotc(&q.vector, &pencil.m.matvec(&p.vector)).norm();
                c >= 1.0 - 1e-6
            }
        });
        if !dup {
            pairs.push(p);
        }
    }
    let truncated = pairs.len() > opts.k_max;
    pairs.truncate(opts.k_max);
    Ok(EigenResult {
        pairs,
        converged,
        truncated,
        shifts,
    })
}
