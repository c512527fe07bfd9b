//! Action of `e^{-tB}` with `B = M⁻¹S` by Crank–Nicolson time stepping.
//!
//! Each run starts with four backward-Euler half steps (Rannacher smoothing),
//! which share the Crank–Nicolson matrix `M + dt/2·S`, so stiff modes are
//! damped instead of oscillating. Step counts double; each doubling yields a
//! Richardson combination of the last two runs, and propagation stops once two
//! successive combinations agree to `tol` in the `M` norm.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::ldl::LdlFactor;
use crate::assembly::DiscreteOperator;
use crate::error::{Error, Result, SolverFailure};
use crate::sparse::{norm_m, CsrMatrix, C64, ONE};

const MAX_LEVEL: i32 = 30;

/// Propagator for a fixed pencil; factorizations are cached per step size.
pub struct Propagator {
    s: CsrMatrix,
    m: CsrMatrix,
    cache: Mutex<HashMap<u64, Arc<LdlFactor>>>,
}

impl Propagator {
    pub fn new(s: &CsrMatrix, m: &CsrMatrix) -> Result<Self> {
        if s.nrows() != m.nrows() || s.nrows() != s.ncols() {
            return Err(Error::arg("propagator matrices have mismatched shapes"));
        }
        Ok(Self {
            s: s.clone(),
            m: m.clone(),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn from_operator(op: &DiscreteOperator) -> Result<Self> {
        Self::new(op.system(), op.mass_free())
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.m
    }

    fn factor(&self, dt: f64) -> Result<Arc<LdlFactor>> {
        if let Some(f) = self.cache.lock().unwrap().get(&dt.to_bits()) {
            return Ok(f.clone());
        }
        let a = CsrMatrix::lincomb(&[(ONE, &self.m), (C64::new(0.5 * dt, 0.0), &self.s)])?;
        let f = Arc::new(LdlFactor::new(&a)?);
        self.cache.lock().unwrap().insert(dt.to_bits(), f.clone());
        Ok(f)
    }

    fn run(&self, t: f64, steps: usize, v: &[C64]) -> Result<Vec<C64>> {
        let dt = t / steps as f64;
        let f = self.factor(dt)?;
        let mut u = v.to_vec();
        let startup = steps.min(2);
        for _ in 0..2 * startup {
            u = f.solve(&self.m.matvec(&u));
        }
        for _ in startup..steps {
            let mu = self.m.matvec(&u);
            let su = self.s.matvec(&u);
            let rhs: Vec<C64> = mu.iter().zip(&su).map(|(a, b)| a - 0.5 * dt * b).collect();
            u = f.solve(&rhs);
        }
        Ok(u)
    }

    /// `e^{-tB} v` to relative accuracy `tol` in the `M` norm.
    pub fn apply(&self, t: f64, v: &[C64], tol: f64) -> Result<Vec<C64>> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::arg("propagation time must be finite and nonnegative"));
        }
        if v.len() != self.dim() {
            return Err(Error::arg("vector has the wrong length"));
        }
        if t == 0.0 {
            return Ok(v.to_vec());
        }
        // Dyadic step sizes so that runs for different t share factorizations.
        let mut level = (4.0 / t).log2().ceil().max(-4.0) as i32;
        let steps_at = |l: i32| (t * 2f64.powi(l)).ceil().max(1.0) as usize;
        let mut coarse = self.run(t, steps_at(level), v)?;
        let mut previous: Option<Vec<C64>> = None;
        loop {
            level += 1;
            if level > MAX_LEVEL {
                return Err(Error::solver(
                    "time step underflow in Crank–Nicolson propagation",
                    SolverFailure {
                        iterations: steps_at(MAX_LEVEL),
                        residual: f64::NAN,
                        best_estimate: None,
                    },
                ));
            }
            let fine = self.run(t, steps_at(level), v)?;
            let extrapolated: Vec<C64> = fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect();
            let size = norm_m(&self.m, &extrapolated);
            if size == 0.0 {
                return Ok(extrapolated);
            }
            if let Some(prev) = &previous {
                let diff: Vec<C64> = extrapolated.iter().zip(prev).map(|(a, b)| a - b).collect();
                if norm_m(&self.m, &diff) <= tol * size {
                    return Ok(extrapolated);
                }
            }
            previous = Some(extrapolated);
            coarse = fine;
        }
    }

    /// Adjoint in the `M` inner product. For complex symmetric `S`,
    /// `(e^{-tB})* = conj ∘ e^{-tB} ∘ conj`.
    pub fn apply_adjoint(&self, t: f64, v: &[C64], tol: f64) -> Result<Vec<C64>> {
        let cv: Vec<C64> = v.iter().map(|x| x.conj()).collect();
        Ok(self.apply(t, &cv, tol)?.into_iter().map(|x| x.conj()).collect())
    }
}

/// `e^{-tB} v` for the operator's pencil (`B = M⁻¹·system`).
pub fn expm_apply(op: &DiscreteOperator, t: f64, v: &[C64], tol: f64) -> Result<Vec<C64>> {
    Propagator::from_operator(op)?.apply(t, v, tol)
}
