//! Radial cell problems: correctors on the annulus `a < r < ε`, truncated
//! capacities of the unit ball and the per-cell strange term.
//!
//! Radial fields are discretized with elements that are linear in the
//! fundamental solution `g` (`ln r` in the plane, `-1/r` in space). Harmonic
//! radial functions are affine in `g`, so the annulus correctors are
//! reproduced exactly at the nodes.

use crate::error::{Error, Result};
use crate::geometry::{surface_area_unit_ball, BoundaryKind};
use crate::mesh::{radial_grid, RadialGrid};
use crate::sparse::{C64, ONE, ZERO};

/// Nodes used by [`corrector_radial`].
pub const CORRECTOR_NODES: usize = 400;

#[derive(Debug, Clone)]
pub struct CorrectorSolution {
    pub grid: RadialGrid,
    pub values: Vec<C64>,
    /// `S_d ε^{d-1} w'(ε)`.
    pub flux: C64,
    /// `(c₁, c₂)` with `w = c₁ g(r) + c₂`; `None` for Neumann.
    pub coefficients: Option<(C64, C64)>,
    pub bc: BoundaryKind,
    pub dim: usize,
}

impl CorrectorSolution {
    pub fn closed_form(&self, r: f64) -> C64 {
        match self.coefficients {
            Some((c1, c2)) => c1 * fundamental(self.dim, r) + c2,
            None => ONE,
        }
    }

    /// Largest nodal deviation from the closed form.
    pub fn max_error(&self) -> f64 {
        self.grid
            .nodes
            .iter()
            .zip(&self.values)
            .map(|(&r, w)| (w - self.closed_form(r)).norm())
            .fold(0.0, f64::max)
    }

    pub fn trace_at_hole(&self) -> C64 {
        self.values[0]
    }
}

fn fundamental(d: usize, r: f64) -> f64 {
    if d == 2 {
        r.ln()
    } else {
        -r.powi(2 - d as i32) / (d as f64 - 2.0)
    }
}

fn check_dim(d: usize) -> Result<()> {
    if !(2..=3).contains(&d) {
        return Err(Error::arg(format!("radial problems need d in {{2, 3}}, got {d}")));
    }
    Ok(())
}

/// Tridiagonal solve for the interior unknowns (Thomas algorithm).
fn thomas(diag: &mut [C64], off: &[C64], rhs: &mut [C64]) -> Result<()> {
    let n = diag.len();
    for i in 1..n {
        if diag[i - 1].norm() == 0.0 {
            return Err(Error::arg("singular radial system"));
        }
        let m = off[i - 1] / diag[i - 1];
        diag[i] -= m * off[i - 1];
        let prev = rhs[i - 1];
        rhs[i] -= m * prev;
    }
    if diag[n - 1].norm() == 0.0 {
        return Err(Error::arg("singular radial system"));
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] = (rhs[i] - off[i] * next) / diag[i];
    }
    Ok(())
}

/// Corrector on `a < r < ε` with `w(ε) = 1` and the hole condition at `r = a`.
pub fn corrector_radial(bc: BoundaryKind, a: f64, eps: f64, d: usize) -> Result<CorrectorSolution> {
    if !(a > 0.0 && a < eps) {
        return Err(Error::arg(format!("corrector needs 0 < a < eps, got a={a}, eps={eps}")));
    }
    corrector_on_grid(bc, &radial_grid(a, eps, CORRECTOR_NODES - 1, true)?, d)
}

pub fn corrector_on_grid(bc: BoundaryKind, grid: &RadialGrid, d: usize) -> Result<CorrectorSolution> {
    check_dim(d)?;
    bc.validate()?;
    let a = grid.r_in();
    if !(a > 0.0) {
        return Err(Error::arg("corrector grid must start at a positive radius"));
    }
    let s_d = surface_area_unit_ball(d)?;
    let n = grid.nodes.len();
    let g: Vec<f64> = grid.nodes.iter().map(|&r| fundamental(d, r)).collect();
    if bc == BoundaryKind::Neumann {
        return Ok(CorrectorSolution {
            grid: grid.clone(),
            values: vec![ONE; n],
            flux: ZERO,
            coefficients: None,
            bc,
            dim: d,
        });
    }
    let k: Vec<f64> = g.windows(2).map(|w| s_d / (w[1] - w[0])).collect();
    let (c1, c2) = match bc {
        BoundaryKind::Dirichlet => {
            let c1 = 1.0 / (g[n - 1] - g[0]);
            (C64::new(c1, 0.0), C64::new(-c1 * g[0], 0.0))
        }
        BoundaryKind::Robin(alpha) => {
            // c₁ g(ε) + c₂ = 1 and -c₁ g'(a) + α(c₁ g(a) + c₂) = 0.
            let gp = a.powi(1 - d as i32);
            let den = alpha * (g[n - 1] - g[0]) + gp;
            if den.norm() < 1e-300 {
                return Err(Error::arg("singular Robin corrector system"));
            }
            let c1 = alpha / den;
            (c1, ONE - c1 * g[n - 1])
        }
        BoundaryKind::Neumann => unreachable!(),
    };
    // Unknowns: nodes 0..n-1 (Dirichlet: 1..n-1), w(ε) = 1 fixed.
    let first = if bc == BoundaryKind::Dirichlet { 1 } else { 0 };
    let m = n - 1 - first;
    let mut values = vec![ZERO; n];
    values[n - 1] = ONE;
    if m > 0 {
        let mut diag = vec![ZERO; m];
        let mut off = vec![ZERO; m.saturating_sub(1)];
        let mut rhs = vec![ZERO; m];
        for (e, &ke) in k.iter().enumerate() {
            let ke = C64::new(ke, 0.0);
            let (i, j) = (e, e + 1);
            if i >= first {
                diag[i - first] += ke;
            }
            if j < n - 1 {
                diag[j - first] += ke;
                if i >= first {
                    off[i - first] -= ke;
                }
            } else if i >= first {
                rhs[i - first] += ke;
            }
        }
        if let BoundaryKind::Robin(alpha) = bc {
            diag[0] += alpha * s_d * a.powi(d as i32 - 1);
        }
        thomas(&mut diag, &off, &mut rhs)?;
        values[first..n - 1].copy_from_slice(&rhs);
    }
    let flux = (values[n - 1] - values[n - 2]) * k[n - 2];
    Ok(CorrectorSolution {
        grid: grid.clone(),
        values,
        flux,
        coefficients: Some((c1, c2)),
        bc,
        dim: d,
    })
}

/// Radial Dirichlet energy `S_d ∫ r^{d-1} |u'|² dr` minimized over `u(1) = 1`,
/// `u(R) = 0` on the given grid of `[1, R]`.
pub fn capacity_variational(d: usize, grid: &RadialGrid) -> Result<f64> {
    if d == 2 {
        return Err(Error::arg("the capacity of a point in the plane is degenerate; use d >= 3"));
    }
    check_dim(d)?;
    if (grid.r_in() - 1.0).abs() > 1e-12 || !(grid.r_out() > 1.0) {
        return Err(Error::arg("capacity grid must span [1, R] with R > 1"));
    }
    let s_d = surface_area_unit_ball(d)?;
    // Elements linear in ln r: energy S_d ∫ r^{d-3} dr (Δu/Δln r)².
    let r = &grid.nodes;
    let k: Vec<f64> = r
        .windows(2)
        .map(|w| {
            let dl = (w[1] / w[0]).ln();
            let integral = if d == 2 { dl } else { (w[1].powi(d as i32 - 2) - w[0].powi(d as i32 - 2)) / (d as f64 - 2.0) };
            s_d * integral / (dl * dl)
        })
        .collect();
    let n = r.len();
    let m = n - 2;
    if m == 0 {
        return Ok(k[0]);
    }
    let mut diag: Vec<C64> = (0..m).map(|i| C64::new(k[i] + k[i + 1], 0.0)).collect();
    let off: Vec<C64> = (0..m - 1).map(|i| C64::new(-k[i + 1], 0.0)).collect();
    let mut rhs = vec![ZERO; m];
    rhs[0] = C64::new(k[0], 0.0);
    thomas(&mut diag, &off, &mut rhs)?;
    let mut u = vec![1.0];
    u.extend(rhs.iter().map(|v| v.re));
    u.push(0.0);
    Ok(k.iter().zip(u.windows(2)).map(|(ke, w)| ke * (w[1] - w[0]).powi(2)).sum())
}

/// Capacity at `R → ∞` by Richardson extrapolation in `1/R` over three radii
/// `R, 2R, 4R` (geometric grids with the same node density per decade).
pub fn capacity_extrapolated(d: usize, r_trunc: f64, nodes: usize) -> Result<f64> {
    let per_decade = nodes as f64 / r_trunc.log10();
    let e = |r: f64| -> Result<f64> {
        let n = (per_decade * r.log10()).ceil() as usize;
        capacity_variational(d, &radial_grid(1.0, r, n.max(2), true)?)
    };
    let (e1, e2, e4) = (e(r_trunc)?, e(2.0 * r_trunc)?, e(4.0 * r_trunc)?);
    // E(R) = E∞ + c₁/R + c₂/R² + …
    let r1 = 2.0 * e2 - e1;
    let r2 = 2.0 * e4 - e2;
    Ok((4.0 * r2 - r1) / 3.0)
}

/// Options for [`mu_percell_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceRule {
    /// Robin trace `w(a)` from the corrector.
    #[default]
    Corrector,
    /// Robin trace replaced by 1.
    Unit,
}

/// Hole radius of the scaling rule for dimension `d`.
pub fn scaled_radius(bc: BoundaryKind, eps: f64, d: usize, neumann_exponent: f64) -> f64 {
    let df = d as f64;
    match bc {
        BoundaryKind::Dirichlet if d == 2 => (-1.0 / (eps * eps)).exp(),
        BoundaryKind::Dirichlet => eps.powf(df / (df - 2.0)),
        BoundaryKind::Robin(_) => eps.powf(df / (df - 1.0)),
        BoundaryKind::Neumann => eps.powf(neumann_exponent),
    }
}

/// Per-cell strange term from the corrector.
pub fn mu_percell(bc: BoundaryKind, eps: f64, d: usize) -> Result<C64> {
    mu_percell_with(bc, eps, d, TraceRule::Corrector)
}

pub fn mu_percell_with(bc: BoundaryKind, eps: f64, d: usize, rule: TraceRule) -> Result<C64> {
    check_dim(d)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::arg(format!("epsilon must lie in (0,1), got {eps}")));
    }
    let a = scaled_radius(bc, eps, d, crate::geometry::DEFAULT_NEUMANN_EXPONENT);
    if !(a > 0.0) {
        return Err(Error::Geometry(format!("hole radius underflows at epsilon={eps}")));
    }
    let cell = (2.0 * eps).powi(d as i32);
    match bc {
        BoundaryKind::Neumann => Ok(ZERO),
        BoundaryKind::Dirichlet => Ok(corrector_radial(bc, a, eps, d)?.flux / cell),
        BoundaryKind::Robin(alpha) => {
            let trace = match rule {
                TraceRule::Unit => ONE,
                TraceRule::Corrector => corrector_radial(bc, a, eps, d)?.trace_at_hole(),
            };
            let s_d = surface_area_unit_ball(d)?;
            Ok(alpha * s_d * a.powi(d as i32 - 1) * trace / cell)
        }
    }
}
