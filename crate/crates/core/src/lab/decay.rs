//! Weighted decay estimates on strips and the interaction of sources placed in
//! distinct unit cubes.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{
    assemble_weighted_mass, assemble_weighted_stiffness, build_operator, load_vector, DiscreteOperator, WeightSpec,
};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryKind, DomainSpec};
use crate::mesh::{mesh_full_domain, Mesh};
use crate::quadrature::{map_point, signed_area, TRI_DEGREE5};
use crate::solvers::{LinearSolver, DEFAULT_TOL};
use crate::sparse::{dotc, C64, ONE, ZERO};

use super::resolvent::ResolventPair;
use super::Source;

#[derive(Debug, Clone)]
pub struct DecayCheckConfig {
    pub strip: DomainSpec,
    pub lambda: f64,
    pub bc: BoundaryKind,
    pub h: f64,
    pub tol_disc: f64,
}

impl DecayCheckConfig {
    pub fn new(strip: DomainSpec, lambda: f64, bc: BoundaryKind) -> Result<Self> {
        if !(lambda > 0.5) || !lambda.is_finite() {
            return Err(Error::arg(format!("decay estimates need λ > 1/2, got {lambda}")));
        }
        bc.validate()?;
        Ok(Self {
            strip,
            lambda,
            bc,
            h: 1.0 / 16.0,
            tol_disc: 0.05,
        })
    }

    /// `max{2, 1/(λ − 1/2)}`.
    pub fn m(&self) -> f64 {
        2f64.max(1.0 / (self.lambda - 0.5))
    }
}

#[derive(Debug, Clone)]
pub struct DecayReport {
    pub center: [f64; 2],
    pub m: f64,
    /// `∫|u|²ω / ∫|f|²ω`.
    pub r1: f64,
    /// `∫|∇u|²ω / ∫|f|²ω`.
    pub r2: f64,
    pub pass1: bool,
    pub pass2: bool,
    /// Largest weighted density `|u|²ω` on the unit cell at the strip end
    /// farther from the source, relative to its maximum over the strip.
    pub truncation: f64,
}

impl DecayReport {
    pub fn passed(&self) -> bool {
        self.pass1 && self.pass2
    }
}

/// Mesh, operator `−Δ + λ` and factorization for repeated decay checks.
pub struct DecayProblem {
    pub cfg: DecayCheckConfig,
    pub mesh: Arc<Mesh>,
    pub op: DiscreteOperator,
    solver: LinearSolver,
}

impl DecayProblem {
    pub fn new(cfg: &DecayCheckConfig) -> Result<Self> {
        let mesh = Arc::new(mesh_full_domain(&cfg.strip, cfg.h)?);
        let op = build_operator(mesh.clone(), cfg.bc, ZERO, C64::new(cfg.lambda - 1.0, 0.0))?;
        let solver = LinearSolver::new(op.system())?;
        Ok(Self {
            cfg: cfg.clone(),
            mesh,
            op,
            solver,
        })
    }

    pub fn solve(&self, f: &Source) -> Result<Vec<C64>> {
        let b = self.op.restrict(&load_vector(&self.mesh, &|x| f.eval(x))?);
        Ok(self.op.expand(&self.solver.solve(&b, DEFAULT_TOL)?.0))
    }

    pub fn check(&self, f: &Source) -> Result<DecayReport> {
        let center = match f.support() {
            Some(b) => [(b[0] + b[2]) / 2.0, (b[1] + b[3]) / 2.0],
            None => return Err(Error::arg("decay checks need a source with known compact support")),
        };
        let m = self.cfg.m();
        let w = WeightSpec { center };
        let fw = weighted_source_norm_sq(&self.mesh, f, &w);
        if fw == 0.0 {
            return Ok(DecayReport {
                center,
                m,
                r1: 0.0,
                r2: 0.0,
                pass1: true,
                pass2: true,
                truncation: 0.0,
            });
        }
        let u = self.solve(f)?;
        let wm = assemble_weighted_mass(&self.mesh, &w)?;
        let wk = assemble_weighted_stiffness(&self.mesh, &w)?;
        let r1 = dotc(&u, &wm.matvec(&u)).re / fw;
        let r2 = dotc(&u, &wk.matvec(&u)).re / fw;
        let limit = m * (1.0 + self.cfg.tol_disc);
        Ok(DecayReport {
            center,
            m,
            r1,
            r2,
            pass1: r1 <= limit,
            pass2: r2 <= limit,
            truncation: end_density_ratio(&self.mesh, &u, &w, self.cfg.strip.extents[0]),
        })
    }
}

/// One decay check with a freshly built strip problem.
pub fn weighted_decay_check(cfg: &DecayCheckConfig, f: &Source) -> Result<DecayReport> {
    DecayProblem::new(cfg)?.check(f)
}

/// Random combination of the first sine modes on a random unit cube of the
/// strip.
pub fn random_cube_source(strip: &DomainSpec, seed: u64) -> Source {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cubes = strip.extents[0].floor().max(1.0) as usize;
    let k = rng.gen_range(0..cubes);
    let mut coefficients = Vec::new();
    for m in 1..=3 {
        for n in 1..=3 {
            let c = C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) / (m * n) as f64;
            coefficients.push((m, n, c));
        }
    }
    Source::CubeModes {
        corner: [k as f64, 0.0],
        coefficients,
    }
}

fn weighted_source_norm_sq(mesh: &Mesh, f: &Source, w: &WeightSpec) -> f64 {
    let mut s = 0.0;
    for t in 0..mesh.n_triangles() {
        let p = mesh.corners(t);
        let area = signed_area(p).abs();
        for (bary, wq) in TRI_DEGREE5 {
            let x = map_point(p, bary);
            s += area * wq * w.omega(x) * f.eval(x).norm_sqr();
        }
    }
    s
}

fn end_density_ratio(mesh: &Mesh, u: &[C64], w: &WeightSpec, length: f64) -> f64 {
    let mut max_all = 0.0f64;
    let mut max_end = 0.0f64;
    let far_right = length - w.center[0] >= w.center[0];
    for (v, x) in mesh.vertices.iter().enumerate() {
        let d = u[v].norm_sqr() * w.omega(*x);
        max_all = max_all.max(d);
        if (far_right && x[0] >= length - 1.0) || (!far_right && x[0] <= 1.0) {
            max_end = max_end.max(d);
        }
    }
    if max_all == 0.0 {
        0.0
    } else {
        max_end / max_all
    }
}

/// Unit-cube source `sin(π(x−i)) sin(πy)` on cube `i`.
pub fn cube_sine(i: usize) -> Source {
    Source::CubeModes {
        corner: [i as f64, 0.0],
        coefficients: vec![(1, 1, ONE)],
    }
}

#[derive(Debug, Clone)]
pub struct InteractionReport {
    pub i: usize,
    pub j: usize,
    pub inner: C64,
    pub norm_fi: f64,
    pub norm_fj: f64,
    /// `|⟨u_i,u_j⟩| / (‖f_i‖‖f_j‖ e^{−|i−j|/2})`.
    pub ratio: f64,
}

fn overlap(a: &Source, b: &Source) -> bool {
    match (a.support(), b.support()) {
        (Some(p), Some(q)) => p[0] < q[2] && q[0] < p[2] && p[1] < q[3] && q[1] < p[3],
        _ => false,
    }
}

/// `⟨u_i, u_j⟩` for `u_k = (J A_ε⁻¹ − A⁻¹ J) f_k`.
pub fn interaction_decay(pair: &ResolventPair, i: usize, j: usize, fi: &Source, fj: &Source) -> Result<InteractionReport> {
    if i == j {
        return Err(Error::arg("interaction needs two distinct cubes"));
    }
    if overlap(fi, fj) {
        return Err(Error::arg("source supports overlap"));
    }
    let norm_fi = pair.source_norm_perforated(&|x| fi.eval(x));
    let norm_fj = pair.source_norm_perforated(&|x| fj.eval(x));
    let ui = pair.difference_from_load(&load_vector(&pair.perforated, &|x| fi.eval(x))?)?;
    let uj = pair.difference_from_load(&load_vector(&pair.perforated, &|x| fj.eval(x))?)?;
    let inner = pair.inner(&ui, &uj);
    let scale = norm_fi * norm_fj * (-(i.abs_diff(j) as f64) / 2.0).exp();
    let ratio = if inner == ZERO { 0.0 } else { inner.norm() / scale };
    Ok(InteractionReport {
        i,
        j,
        inner,
        norm_fi,
        norm_fj,
        ratio,
    })
}

/// Interactions of cube `base` with cubes `base + k` for each distance `k`,
/// using the unit-cube sine source. Each difference field is computed once.
pub fn interaction_sweep(pair: &ResolventPair, base: usize, distances: &[usize]) -> Result<Vec<InteractionReport>> {
    let fi = cube_sine(base);
    let norm_fi = pair.source_norm_perforated(&|x| fi.eval(x));
    let ui = pair.difference_from_load(&load_vector(&pair.perforated, &|x| fi.eval(x))?)?;
    let mut out = Vec::new();
    for &k in distances {
        if k == 0 {
            return Err(Error::arg("interaction needs two distinct cubes"));
        }
        let j = base + k;
        let fj = cube_sine(j);
        let norm_fj = pair.source_norm_perforated(&|x| fj.eval(x));
        let uj = pair.difference_from_load(&load_vector(&pair.perforated, &|x| fj.eval(x))?)?;
        let inner = pair.inner(&ui, &uj);
        let ratio = inner.norm() / (norm_fi * norm_fj * (-(k as f64) / 2.0).exp());
        out.push(InteractionReport {
            i: base,
            j,
            inner,
            norm_fi,
            norm_fj,
            ratio,
        });
    }
    Ok(out)
}

/// Least-squares slope of `ln|⟨u_i,u_j⟩|` against `|i−j|`.
pub fn log_slope(reports: &[InteractionReport]) -> f64 {
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .filter(|r| r.inner != ZERO)
        .map(|r| (r.i.abs_diff(r.j) as f64, r.inner.norm().ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone)]
pub struct DecompositionReport {
    pub n: usize,
    /// `‖Σ u_i‖²`.
    pub lhs: f64,
    /// `Σ ‖u_i‖²`.
    pub sum_sq: f64,
    pub f_norm: f64,
    /// Smallest `C` with `lhs ≤ C (n³ sum_sq + ‖f‖ e^{−n/3})`.
    pub c: f64,
}

/// Evaluates both sides of `‖Σu_i‖² ≤ C(n³Σ‖u_i‖² + ‖f‖e^{−n/3})` for
/// `f = Σ f_i` split over cubes, with `u_i` the resolvent differences.
pub fn decomposition_inequality_check(pair: &ResolventPair, pieces: &[Source], n: usize) -> Result<DecompositionReport> {
    if n <= 1 {
        return Err(Error::arg("decomposition needs n > 1"));
    }
    let mut total: Option<super::DiffField> = None;
    let mut sum_sq = 0.0;
    let mut f_sq = 0.0;
    for f in pieces {
        f_sq += pair.source_norm_perforated(&|x| f.eval(x)).powi(2);
        let u = pair.difference_from_load(&load_vector(&pair.perforated, &|x| f.eval(x))?)?;
        sum_sq += pair.norm(&u).powi(2);
        total = Some(match total {
            None => u,
            Some(mut t) => {
                t.perforated.iter_mut().zip(&u.perforated).for_each(|(a, b)| *a += b);
                t.holes.iter_mut().zip(&u.holes).for_each(|(a, b)| *a += b);
                t
            }
        });
    }
    let lhs = total.map(|t| pair.norm(&t).powi(2)).unwrap_or(0.0);
    let f_norm = f_sq.sqrt();
    let rhs = (n as f64).powi(3) * sum_sq + f_norm * (-(n as f64) / 3.0).exp();
    Ok(DecompositionReport {
        n,
        lhs,
        sum_sq,
        f_norm,
        c: if lhs == 0.0 { 0.0 } else { lhs / rhs },
    })
}
