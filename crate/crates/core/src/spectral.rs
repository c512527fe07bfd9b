//! Spectral convergence and semigroup decay: windowed Hausdorff distances,
//! gap checks, numerical-range sectors and norm-decay curves of `e^{−tB}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::DiscreteOperator;
use crate::error::{Error, Result};
use crate::geometry::{strange_term, surface_area_unit_ball, BoundaryKind};
use crate::lab::lowest_eigenvalue;
use crate::solvers::{eigs_window, Propagator};
use crate::sparse::{dotc, norm_m, C64};

/// Closed sector `{z : |Im(z−v)| ≤ tan θ · Re(z−v)}` with vertex `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorSpec {
    pub vertex: C64,
    pub half_angle: f64,
}

impl SectorSpec {
    /// A half-angle of zero is the ray `[v, ∞)`.
    pub fn new(vertex: C64, half_angle: f64) -> Result<Self> {
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&half_angle) {
            return Err(Error::arg(format!("sector half-angle {half_angle} outside [0, π/2]")));
        }
        Ok(Self { vertex, half_angle })
    }

    /// Membership with absolute slack `tol` on `|Im(z−v)|`.
    pub fn contains(&self, z: C64, tol: f64) -> bool {
        let w = z - self.vertex;
        if self.half_angle == std::f64::consts::FRAC_PI_2 {
            return w.re >= -tol;
        }
        w.im.abs() <= self.half_angle.tan() * w.re + tol
    }

    /// How far `z` lies outside, measured in `|Im|`; zero or negative inside.
    pub fn excess(&self, z: C64) -> f64 {
        let w = z - self.vertex;
        w.im.abs() - self.half_angle.tan() * w.re
    }
}

/// Rectangle `[x_lo, x_hi] × [y_lo, y_hi]` in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumWindow {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl SpectrumWindow {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Result<Self> {
        if !(x_lo <= x_hi && y_lo <= y_hi) || ![x_lo, x_hi].iter().all(|v| v.is_finite()) {
            return Err(Error::arg("spectrum window must be a nonempty bounded rectangle in Re"));
        }
        Ok(Self { x_lo, x_hi, y_lo, y_hi })
    }

    /// Real strip `[x_lo, x_hi] × ℝ`.
    pub fn real_range(x_lo: f64, x_hi: f64) -> Result<Self> {
        Self::new(x_lo, x_hi, f64::NEG_INFINITY, f64::INFINITY)
    }

    /// `K_δ = [0, Re μ] × [−|Im μ|, |Im μ|]`.
    pub fn k_delta(mu: C64) -> Result<Self> {
        Self::new(0.0, mu.re, -mu.im.abs(), mu.im.abs())
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.x_lo && z.re <= self.x_hi && z.im >= self.y_lo && z.im <= self.y_hi
    }
}

/// Hausdorff distance of two finite point sets; `∞` if exactly one is empty.
pub fn hausdorff(a: &[C64], b: &[C64]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return f64::INFINITY,
        _ => {}
    }
    let one_sided = |x: &[C64], y: &[C64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

/// Eigenvalues of `op` inside the window.
pub fn windowed_spectrum(op: &DiscreteOperator, window: &SpectrumWindow, tol: f64) -> Result<Vec<C64>> {
    let r = eigs_window(op, window.x_lo, window.x_hi, 256, tol)?;
    if !r.converged {
        return Err(Error::solver(
            "eigenvalue window did not converge",
            crate::error::SolverFailure {
                iterations: r.shifts,
                residual: r.pairs.iter().map(|p| p.residual).fold(0.0, f64::max),
                best_estimate: None,
            },
        ));
    }
    Ok(r.values().into_iter().filter(|z| window.contains(*z)).collect())
}

pub fn spectra_hausdorff(op_eps: &DiscreteOperator, op_lim: &DiscreteOperator, window: &SpectrumWindow, tol: f64) -> Result<f64> {
    let a = windowed_spectrum(op_eps, window, tol)?;
    let b = windowed_spectrum(op_lim, window, tol)?;
    Ok(hausdorff(&a, &b))
}

#[derive(Debug, Clone)]
pub struct GapReport {
    pub holds: bool,
    /// `(δ, Re μ − δ)`.
    pub interval: (f64, f64),
    pub witnesses: Vec<C64>,
    /// Eigenvalues found in the default window `[−0.1, Re μ + 1]`.
    pub eigenvalues: Vec<C64>,
}

/// Checks that no eigenvalue of the B-form operator has real part in
/// `(δ, Re μ − δ)`, with `μ` the strange term of the hole condition.
pub fn spectral_gap_check(op_b: &DiscreteOperator, delta: f64) -> Result<GapReport> {
    if !(delta > 0.0) {
        return Err(Error::arg("gap margin δ must be positive"));
    }
    let mu = strange_term(op_b.bc_hole, 2)?.mu.re;
    let interval = (delta, mu - delta);
    if interval.0 >= interval.1 {
        return Ok(GapReport {
            holds: true,
            interval,
            witnesses: vec![],
            eigenvalues: vec![],
        });
    }
    let eigenvalues = windowed_spectrum(op_b, &SpectrumWindow::real_range(-0.1, mu + 1.0)?, 1e-9)?;
    let witnesses: Vec<C64> = eigenvalues
        .iter()
        .copied()
        .filter(|z| z.re > interval.0 && z.re < interval.1)
        .collect();
    Ok(GapReport {
        holds: witnesses.is_empty(),
        interval,
        witnesses,
        eigenvalues,
    })
}

/// Rayleigh quotients `u*Su / u*Mu` for `n` seeded random complex vectors.
pub fn numerical_range_sample(op: &DiscreteOperator, n: usize, seed: u64) -> Result<Vec<C64>> {
    if n == 0 {
        return Err(Error::arg("sample size must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = op.n_free();
    let (s, m) = (op.system(), op.mass_free());
    Ok((0..n)
        .map(|_| {
            let u: Vec<C64> = (0..dim).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
            dotc(&u, &s.matvec(&u)) / dotc(&u, &m.matvec(&u)).re
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectorVariant {
    Theta0,
    ThetaLambda,
    ThetaLambdaDelta,
}

/// Numerical-range sectors for the Robin problem with coefficient `alpha`.
///
/// `Theta0` has vertex 0 and angle `arctan(|Im α|/Re α)`. The shifted
/// variants have vertex `λ`: `θ_λ = arctan(|Im α|/(Re α − λ/(2^{−d}S_d)))` and
/// `θ_λ^δ = arctan(|Im μ|/(Re μ − λ − δ))`.
pub fn sector_angle(alpha: C64, lam: f64, d: usize, delta: f64, variant: SectorVariant) -> Result<SectorSpec> {
    let bc = BoundaryKind::robin(alpha)?;
    if alpha.re <= 0.0 {
        return Err(Error::arg("sector angles need Re α > 0"));
    }
    let unit = surface_area_unit_ball(d)? / 2f64.powi(d as i32);
    let mu = strange_term(bc, d)?.mu;
    match variant {
        SectorVariant::Theta0 => SectorSpec::new(C64::new(0.0, 0.0), (alpha.im.abs() / alpha.re).atan()),
        SectorVariant::ThetaLambda => {
            if !(lam > 0.0 && lam < mu.re) {
                return Err(Error::arg(format!("λ = {lam} outside (0, Re μ) = (0, {})", mu.re)));
            }
            SectorSpec::new(C64::new(lam, 0.0), (alpha.im.abs() / (alpha.re - lam / unit)).atan())
        }
        SectorVariant::ThetaLambdaDelta => {
            if !(delta > 0.0 && lam > 0.0 && lam < mu.re - delta) {
                return Err(Error::arg(format!("λ = {lam} outside (0, Re μ − δ) = (0, {})", mu.re - delta)));
            }
            SectorSpec::new(C64::new(lam, 0.0), (mu.im.abs() / (mu.re - lam - delta)).atan())
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DecayPoint {
    pub t: f64,
    /// Estimate of `‖e^{−tB}‖` in the mass-weighted norm.
    pub norm: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct DecayCurve {
    pub points: Vec<DecayPoint>,
    /// `(λ, M)` with `M` the smallest constant such that `norm ≤ M e^{−λt}`
    /// on the grid.
    pub fits: Vec<(f64, f64)>,
    /// `min Re σ(B)` of the discrete operator.
    pub spectral_abscissa: f64,
}

impl DecayCurve {
    pub fn fit(&self, lambda: f64) -> f64 {
        self.points.iter().map(|p| p.norm * (lambda * p.t).exp()).fold(0.0, f64::max)
    }

    pub fn norm_at(&self, t: f64) -> Option<f64> {
        self.points.iter().find(|p| p.t == t).map(|p| p.norm)
    }
}

const POWER_ITERATIONS: usize = 30;

/// `‖e^{−tB}‖` over a grid of times by power iteration on `P*P`, where `P`
/// is the propagator and `P*` its mass-weighted adjoint. `P` is applied as a
/// product over the grid increments. Each time starts from the dominant vector
/// of the previous one. Fits `M` for the candidate
/// rates `k/4 · Re μ` (`k = 1, 2, 3`) and `0.95 · min Re σ(B)`.
pub fn semigroup_decay_curve(op_b: &DiscreteOperator, t_grid: &[f64], tol: f64, seed: u64) -> Result<DecayCurve> {
    if t_grid.iter().any(|t| !(*t >= 0.0)) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::arg("time grid must be increasing and nonnegative"));
    }
    for bc in [op_b.bc_hole, op_b.bc_outer] {
        if let BoundaryKind::Robin(a) = bc {
            if a.re <= 0.0 {
                return Err(Error::arg("semigroup experiments need Re α > 0"));
            }
        }
    }
    let prop = Propagator::from_operator(op_b)?;
    let m = prop.mass();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<C64> = (0..prop.dim()).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    let nx = norm_m(m, &x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut points = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if t == 0.0 {
            points.push(DecayPoint {
                t,
                norm: 1.0,
                iterations: 0,
            });
            continue;
        }
        let steps: Vec<f64> = std::iter::once(0.0)
            .chain(t_grid.iter().copied().filter(|&s| s > 0.0 && s <= t))
            .collect::<Vec<_>>()
            .windows(2)
            .map(|w| w[1] - w[0])
            .collect();
        let mut est = 0.0;
        let mut iterations = 0;
        for it in 1..=POWER_ITERATIONS {
            iterations = it;
            let mut y = x.clone();
            for &dt in &steps {
                y = prop.apply(dt, &y, tol)?;
            }
            let new = norm_m(m, &y);
            let mut z = y;
            for &dt in steps.iter().rev() {
                z = prop.apply_adjoint(dt, &z, tol)?;
            }
            let nz = norm_m(m, &z);
            if nz == 0.0 {
                est = 0.0;
                break;
            }
            x = z.into_iter().map(|v| v / nz).collect();
            let done = (new - est).abs() <= tol.max(1e-12) * new;
            est = new;
            if done {
                break;
            }
        }
        points.push(DecayPoint { t, norm: est, iterations });
    }
    let spectral_abscissa = lowest_eigenvalue(op_b)?.re;
    let mu = strange_term(op_b.bc_hole, 2)?.mu.re;
    let mut curve = DecayCurve {
        points,
        fits: vec![],
        spectral_abscissa,
    };
    let mut rates: Vec<f64> = if mu > 0.0 { (1..=3).map(|k| k as f64 * mu / 4.0).collect() } else { vec![] };
    rates.push(0.95 * spectral_abscissa);
    curve.fits = rates.into_iter().map(|l| (l, curve.fit(l))).collect();
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::build_operator;
    use crate::geometry::{DomainSpec, PerforationSpec};
    use crate::mesh::{mesh_full_domain, mesh_perforated};
    use crate::sparse::ZERO;
    use proptest::prelude::*;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn minus_one() -> C64 {
        C64::new(-1.0, 0.0)
    }

    fn perforated_b(alpha: C64, eps: f64) -> DiscreteOperator {
        let spec = PerforationSpec::new(DomainSpec::unit_square(), eps, BoundaryKind::Robin(alpha)).unwrap();
        let mesh = Arc::new(mesh_perforated(&spec, 0.0625, 1.4).unwrap());
        build_operator(mesh, spec.bc, ZERO, minus_one()).unwrap()
    }

    #[test]
    fn two_point_hausdorff() {
        let w = SpectrumWindow::real_range(0.0, 2.0).unwrap();
        let a: Vec<C64> = [1.0].iter().map(|&x| C64::new(x, 0.0)).filter(|z| w.contains(*z)).collect();
        let b: Vec<C64> = [1.5].iter().map(|&x| C64::new(x, 0.0)).filter(|z| w.contains(*z)).collect();
        assert_eq!(hausdorff(&a, &b), 0.5);
        assert_eq!(hausdorff(&[], &[]), 0.0);
        assert_eq!(hausdorff(&a, &[]), f64::INFINITY);
    }

    #[test]
    fn identical_operators_have_zero_distance() {
        let mesh = Arc::new(mesh_full_domain(&DomainSpec::unit_square(), 0.125).unwrap());
        let op = build_operator(mesh, BoundaryKind::Robin(C64::new(1.0, 0.0)), ZERO, ZERO).unwrap();
        let w = SpectrumWindow::real_range(1.0, 30.0).unwrap();
        assert_eq!(spectra_hausdorff(&op, &op, &w, 1e-9).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn hausdorff_is_a_metric(
            a in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 1..6),
            b in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 1..6),
            c in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 1..6),
        ) {
            let f = |v: &Vec<(f64, f64)>| v.iter().map(|&(x, y)| C64::new(x, y)).collect::<Vec<_>>();
            let (a, b, c) = (f(&a), f(&b), f(&c));
            prop_assert_eq!(hausdorff(&a, &b), hausdorff(&b, &a));
            prop_assert!(hausdorff(&a, &c) <= hausdorff(&a, &b) + hausdorff(&b, &c) + 1e-12);
        }
    }

    #[test]
    fn neumann_gap_is_vacuous() {
        let mesh = Arc::new(mesh_full_domain(&DomainSpec::unit_square(), 0.25).unwrap());
        let op = build_operator(mesh, BoundaryKind::Neumann, ZERO, minus_one()).unwrap();
        let r = spectral_gap_check(&op, 0.2).unwrap();
        assert!(r.holds && r.witnesses.is_empty());
    }

    #[test]
    fn limit_operator_gap_holds() {
        let mesh = Arc::new(mesh_full_domain(&DomainSpec::unit_square(), 0.125).unwrap());
        let op = build_operator(mesh, BoundaryKind::Robin(C64::new(1.0, 0.0)), C64::new(PI / 2.0, 0.0), minus_one()).unwrap();
        let r = spectral_gap_check(&op, 0.2).unwrap();
        assert!(r.holds);
        assert!(r.eigenvalues.iter().all(|z| z.re >= PI / 2.0));
    }

    #[test]
    fn robin_gap_at_one_eighth() {
        let r = spectral_gap_check(&perforated_b(C64::new(1.0, 0.0), 0.125), 0.2).unwrap();
        assert!(r.holds, "{:?}", r.witnesses);
    }

    #[test]
    fn sector_examples() {
        let a = C64::new(1.0, 1.0);
        let t0 = sector_angle(a, 0.0, 2, 0.0, SectorVariant::Theta0).unwrap();
        assert!((t0.half_angle - PI / 4.0).abs() < 1e-15);
        let tl = sector_angle(a, PI / 4.0, 2, 0.0, SectorVariant::ThetaLambda).unwrap();
        assert!((tl.half_angle - 2f64.atan()).abs() < 1e-15);
        assert_eq!(tl.vertex, C64::new(PI / 4.0, 0.0));
        let real = sector_angle(C64::new(2.0, 0.0), 0.0, 2, 0.0, SectorVariant::Theta0).unwrap();
        assert_eq!(real.half_angle, 0.0);
        assert!(sector_angle(a, 2.0, 2, 0.0, SectorVariant::ThetaLambda).is_err());
        assert!(sector_angle(a, 1.4, 2, 0.2, SectorVariant::ThetaLambdaDelta).is_err());
        let td = sector_angle(a, 1.0, 2, 0.2, SectorVariant::ThetaLambdaDelta).unwrap();
        assert!((td.half_angle - (PI / 2.0 / (PI / 2.0 - 1.2)).atan()).abs() < 1e-15);
    }

    #[test]
    fn k_delta_window() {
        let w = SpectrumWindow::k_delta(C64::new(PI / 2.0, -PI / 2.0)).unwrap();
        assert_eq!((w.x_lo, w.x_hi, w.y_lo, w.y_hi), (0.0, PI / 2.0, -PI / 2.0, PI / 2.0));
    }

    #[test]
    fn numerical_range_structure() {
        let h = perforated_b(C64::new(1.0, 0.0), 0.25);
        assert!(numerical_range_sample(&h, 20, 1).unwrap().iter().all(|z| z.im.abs() <= 1e-12 * z.re));
        let b = perforated_b(C64::new(1.0, 1.0), 0.25);
        let sector = sector_angle(C64::new(1.0, 1.0), 0.0, 2, 0.0, SectorVariant::Theta0).unwrap();
        for z in numerical_range_sample(&b, 50, 7).unwrap() {
            assert!(sector.excess(z) <= 1e-12 * z.norm(), "{z}");
        }
        let e = eigs_window(&h, -0.1, 10.0, 1, 1e-12).unwrap();
        let v = &e.pairs[0].vector;
        let q = dotc(v, &h.system().matvec(v)) / dotc(v, &h.mass_free().matvec(v)).re;
        assert!((q - e.pairs[0].value).norm() <= 1e-9 * q.norm());
    }

    #[test]
    fn hermitian_decay_follows_lowest_eigenvalue() {
        let mesh = Arc::new(mesh_full_domain(&DomainSpec::unit_square(), 0.2).unwrap());
        let op = build_operator(mesh, BoundaryKind::Robin(C64::new(1.0, 0.0)), ZERO, minus_one()).unwrap();
        let grid = [0.0, 0.25, 0.5, 1.0];
        let c = semigroup_decay_curve(&op, &grid, 1e-8, 3).unwrap();
        assert!((c.points[0].norm - 1.0).abs() < 1e-12);
        let beta = c.spectral_abscissa;
        for p in &c.points[1..] {
            assert!((p.norm - (-beta * p.t).exp()).abs() <= 1e-4 * p.norm, "{p:?} vs {beta}");
        }
    }

    #[test]
    fn decay_curve_is_submultiplicative() {
        let b = perforated_b(C64::new(1.0, 1.0), 0.25);
        let c = semigroup_decay_curve(&b, &[0.0, 0.25, 0.5, 0.75], 1e-7, 5).unwrap();
        let n = |t| c.norm_at(t).unwrap();
        assert!(n(0.5) <= n(0.25) * n(0.25) * (1.0 + 1e-4));
        assert!(n(0.75) <= n(0.25) * n(0.5) * (1.0 + 1e-4));
        assert!(c.points.windows(2).all(|w| w[1].norm <= w[0].norm * (1.0 + 1e-6)));
    }

    #[test]
    fn imaginary_robin_is_rejected() {
        let mesh = Arc::new(mesh_full_domain(&DomainSpec::unit_square(), 0.25).unwrap());
        let op = build_operator(mesh, BoundaryKind::Robin(C64::new(0.0, 1.0)), ZERO, minus_one()).unwrap();
        assert!(semigroup_decay_curve(&op, &[0.0, 1.0], 1e-6, 1).is_err());
    }
}
