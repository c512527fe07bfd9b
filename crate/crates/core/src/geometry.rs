//! Perforated-domain geometry: boxes, the hole lattice, radius rules and the
//! strange-term constants of the homogenized operator.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Boundary condition carried by the holes (and, by default, the outer boundary).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
    /// `∂_ν u + α u = 0`, with `α ≠ 0` and `Re α ≥ 0`.
    Robin(Complex64),
}

impl BoundaryKind {
    pub fn robin(alpha: Complex64) -> Result<Self> {
        let bc = BoundaryKind::Robin(alpha);
        bc.validate()?;
        Ok(bc)
    }

    pub fn validate(&self) -> Result<()> {
        if let BoundaryKind::Robin(alpha) = self {
            if !(alpha.re.is_finite() && alpha.im.is_finite()) {
                return Err(Error::arg("Robin coefficient must be finite"));
            }
            if *alpha == Complex64::new(0.0, 0.0) {
                return Err(Error::arg("Robin coefficient must be nonzero"));
            }
            if alpha.re < 0.0 {
                return Err(Error::arg("Robin coefficient must have Re(alpha) >= 0"));
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> Option<Complex64> {
        match self {
            BoundaryKind::Robin(a) => Some(*a),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BoundaryKind::Dirichlet => "dirichlet",
            BoundaryKind::Neumann => "neumann",
            BoundaryKind::Robin(_) => "robin",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainShape {
    Rectangle,
    /// Long first axis, used by the decay experiments.
    Strip,
}

/// Axis-aligned box `[0, L_1] × … × [0, L_d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub dim: usize,
    pub extents: Vec<f64>,
    pub shape: DomainShape,
}

impl DomainSpec {
    pub fn new(extents: Vec<f64>, shape: DomainShape) -> Result<Self> {
        let dim = extents.len();
        if !(2..=3).contains(&dim) {
            return Err(Error::arg(format!("dimension must be 2 or 3, got {dim}")));
        }
        if extents.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(Error::arg("box extents must be positive"));
        }
        if shape == DomainShape::Strip && extents[0] < extents[1..].iter().cloned().fold(0.0, f64::max) {
            return Err(Error::arg("a strip must be longest along its first axis"));
        }
        Ok(Self { dim, extents, shape })
    }

    pub fn unit_square() -> Self {
        Self::new(vec![1.0, 1.0], DomainShape::Rectangle).unwrap()
    }

    pub fn strip(length: f64, width: f64) -> Result<Self> {
        Self::new(vec![length, width], DomainShape::Strip)
    }

    pub fn volume(&self) -> f64 {
        self.extents.iter().product()
    }

    pub fn diameter(&self) -> f64 {
        self.extents.iter().map(|l| l * l).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.extents).all(|(&xi, &l)| (0.0..=l).contains(&xi))
    }

    /// Distance from an interior point to the boundary of the box.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.extents)
            .map(|(&xi, &l)| xi.min(l - xi))
            .fold(f64::INFINITY, f64::min)
    }
}

/// The full perforation problem: box, period parameter, boundary condition
/// and hole-radius rule.
#[derive(Debug, Clone, PartialEq)]
pub struct PerforationSpec {
    pub domain: DomainSpec,
    pub epsilon: f64,
    pub bc: BoundaryKind,
    /// Exponent `p` of the Neumann rule `a = ε^p`.
    pub neumann_exponent: f64,
    /// Replaces the scaling rule; such runs are "off-scaling".
    pub radius_override: Option<f64>,
}

pub const DEFAULT_NEUMANN_EXPONENT: f64 = 2.0;

impl PerforationSpec {
    pub fn new(domain: DomainSpec, epsilon: f64, bc: BoundaryKind) -> Result<Self> {
        let spec = Self {
            domain,
            epsilon,
            bc,
            neumann_exponent: DEFAULT_NEUMANN_EXPONENT,
            radius_override: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_radius_override(mut self, radius: f64) -> Result<Self> {
        self.radius_override = Some(radius);
        self.validate()?;
        Ok(self)
    }

    pub fn with_neumann_exponent(mut self, p: f64) -> Result<Self> {
        self.neumann_exponent = p;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::arg(format!("epsilon must lie in (0,1), got {}", self.epsilon)));
        }
        self.bc.validate()?;
        if !(self.neumann_exponent > 1.0) {
            return Err(Error::arg("Neumann exponent must exceed 1"));
        }
        hole_radius(self).map(|_| ())
    }

    pub fn off_scaling(&self) -> bool {
        self.radius_override.is_some()
    }

    pub fn hole_radius(&self) -> f64 {
        hole_radius(self).expect("validated at construction")
    }

    pub fn centers(&self) -> Vec<Vec<f64>> {
        lattice_centers(&self.domain, self.epsilon)
    }

    pub fn cells(&self) -> Vec<CellGeometry> {
        let a = self.hole_radius();
        self.centers()
            .into_iter()
            .map(|center| CellGeometry {
                center,
                hole_radius: a,
                ball_radius: self.epsilon,
                cube_side: 2.0 * self.epsilon,
            })
            .collect()
    }

    /// Exact measure of the union of holes `|T_ε|`.
    pub fn hole_volume(&self) -> f64 {
        let d = self.domain.dim;
        let a = self.hole_radius();
        self.centers().len() as f64 * surface_area_unit_ball(d).unwrap() / d as f64 * a.powi(d as i32)
    }
}

/// One periodicity cell: hole `B_a(i)`, ball `B_ε(i)`, cube `i + ε[-1,1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGeometry {
    pub center: Vec<f64>,
    pub hole_radius: f64,
    pub ball_radius: f64,
    pub cube_side: f64,
}

/// Radius of the holes for the given boundary condition and dimension.
pub fn hole_radius(spec: &PerforationSpec) -> Result<f64> {
    let eps = spec.epsilon;
    let d = spec.domain.dim as f64;
    let a = match (spec.radius_override, spec.bc) {
        (Some(r), _) => r,
        (None, BoundaryKind::Dirichlet) if spec.domain.dim == 2 => (-1.0 / (eps * eps)).exp(),
        (None, BoundaryKind::Dirichlet) => eps.powf(d / (d - 2.0)),
        (None, BoundaryKind::Robin(_)) => eps.powf(d / (d - 1.0)),
        (None, BoundaryKind::Neumann) => eps.powf(spec.neumann_exponent),
    };
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Geometry(format!("hole radius {a:e} is not positive at epsilon={eps}")));
    }
    if a >= eps {
        return Err(Error::Geometry(format!(
            "hole radius {a} does not fit inside the cell of half-width {eps}"
        )));
    }
    Ok(a)
}

/// Points of `2εℤ^d` farther than `ε` from the boundary, sorted lexicographically.
pub fn lattice_centers(domain: &DomainSpec, epsilon: f64) -> Vec<Vec<f64>> {
    let step = 2.0 * epsilon;
    let slack = 1e-12 * domain.diameter();
    let axes: Vec<Vec<f64>> = domain
        .extents
        .iter()
        .map(|&l| {
            let k_max = (l / step).floor() as i64 + 1;
            (0..=k_max)
                .map(|k| k as f64 * step)
                .filter(|&x| x - epsilon > slack && (l - x) - epsilon > slack)
                .collect()
        })
        .collect();
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    if axes.iter().any(|a| a.is_empty()) {
        return Vec::new();
    }
    out
}

fn gamma_half_integer(two_x: u32) -> f64 {
    // Γ(two_x / 2) for two_x ≥ 1.
    let (mut g, mut k) = if two_x % 2 == 0 { (1.0, 2) } else { (PI.sqrt(), 1) };
    while k < two_x {
        g *= k as f64 / 2.0;
        k += 2;
    }
    g
}

/// Surface area `S_d = d π^{d/2} / Γ(d/2 + 1)` of the unit sphere in `ℝ^d`.
pub fn surface_area_unit_ball(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::arg(format!("surface area needs d >= 2, got {d}")));
    }
    let df = d as f64;
    Ok(df * PI.powf(df / 2.0) / gamma_half_integer(d as u32 + 2))
}

/// Constant zero-order term of the homogenized operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrangeTerm {
    pub mu: Complex64,
    pub bc: BoundaryKind,
    pub dim: usize,
    pub surface_area: f64,
}

pub fn strange_term(bc: BoundaryKind, d: usize) -> Result<StrangeTerm> {
    bc.validate()?;
    let s_d = surface_area_unit_ball(d)?;
    let cell = 2f64.powi(d as i32);
    let mu = match bc {
        BoundaryKind::Dirichlet if d == 2 => Complex64::new(PI / 2.0, 0.0),
        BoundaryKind::Dirichlet => Complex64::new((d as f64 - 2.0) * s_d / cell, 0.0),
        BoundaryKind::Neumann => Complex64::new(0.0, 0.0),
        BoundaryKind::Robin(alpha) => alpha * s_d / cell,
    };
    Ok(StrangeTerm {
        mu,
        bc,
        dim: d,
        surface_area: s_d,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Hole,
    Annulus,
    Bulk,
    Outside,
}

/// Tags a point; ties on a circle go to the inner region.
pub fn classify_point(x: &[f64], spec: &PerforationSpec, centers: &[Vec<f64>]) -> Region {
    if !spec.domain.contains(x) {
        return Region::Outside;
    }
    let a = spec.hole_radius();
    let eps = spec.epsilon;
    let mut region = Region::Bulk;
    for c in centers {
        let r2: f64 = c.iter().zip(x).map(|(ci, xi)| (xi - ci).powi(2)).sum();
        if r2 <= a * a {
            return Region::Hole;
        }
        if r2 <= eps * eps {
            region = Region::Annulus;
        }
    }
    region
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(eps: f64, bc: BoundaryKind, dim: usize) -> PerforationSpec {
        let domain = DomainSpec::new(vec![1.0; dim], DomainShape::Rectangle).unwrap();
        PerforationSpec::new(domain, eps, bc).unwrap()
    }

    #[test]
    fn radius_rules() {
        let a = spec(0.5, BoundaryKind::Dirichlet, 2).hole_radius();
        assert!((a - (-4.0f64).exp()).abs() < 1e-18);
        assert!((a - 1.8316e-2).abs() < 1e-6);
        let a = spec(0.1, BoundaryKind::Dirichlet, 3).hole_radius();
        assert!((a - 1e-3).abs() < 1e-15);
        let a = spec(0.25, BoundaryKind::Robin(Complex64::new(1.0, 0.0)), 2).hole_radius();
        assert_eq!(a, 0.0625);
        let a = spec(0.25, BoundaryKind::Neumann, 2).hole_radius();
        assert_eq!(a, 0.0625);
    }

    #[test]
    fn oversize_radius_is_a_geometry_error() {
        let domain = DomainSpec::unit_square();
        let err = PerforationSpec::new(domain, 0.25, BoundaryKind::Neumann)
            .unwrap()
            .with_radius_override(0.3)
            .unwrap_err();
        assert!(matches!(err, Error::Geometry(_)));
    }

    #[test]
    fn robin_validation() {
        assert!(BoundaryKind::robin(Complex64::new(0.0, 0.0)).is_err());
        assert!(BoundaryKind::robin(Complex64::new(-1.0, 1.0)).is_err());
        assert!(BoundaryKind::robin(Complex64::new(0.0, 1.0)).is_ok());
        let domain = DomainSpec::unit_square();
        assert!(PerforationSpec::new(domain.clone(), 1.5, BoundaryKind::Neumann).is_err());
        assert!(PerforationSpec::new(domain, 0.0, BoundaryKind::Neumann).is_err());
    }

    #[test]
    fn lattice_examples() {
        let sq = DomainSpec::unit_square();
        assert!(lattice_centers(&sq, 0.5).is_empty());
        assert_eq!(lattice_centers(&sq, 0.25), vec![vec![0.5, 0.5]]);
        let c = lattice_centers(&sq, 0.125);
        assert_eq!(c.len(), 9);
        let expected: Vec<Vec<f64>> = [0.25, 0.5, 0.75]
            .iter()
            .flat_map(|&x| [0.25, 0.5, 0.75].iter().map(move |&y| vec![x, y]))
            .collect();
        assert_eq!(c, expected);
    }

    #[test]
    fn lattice_separation_and_margin() {
        let strip = DomainSpec::strip(8.0, 1.0).unwrap();
        for eps in [0.3, 0.25, 0.1, 1.0 / 16.0, 0.07] {
            let c = lattice_centers(&strip, eps);
            for (k, p) in c.iter().enumerate() {
                assert!(strip.boundary_distance(p) > eps);
                for q in &c[k + 1..] {
                    let d2: f64 = p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum();
                    assert!(d2.sqrt() >= 2.0 * eps * (1.0 - 1e-12));
                }
            }
            let mut sorted = c.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(sorted, c);
        }
    }

    #[test]
    fn surface_areas() {
        assert!((surface_area_unit_ball(2).unwrap() - 2.0 * PI).abs() < 1e-14);
        assert!((surface_area_unit_ball(3).unwrap() - 4.0 * PI).abs() < 1e-14);
        assert!((surface_area_unit_ball(4).unwrap() - 2.0 * PI * PI).abs() < 1e-13);
        // S_5 = 8π²/3
        assert!((surface_area_unit_ball(5).unwrap() - 8.0 * PI * PI / 3.0).abs() < 1e-12);
        assert!(surface_area_unit_ball(1).is_err());
    }

    #[test]
    fn strange_terms() {
        let mu = strange_term(BoundaryKind::Dirichlet, 2).unwrap().mu;
        assert_eq!(mu, Complex64::new(PI / 2.0, 0.0));
        for d in 2..=4 {
            assert_eq!(strange_term(BoundaryKind::Neumann, d).unwrap().mu, Complex64::new(0.0, 0.0));
        }
        let one = BoundaryKind::Robin(Complex64::new(1.0, 0.0));
        let r2 = strange_term(one, 2).unwrap().mu;
        assert!((r2.re - PI / 2.0).abs() < 1e-15 && r2.im == 0.0);
        let d3 = strange_term(BoundaryKind::Dirichlet, 3).unwrap().mu;
        assert!((d3.re - PI / 2.0).abs() < 1e-15);
        assert!((d3 - r2).norm() < 1e-15);
    }

    #[test]
    fn robin_cell_identity() {
        // μ_α (2ε)^d = α S_d a^{d-1} with a = ε^{d/(d-1)}
        let alpha = Complex64::new(0.7, -0.3);
        for d in [2usize, 3] {
            for k in 2..8 {
                let eps = 0.5f64.powi(k);
                let s = spec(eps, BoundaryKind::Robin(alpha), d);
                let a = s.hole_radius();
                let st = strange_term(s.bc, d).unwrap();
                let lhs = st.mu * (2.0 * eps).powi(d as i32);
                let rhs = alpha * st.surface_area * a.powi(d as i32 - 1);
                assert!((lhs - rhs).norm() <= 4.0 * f64::EPSILON * rhs.norm());
            }
        }
    }

    #[test]
    fn radius_ratio_decreases() {
        for bc in [BoundaryKind::Dirichlet, BoundaryKind::Neumann, BoundaryKind::Robin(Complex64::new(1.0, 1.0))] {
            for d in [2usize, 3] {
                let mut last = f64::INFINITY;
                // e^{-1/ε²} underflows at ε = 1/32.
                for k in 2..5 {
                    let eps = 0.5f64.powi(k);
                    let ratio = spec(eps, bc, d).hole_radius() / eps;
                    assert!(ratio < last);
                    last = ratio;
                }
            }
        }
    }

    #[test]
    fn classification() {
        let s = spec(0.25, BoundaryKind::Robin(Complex64::new(1.0, 0.0)), 2);
        let c = s.centers();
        let a = s.hole_radius();
        assert_eq!(classify_point(&[0.5, 0.5], &s, &c), Region::Hole);
        assert_eq!(classify_point(&[0.5, 0.5 + (a + 0.25) / 2.0], &s, &c), Region::Annulus);
        assert_eq!(classify_point(&[0.5, 0.5 + a], &s, &c), Region::Hole);
        assert_eq!(classify_point(&[0.5, 0.75], &s, &c), Region::Annulus);
        assert_eq!(classify_point(&[0.05, 0.05], &s, &c), Region::Bulk);
        assert_eq!(classify_point(&[1.5, 0.5], &s, &c), Region::Outside);
    }
}
