//! P1 finite-element operators on triangulations and the discrete
//! identification maps between perforated and full meshes.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryKind, PerforationSpec};
use crate::mesh::{interpolate, Marker, Mesh, MeshPair};
use crate::quadrature::{map_point, signed_area, TRI_DEGREE2, TRI_DEGREE5};
use crate::sparse::{norm_m, CsrMatrix, Symmetry, TripletBuilder, C64, ONE, ZERO};

/// Cosh weight `ω(x) = cosh|x − x_0|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSpec {
    pub center: [f64; 2],
}

impl WeightSpec {
    pub fn omega(&self, x: [f64; 2]) -> f64 {
        (x[0] - self.center[0]).hypot(x[1] - self.center[1]).cosh()
    }
}

/// Which boundary edges a boundary mass matrix integrates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundarySelector {
    Outer,
    Hole(usize),
    AllHoles,
    All,
}

impl BoundarySelector {
    fn accepts(&self, m: Marker) -> bool {
        match (self, m) {
            (BoundarySelector::All, _) => true,
            (BoundarySelector::Outer, Marker::Outer) => true,
            (BoundarySelector::AllHoles, Marker::Hole(_)) => true,
            (BoundarySelector::Hole(k), Marker::Hole(j)) => *k == j,
            _ => false,
        }
    }
}

fn element(mesh: &Mesh, t: usize) -> Result<([[f64; 2]; 3], f64)> {
    let p = mesh.corners(t);
    let area = signed_area(p);
    let scale = (p[1][0] - p[0][0]).hypot(p[1][1] - p[0][1]).powi(2);
    if !(area > 1e-14 * scale) {
        return Err(Error::Assembly(format!("degenerate triangle {t} (area {area:e})")));
    }
    Ok((p, area))
}

/// Gradients of the barycentric coordinates.
fn gradients(p: [[f64; 2]; 3], area: f64) -> [[f64; 2]; 3] {
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let a = p[(i + 1) % 3];
        let b = p[(i + 2) % 3];
        g[i] = [(a[1] - b[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)];
    }
    g
}

fn assemble_elementwise(mesh: &Mesh, mut local: impl FnMut(usize, [[f64; 2]; 3], f64) -> [[f64; 3]; 3]) -> Result<CsrMatrix> {
    let n = mesh.n_vertices();
    let mut b = TripletBuilder::new(n, n);
    for t in 0..mesh.n_triangles() {
        let (p, area) = element(mesh, t)?;
        let k = local(t, p, area);
        let tri = mesh.triangles[t];
        for i in 0..3 {
            for j in 0..3 {
                b.push_real(tri[i], tri[j], k[i][j]);
            }
        }
    }
    Ok(b.build(Symmetry::Hermitian))
}

fn stiffness_local(p: [[f64; 2]; 3], area: f64, weight: f64) -> [[f64; 3]; 3] {
    let g = gradients(p, area);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = weight * area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
        }
    }
    k
}

fn mass_local(area: f64) -> [[f64; 3]; 3] {
    let mut m = [[area / 12.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = area / 6.0;
    }
    m
}

/// `∫ ∇u·∇v`.
pub fn assemble_stiffness(mesh: &Mesh) -> Result<CsrMatrix> {
    assemble_elementwise(mesh, |_, p, area| stiffness_local(p, area, 1.0))
}

/// `∫ u v`.
pub fn assemble_mass(mesh: &Mesh) -> Result<CsrMatrix> {
    assemble_elementwise(mesh, |_, _, area| mass_local(area))
}

/// Mass matrix restricted to the triangles accepted by `keep`.
pub fn assemble_mass_on(mesh: &Mesh, keep: impl Fn(usize) -> bool) -> Result<CsrMatrix> {
    assemble_elementwise(mesh, |t, _, area| if keep(t) { mass_local(area) } else { [[0.0; 3]; 3] })
}

/// `∫ ω u v`, three-point rule per triangle.
pub fn assemble_weighted_mass(mesh: &Mesh, w: &WeightSpec) -> Result<CsrMatrix> {
    assemble_elementwise(mesh, |_, p, area| {
        let mut m = [[0.0; 3]; 3];
        for (bary, wq) in TRI_DEGREE2 {
            let om = w.omega(map_point(p, bary));
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += area * wq * om * bary[i] * bary[j];
                }
            }
        }
        m
    })
}

/// `∫ ω ∇u·∇v`, three-point rule for the weight.
pub fn assemble_weighted_stiffness(mesh: &Mesh, w: &WeightSpec) -> Result<CsrMatrix> {
    assemble_elementwise(mesh, |_, p, area| {
        let mean: f64 = TRI_DEGREE2.iter().map(|&(bary, wq)| wq * w.omega(map_point(p, bary))).sum();
        stiffness_local(p, area, mean)
    })
}

/// `∫_Γ u v dS` over the selected boundary edges.
pub fn assemble_boundary_mass(mesh: &Mesh, sel: BoundarySelector) -> Result<CsrMatrix> {
    if let BoundarySelector::Hole(k) = sel {
        if k >= mesh.holes.len() {
            return Err(Error::Assembly(format!("unknown marker hole:{k}")));
        }
    }
    let n = mesh.n_vertices();
    let mut b = TripletBuilder::new(n, n);
    for e in mesh.boundary_edges.iter().filter(|e| sel.accepts(e.marker)) {
        let [i, j] = e.nodes;
        let (p, q) = (mesh.vertices[i], mesh.vertices[j]);
        let len = (p[0] - q[0]).hypot(p[1] - q[1]);
        b.push_real(i, i, len / 3.0);
        b.push_real(j, j, len / 3.0);
        b.push_real(i, j, len / 6.0);
        b.push_real(j, i, len / 6.0);
    }
    Ok(b.build(Symmetry::Hermitian))
}

/// `∫ f φ_i`, seven-point rule.
pub fn load_vector(mesh: &Mesh, f: &dyn Fn([f64; 2]) -> C64) -> Result<Vec<C64>> {
    let mut out = vec![ZERO; mesh.n_vertices()];
    for t in 0..mesh.n_triangles() {
        let (p, area) = element(mesh, t)?;
        let tri = mesh.triangles[t];
        for (bary, wq) in TRI_DEGREE5 {
            let fx = f(map_point(p, bary)) * (area * wq);
            for i in 0..3 {
                out[tri[i]] += fx * bary[i];
            }
        }
    }
    Ok(out)
}

/// P1 interpolant of a closed-form function.
pub fn nodal_values(mesh: &Mesh, f: &dyn Fn([f64; 2]) -> C64) -> Vec<C64> {
    mesh.vertices.iter().map(|&x| f(x)).collect()
}

/// The discrete operator `K + (c + 1 + μ)·M + α_hole·R_hole + α_outer·R_outer`
/// with Dirichlet vertices eliminated. All vectors handed to the solvers live
/// on the free (non-Dirichlet) vertices.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub mesh: Arc<Mesh>,
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    pub r_hole: CsrMatrix,
    pub r_outer: CsrMatrix,
    pub bc_hole: BoundaryKind,
    pub bc_outer: BoundaryKind,
    pub shift: C64,
    pub mu: C64,
    pub dirichlet_nodes: Vec<usize>,
    free: Vec<usize>,
    free_index: Vec<Option<usize>>,
    system: CsrMatrix,
    mass_free: CsrMatrix,
}

/// Operator with the same condition on holes and outer boundary.
pub fn build_operator(mesh: Arc<Mesh>, bc: BoundaryKind, mu: C64, shift: C64) -> Result<DiscreteOperator> {
    build_operator_mixed(mesh, bc, bc, mu, shift)
}

/// Operator whose outer boundary carries its own condition.
pub fn build_operator_mixed(
    mesh: Arc<Mesh>,
    bc_hole: BoundaryKind,
    bc_outer: BoundaryKind,
    mu: C64,
    shift: C64,
) -> Result<DiscreteOperator> {
    bc_hole.validate()?;
    bc_outer.validate()?;
    if !(mu.re.is_finite() && mu.im.is_finite() && shift.re.is_finite() && shift.im.is_finite()) {
        return Err(Error::arg("strange term and shift must be finite"));
    }
    let stiffness = assemble_stiffness(&mesh)?;
    let mass = assemble_mass(&mesh)?;
    let r_hole = assemble_boundary_mass(&mesh, BoundarySelector::AllHoles)?;
    let r_outer = assemble_boundary_mass(&mesh, BoundarySelector::Outer)?;
    let n = mesh.n_vertices();
    let mut is_dir = vec![false; n];
    for e in &mesh.boundary_edges {
        let bc = match e.marker {
            Marker::Outer => bc_outer,
            Marker::Hole(_) => bc_hole,
        };
        if bc == BoundaryKind::Dirichlet {
            is_dir[e.nodes[0]] = true;
            is_dir[e.nodes[1]] = true;
        }
    }
    let dirichlet_nodes: Vec<usize> = (0..n).filter(|&i| is_dir[i]).collect();
    let free: Vec<usize> = (0..n).filter(|&i| !is_dir[i]).collect();
    let mut free_index = vec![None; n];
    for (k, &i) in free.iter().enumerate() {
        free_index[i] = Some(k);
    }
    let mut terms = vec![(ONE, &stiffness), (shift + 1.0 + mu, &mass)];
    if let Some(a) = bc_hole.alpha() {
        terms.push((a, &r_hole));
    }
    if let Some(a) = bc_outer.alpha() {
        terms.push((a, &r_outer));
    }
    let full = CsrMatrix::lincomb(&terms)?;
    let system = full.submatrix(&free, &free);
    let mass_free = mass.submatrix(&free, &free);
    Ok(DiscreteOperator {
        mesh,
        stiffness,
        mass,
        r_hole,
        r_outer,
        bc_hole,
        bc_outer,
        shift,
        mu,
        dirichlet_nodes,
        free,
        free_index,
        system,
        mass_free,
    })
}

impl DiscreteOperator {
    /// Same assembly with another shift, reusing the element matrices.
    pub fn with_shift(&self, shift: C64) -> Result<Self> {
        self.recompose(self.mu, shift)
    }

    pub fn with_mu(&self, mu: C64) -> Result<Self> {
        self.recompose(mu, self.shift)
    }

    fn recompose(&self, mu: C64, shift: C64) -> Result<Self> {
        let mut terms = vec![(ONE, &self.stiffness), (shift + 1.0 + mu, &self.mass)];
        if let Some(a) = self.bc_hole.alpha() {
            terms.push((a, &self.r_hole));
        }
        if let Some(a) = self.bc_outer.alpha() {
            terms.push((a, &self.r_outer));
        }
        let full = CsrMatrix::lincomb(&terms)?;
        let mut out = self.clone();
        out.system = full.submatrix(&self.free, &self.free);
        out.mu = mu;
        out.shift = shift;
        Ok(out)
    }

    pub fn zero_order(&self) -> C64 {
        self.shift + 1.0 + self.mu
    }

    /// System matrix on the free vertices.
    pub fn system(&self) -> &CsrMatrix {
        &self.system
    }

    /// Mass matrix on the free vertices.
    pub fn mass_free(&self) -> &CsrMatrix {
        &self.mass_free
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free
    }

    pub fn free_index(&self, vertex: usize) -> Option<usize> {
        self.free_index[vertex]
    }

    pub fn is_hermitian(&self) -> bool {
        self.system.symmetry() == Symmetry::Hermitian
    }

    /// Free-vertex vector to a nodal field, zero on Dirichlet vertices.
    pub fn expand(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.mesh.n_vertices()];
        for (k, &i) in self.free.iter().enumerate() {
            out[i] = x[k];
        }
        out
    }

    pub fn restrict(&self, u: &[C64]) -> Vec<C64> {
        self.free.iter().map(|&i| u[i]).collect()
    }

    /// Right-hand side `∫ f φ_i` on the free vertices.
    pub fn load(&self, f: &dyn Fn([f64; 2]) -> C64) -> Result<Vec<C64>> {
        Ok(self.restrict(&load_vector(&self.mesh, f)?))
    }
}

/// Harmonic extension of a perforated-mesh field into the filled holes.
#[derive(Debug, Clone)]
pub struct HarmonicExtension {
    pub values: Vec<C64>,
    /// Largest per-cell ratio `‖∇Tu‖²_{hole} / ‖u‖²_{H¹(cell ∖ hole)}`.
    pub energy_constant: f64,
}

/// Solves the discrete Laplace equation in every hole with the ring values
/// of `u` as Dirichlet data; values outside the holes are copied.
pub fn harmonic_extension(u: &[C64], pair: &MeshPair, spec: &PerforationSpec) -> Result<HarmonicExtension> {
    let perf = &pair.perforated;
    let full = &pair.full;
    let np = perf.n_vertices();
    if u.len() != np || full.n_vertices() < np || full.vertices[..np] != perf.vertices[..] {
        return Err(Error::Assembly("mesh pairing mismatch".into()));
    }
    if perf.holes.len() != full.holes.len() {
        return Err(Error::Assembly("mesh pairing mismatch: hole counts differ".into()));
    }
    let k_full = assemble_stiffness(full)?;
    let mut values = vec![ZERO; full.n_vertices()];
    values[..np].copy_from_slice(u);
    let mut local = vec![usize::MAX; full.n_vertices()];
    for hole in &full.holes {
        let inner = &hole.interior;
        for (k, &v) in inner.iter().enumerate() {
            if v < np {
                return Err(Error::Assembly("hole interior overlaps the perforated mesh".into()));
            }
            local[v] = k;
        }
        let m = inner.len();
        let mut a = DMatrix::<f64>::zeros(m, m);
        let mut rhs = DMatrix::<C64>::zeros(m, 1);
        for (k, &v) in inner.iter().enumerate() {
            for (j, kv) in k_full.row(v) {
                if local[j] != usize::MAX && inner.get(local[j]) == Some(&j) {
                    a[(k, local[j])] += kv.re;
                } else if j < np {
                    rhs[(k, 0)] -= kv * u[j];
                } else {
                    return Err(Error::Assembly("hole interior couples to another hole".into()));
                }
            }
        }
        let chol = a
            .cholesky()
            .ok_or_else(|| Error::Assembly("hole Laplacian is not positive definite".into()))?;
        let l = chol.l();
        let solve_real = |b: DVector<f64>| -> DVector<f64> {
            let y = l.solve_lower_triangular(&b).expect("nonsingular");
            l.transpose().solve_upper_triangular(&y).expect("nonsingular")
        };
        let re = solve_real(DVector::from_iterator(m, rhs.iter().map(|z| z.re)));
        let im = solve_real(DVector::from_iterator(m, rhs.iter().map(|z| z.im)));
        for (k, &v) in inner.iter().enumerate() {
            values[v] = C64::new(re[k], im[k]);
        }
        for &v in inner {
            local[v] = usize::MAX;
        }
    }
    let energy_constant = extension_energy_constant(u, &values, pair, spec);
    Ok(HarmonicExtension { values, energy_constant })
}

fn element_energy(mesh: &Mesh, t: usize, u: &[C64], with_mass: bool) -> f64 {
    let p = mesh.corners(t);
    let area = signed_area(p);
    let tri = mesh.triangles[t];
    let k = stiffness_local(p, area, 1.0);
    let m = mass_local(area);
    let mut e = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let w = if with_mass { k[i][j] + m[i][j] } else { k[i][j] };
            e += w * (u[tri[i]].conj() * u[tri[j]]).re;
        }
    }
    e
}

fn extension_energy_constant(u: &[C64], ext: &[C64], pair: &MeshPair, spec: &PerforationSpec) -> f64 {
    let eps = spec.epsilon;
    let nh = pair.full.holes.len();
    let mut hole_energy = vec![0.0; nh];
    for (t, h) in pair.full.triangle_hole.iter().enumerate() {
        if let Some(h) = h {
            hole_energy[*h] += element_energy(&pair.full, t, ext, false);
        }
    }
    let mut cell_norm = vec![0.0; nh];
    let perf = &pair.perforated;
    for t in 0..perf.n_triangles() {
        let p = perf.corners(t);
        let c = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
        for (h, hole) in perf.holes.iter().enumerate() {
            if (c[0] - hole.center[0]).abs() < eps && (c[1] - hole.center[1]).abs() < eps {
                cell_norm[h] += element_energy(perf, t, u, true);
            }
        }
    }
    hole_energy
        .iter()
        .zip(&cell_norm)
        .filter(|(_, &d)| d > 0.0)
        .map(|(&e, &d)| e / d)
        .fold(0.0, f64::max)
}

/// Discrete `J_ε`: extension by zero of a perforated field onto the filled mesh.
pub fn extend_by_zero(u: &[C64], pair: &MeshPair) -> Vec<C64> {
    let mut out = vec![ZERO; pair.full.n_vertices()];
    out[..u.len()].copy_from_slice(u);
    out
}

/// Discrete `I_ε`: restriction of a full-mesh field to the perforated mesh.
pub fn restrict_to_perforated(u: &[C64], pair: &MeshPair) -> Vec<C64> {
    u[..pair.perforated.n_vertices()].to_vec()
}

/// `∫_{T ∩ holes} |u|²` with every triangle clipped against the convex hole
/// polygons; exact for P1 fields.
pub fn hole_l2_norm_sq(mesh: &Mesh, u: &[C64], polygons: &[Vec<[f64; 2]>]) -> f64 {
    let boxes: Vec<[f64; 4]> = polygons.iter().map(|p| bbox(p)).collect();
    let mut total = 0.0;
    for t in 0..mesh.n_triangles() {
        let p = mesh.corners(t);
        let tb = bbox(&p);
        let tri = mesh.triangles[t];
        let area = signed_area(p);
        if area <= 0.0 {
            continue;
        }
        for (poly, pb) in polygons.iter().zip(&boxes) {
            if tb[2] < pb[0] || pb[2] < tb[0] || tb[3] < pb[1] || pb[3] < tb[1] {
                continue;
            }
            let piece = clip_convex(&p, poly);
            if piece.len() < 3 {
                continue;
            }
            // Fan triangulation of the convex piece, degree-2 rule on |u_h|².
            for k in 1..piece.len() - 1 {
                let sub = [piece[0], piece[k], piece[k + 1]];
                let sa = signed_area(sub);
                if sa <= 0.0 {
                    continue;
                }
                for (bary, wq) in TRI_DEGREE2 {
                    let x = map_point(sub, bary);
                    let l = crate::mesh::barycentric_coords(p, x);
                    let val = u[tri[0]] * l[0] + u[tri[1]] * l[1] + u[tri[2]] * l[2];
                    total += sa * wq * val.norm_sqr();
                }
            }
        }
    }
    total
}

fn bbox(p: &[[f64; 2]]) -> [f64; 4] {
    let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for q in p {
        b[0] = b[0].min(q[0]);
        b[1] = b[1].min(q[1]);
        b[2] = b[2].max(q[0]);
        b[3] = b[3].max(q[1]);
    }
    b
}

/// Sutherland–Hodgman clipping of `subject` against a counterclockwise
/// convex polygon.
fn clip_convex(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = subject.to_vec();
    let n = clip.len();
    for k in 0..n {
        if out.is_empty() {
            break;
        }
        let a = clip[k];
        let b = clip[(k + 1) % n];
        let side = |p: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        let input = std::mem::take(&mut out);
        for i in 0..input.len() {
            let cur = input[i];
            let prev = input[(i + input.len() - 1) % input.len()];
            let (sc, sp) = (side(cur), side(prev));
            if sc >= 0.0 {
                if sp < 0.0 {
                    out.push(intersect(prev, cur, sp, sc));
                }
                out.push(cur);
            } else if sp >= 0.0 {
                out.push(intersect(prev, cur, sp, sc));
            }
        }
    }
    out
}

fn intersect(p: [f64; 2], q: [f64; 2], sp: f64, sq: f64) -> [f64; 2] {
    let t = sp / (sp - sq);
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

/// Hole polygons of a mesh, counterclockwise.
pub fn hole_polygons(mesh: &Mesh) -> Vec<Vec<[f64; 2]>> {
    mesh.holes.iter().map(|h| h.polygon(&mesh.vertices)).collect()
}

/// `(‖u_perf − Π u_full‖²_{L²(Ω_ε)} + ‖u_full‖²_{L²(T_ε)})^{1/2}`, with `Π` the
/// nodal interpolation onto the perforated mesh and `T_ε` the hole polygons
/// of the perforated mesh.
pub fn l2_defect(u_perf: &[C64], perf: &Mesh, u_full: &[C64], full: &Mesh) -> Result<f64> {
    let np = perf.n_vertices();
    let pi_u: Vec<C64> = if full.n_vertices() >= np && full.vertices[..np] == perf.vertices[..] {
        u_full[..np].to_vec()
    } else {
        interpolate(u_full, full, perf)
    };
    let e: Vec<C64> = u_perf.iter().zip(&pi_u).map(|(a, b)| a - b).collect();
    let m = assemble_mass(perf)?;
    let outside = norm_m(&m, &e).powi(2);
    let inside = hole_l2_norm_sq(full, u_full, &hole_polygons(perf));
    Ok((outside + inside).sqrt())
}

/// Largest `‖f‖_{L²(T_ε)}` over random nodal fields normalized in the
/// discrete `H¹` norm.
pub fn ji_defect_estimate(full: &Mesh, spec: &PerforationSpec, n_samples: usize, seed: u64) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::arg("n_samples must be at least 1"));
    }
    let polygons = spec_polygons(full, spec);
    if polygons.is_empty() {
        return Ok(0.0);
    }
    let h1 = CsrMatrix::lincomb(&[(ONE, &assemble_stiffness(full)?), (ONE, &assemble_mass(full)?)])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..n_samples {
        let f: Vec<C64> = (0..full.n_vertices())
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        best = best.max(ji_ratio(full, &h1, &f, &polygons));
    }
    Ok(best)
}

/// `‖f‖_{L²(T_ε)} / ‖f‖_{H¹}` for one field.
pub fn ji_ratio(full: &Mesh, h1: &CsrMatrix, f: &[C64], polygons: &[Vec<[f64; 2]>]) -> f64 {
    let norm = norm_m(h1, f);
    if norm == 0.0 {
        return 0.0;
    }
    hole_l2_norm_sq(full, f, polygons).sqrt() / norm
}

/// Hole polygons from the mesh when it carries them, otherwise inscribed
/// regular polygons at the lattice centers.
pub fn spec_polygons(mesh: &Mesh, spec: &PerforationSpec) -> Vec<Vec<[f64; 2]>> {
    if !mesh.holes.is_empty() {
        return hole_polygons(mesh);
    }
    let centers = spec.centers();
    if centers.is_empty() {
        return Vec::new();
    }
    let a = spec.hole_radius();
    let n = crate::mesh::ring_segments(crate::mesh::MeshOptions::default().tol_rel);
    centers
        .iter()
        .map(|c| {
            (0..n)
                .map(|j| {
                    let t = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                    [c[0] + a * t.cos(), c[1] + a * t.sin()]
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;
    use crate::mesh::{mesh_full_domain, mesh_perforated_pair, BoundaryEdge, MeshOptions};

    fn reference_triangle() -> Mesh {
        Mesh {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            boundary_edges: vec![
                BoundaryEdge {
                    nodes: [0, 1],
                    marker: Marker::Outer,
                },
                BoundaryEdge {
                    nodes: [1, 2],
                    marker: Marker::Outer,
                },
                BoundaryEdge {
                    nodes: [2, 0],
                    marker: Marker::Outer,
                },
            ],
            holes: vec![],
            triangle_hole: vec![None],
            h_max: 1.0,
            h_min: 1.0,
        }
    }

    fn robin_pair(eps: f64) -> (PerforationSpec, MeshPair) {
        let spec = PerforationSpec::new(DomainSpec::unit_square(), eps, BoundaryKind::Robin(C64::new(1.0, 1.0))).unwrap();
        let pair = mesh_perforated_pair(&spec, 0.0625, 1.5, &MeshOptions::default()).unwrap();
        (spec, pair)
    }

    #[test]
    fn reference_element_matrices() {
        let m = reference_triangle();
        let k = assemble_stiffness(&m).unwrap().to_dense();
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        let mm = assemble_mass(&m).unwrap().to_dense();
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[(i, j)].re - expect[i][j]).abs() < 1e-15);
                let mass = 0.5 / 12.0 * if i == j { 2.0 } else { 1.0 };
                assert!((mm[(i, j)].re - mass).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn edge_mass_and_perimeter() {
        let m = reference_triangle();
        let r = assemble_boundary_mass(&m, BoundarySelector::Outer).unwrap();
        let ones = vec![ONE; 3];
        let perimeter = 2.0 + 2f64.sqrt();
        assert!((r.quad_form(&ones).re - perimeter).abs() < 1e-14);
        let r01 = r.get(0, 1).re;
        assert!((r01 - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(assemble_boundary_mass(&m, BoundarySelector::AllHoles).unwrap().nnz(), 0);
        assert!(assemble_boundary_mass(&m, BoundarySelector::Hole(0)).is_err());
    }

    #[test]
    fn row_sums() {
        let m = mesh_full_domain(&DomainSpec::unit_square(), 0.125).unwrap();
        let k = assemble_stiffness(&m).unwrap();
        let ones = vec![ONE; m.n_vertices()];
        assert!(k.matvec(&ones).iter().all(|v| v.norm() < 1e-13));
        let mass = assemble_mass(&m).unwrap();
        let dual = mass.matvec(&ones);
        let total: f64 = dual.iter().map(|v| v.re).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn weighted_mass_properties() {
        let m = mesh_full_domain(&DomainSpec::unit_square(), 0.125).unwrap();
        let plain = assemble_mass(&m).unwrap();
        let far = assemble_weighted_mass(&m, &WeightSpec { center: [10.0, 10.0] }).unwrap();
        for (i, j, v) in plain.triplets() {
            assert!(far.get(i, j).re >= v.re);
        }
        // ∫ cosh|x - x0| over the unit square, x0 at a corner, by a fine 2-D rule
        let w = WeightSpec { center: [0.0, 0.0] };
        let wm = assemble_weighted_mass(&m, &w).unwrap();
        let ones = vec![ONE; m.n_vertices()];
        let n = 400;
        let mut exact = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = [(i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64];
                exact += w.omega(x) / (n * n) as f64;
            }
        }
        assert!((wm.quad_form(&ones).re - exact).abs() < 1e-4 * exact);
    }

    #[test]
    fn weighted_mass_near_center_matches_mass() {
        let mut m = reference_triangle();
        for v in &mut m.vertices {
            v[0] *= 1e-4;
            v[1] *= 1e-4;
        }
        let plain = assemble_mass(&m).unwrap();
        let wm = assemble_weighted_mass(&m, &WeightSpec { center: [0.0, 0.0] }).unwrap();
        for (i, j, v) in plain.triplets() {
            assert!((wm.get(i, j).re - v.re).abs() <= 1e-6 * v.re);
        }
    }

    #[test]
    fn neumann_constants_and_dirichlet_set() {
        let (_, pair) = robin_pair(0.25);
        let mesh = Arc::new(pair.perforated.clone());
        let mu = C64::new(0.3, 0.1);
        let c = C64::new(0.5, 0.0);
        let op = build_operator(mesh.clone(), BoundaryKind::Neumann, mu, c).unwrap();
        let ones = vec![ONE; op.n_free()];
        let lhs = op.system().matvec(&ones);
        let rhs = op.mass_free().matvec(&ones);
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a - b * (c + 1.0 + mu)).norm() < 1e-12);
        }
        let dir = build_operator(mesh.clone(), BoundaryKind::Dirichlet, ZERO, ZERO).unwrap();
        assert_eq!(dir.dirichlet_nodes, mesh.boundary_vertices(|_| true));
        assert_eq!(dir.n_free() + dir.dirichlet_nodes.len(), mesh.n_vertices());
    }

    #[test]
    fn robin_structure() {
        let (_, pair) = robin_pair(0.25);
        let alpha = C64::new(1.0, 1.0);
        let op = build_operator(Arc::new(pair.perforated), BoundaryKind::Robin(alpha), ZERO, ZERO).unwrap();
        assert_eq!(op.system().symmetry(), Symmetry::ComplexSymmetric);
        assert!(op.system().verify_symmetry(0.0));
        assert!(!op.is_hermitian());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u: Vec<C64> = (0..op.n_free()).map(|_| C64::new(rng.gen(), rng.gen())).collect();
        let r = CsrMatrix::lincomb(&[(ONE, &op.r_hole), (ONE, &op.r_outer)]).unwrap();
        let form = op.system().quad_form(&u);
        let ur = r.quad_form(&u).re;
        let uk = op.stiffness.quad_form(&u).re;
        let um = op.mass.quad_form(&u).re;
        assert!((form.im - alpha.im * ur).abs() < 1e-12 * form.norm());
        assert!((form.re - (uk + alpha.re * ur + um)).abs() < 1e-12 * form.norm());
    }

    #[test]
    fn zero_robin_is_rejected() {
        let m = Arc::new(mesh_full_domain(&DomainSpec::unit_square(), 0.25).unwrap());
        assert!(build_operator(m, BoundaryKind::Robin(ZERO), ZERO, ZERO).is_err());
    }

    #[test]
    fn harmonic_extension_reproduces_affine() {
        let (spec, pair) = robin_pair(0.25);
        let f = |x: [f64; 2]| C64::new(1.0 + 2.0 * x[0] - x[1], 0.5 * x[1]);
        let u = nodal_values(&pair.perforated, &f);
        let ext = harmonic_extension(&u, &pair, &spec).unwrap();
        for (i, x) in pair.full.vertices.iter().enumerate() {
            assert!((ext.values[i] - f(*x)).norm() < 1e-12);
        }
        assert!(ext.energy_constant > 0.0 && ext.energy_constant.is_finite());
        let one = harmonic_extension(&vec![ONE; u.len()], &pair, &spec).unwrap();
        assert!(one.values.iter().all(|v| (v - ONE).norm() < 1e-13));
    }

    #[test]
    fn harmonic_extension_minimizes_energy() {
        let (spec, pair) = robin_pair(0.25);
        let u = nodal_values(&pair.perforated, &|x| C64::new((7.0 * x[0]).sin(), x[1] * x[1]));
        let ext = harmonic_extension(&u, &pair, &spec).unwrap().values;
        let k = assemble_stiffness(&pair.full).unwrap();
        let e0 = k.quad_form(&ext).re;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let mut v = ext.clone();
            for i in pair.perforated.n_vertices()..v.len() {
                v[i] += C64::new(rng.gen_range(-1e-2..1e-2), 0.0);
            }
            assert!(k.quad_form(&v).re > e0);
        }
    }

    #[test]
    fn defect_examples() {
        let (spec, pair) = robin_pair(0.25);
        let np = pair.perforated.n_vertices();
        let zero_perf = vec![ZERO; np];
        let ones_full = vec![ONE; pair.full.n_vertices()];
        let d = l2_defect(&zero_perf, &pair.perforated, &ones_full, &pair.full).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        let mut u_full: Vec<C64> = extend_by_zero(&nodal_values(&pair.perforated, &|x| C64::new(x[0], 1.0)), &pair);
        for &v in &pair.full.holes[0].ring {
            u_full[v] = ZERO;
        }
        let u_perf = restrict_to_perforated(&u_full, &pair);
        assert!(l2_defect(&u_perf, &pair.perforated, &u_full, &pair.full).unwrap() < 1e-12);
        let t = C64::new(-2.0, 1.5);
        let a: Vec<C64> = (0..np).map(|i| C64::new(i as f64 * 1e-3, 1.0)).collect();
        let b: Vec<C64> = (0..pair.full.n_vertices()).map(|i| C64::new(1.0, -(i as f64) * 1e-3)).collect();
        let d1 = l2_defect(&a, &pair.perforated, &b, &pair.full).unwrap();
        let ta: Vec<C64> = a.iter().map(|v| v * t).collect();
        let tb: Vec<C64> = b.iter().map(|v| v * t).collect();
        let d2 = l2_defect(&ta, &pair.perforated, &tb, &pair.full).unwrap();
        assert!((d2 - t.norm() * d1).abs() < 1e-12 * d2);
        let _ = spec;
    }

    #[test]
    fn clipping_matches_hole_triangles() {
        let (_, pair) = robin_pair(0.125);
        let full = &pair.full;
        let u: Vec<C64> = full.vertices.iter().map(|x| C64::new(x[0] * x[1], 1.0 - x[0])).collect();
        let clipped = hole_l2_norm_sq(full, &u, &hole_polygons(&pair.perforated));
        let tagged = assemble_mass_on(full, |t| full.triangle_hole[t].is_some()).unwrap().quad_form(&u).re;
        assert!((clipped - tagged).abs() < 1e-12 * tagged);
    }

    #[test]
    fn ji_examples() {
        let sq = DomainSpec::unit_square();
        let spec = PerforationSpec::new(sq.clone(), 0.5, BoundaryKind::Neumann).unwrap();
        let m = mesh_full_domain(&sq, 0.125).unwrap();
        assert_eq!(ji_defect_estimate(&m, &spec, 3, 1).unwrap(), 0.0);
        let (spec, pair) = robin_pair(0.25);
        let h1 = CsrMatrix::lincomb(&[
            (ONE, &assemble_stiffness(&pair.full).unwrap()),
            (ONE, &assemble_mass(&pair.full).unwrap()),
        ])
        .unwrap();
        let polys = spec_polygons(&pair.full, &spec);
        let r = ji_ratio(&pair.full, &h1, &vec![ONE; pair.full.n_vertices()], &polys);
        let t_area: f64 = pair.perforated.holes.iter().map(|h| h.polygon_area(&pair.perforated.vertices)).sum();
        assert!((r * r - t_area).abs() < 1e-12);
        let a = ji_defect_estimate(&pair.full, &spec, 4, 9).unwrap();
        assert_eq!(a, ji_defect_estimate(&pair.full, &spec, 4, 9).unwrap());
    }
}
