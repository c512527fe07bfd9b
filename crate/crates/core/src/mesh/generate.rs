use std::f64::consts::PI;

use super::{BoundaryEdge, HolePolygon, Marker, Mesh, MeshPair};
use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, PerforationSpec};
use crate::quadrature::signed_area;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshOptions {
    /// Element-count cap; exceeding it is a resource error.
    pub max_elements: usize,
    /// Allowed relative area defect of each hole polygon.
    pub tol_rel: f64,
    /// Smallest resolvable radius as a fraction of `diam Ω`.
    pub floor_rel: f64,
    pub min_angle: f64,
}

impl Default for MeshOptions {
    fn default() -> Self {
        Self {
            max_elements: 4_000_000,
            tol_rel: 1e-2,
            floor_rel: 1e-6,
            min_angle: 20.0,
        }
    }
}

/// Polygon segment count needed for a relative area defect of `tol_rel`.
/// The inscribed `n`-gon misses `πa²·(1 − sin(2π/n)/(2π/n)) ≤ πa²·(2π/n)²/6`.
pub fn ring_segments(tol_rel: f64) -> usize {
    let n = (2.0 * PI / (6.0 * tol_rel).sqrt()).ceil() as usize;
    n.max(16)
}

/// Structured mesh of a 2-D box; every grid rectangle is cut along its
/// lower-left to upper-right diagonal.
pub fn mesh_full_domain(domain: &DomainSpec, h: f64) -> Result<Mesh> {
    mesh_full_domain_with(domain, h, &MeshOptions::default())
}

pub fn mesh_full_domain_with(domain: &DomainSpec, h: f64, opts: &MeshOptions) -> Result<Mesh> {
    check_planar(domain)?;
    let min_extent = domain.extents.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::arg(format!("mesh size must be positive, got {h}")));
    }
    if h >= min_extent {
        return Err(Error::arg(format!("mesh size {h} is not below the box extent {min_extent}")));
    }
    let xs = uniform_axis(0.0, domain.extents[0], h);
    let ys = uniform_axis(0.0, domain.extents[1], h);
    check_count(xs.len(), ys.len(), opts)?;
    let grid = Grid::new(xs, ys, &[], &[]);
    let mut mesh = grid.into_mesh();
    canonicalize(&mut mesh);
    Ok(mesh)
}

/// Graded mesh of `Ω_ε`.
pub fn mesh_perforated(spec: &PerforationSpec, h_far: f64, grading: f64) -> Result<Mesh> {
    Ok(mesh_perforated_pair(spec, h_far, grading, &MeshOptions::default())?.perforated)
}

/// Graded mesh of `Ω_ε` together with the full-domain mesh that fills the
/// holes without moving any perforated vertex.
pub fn mesh_perforated_pair(spec: &PerforationSpec, h_far: f64, grading: f64, opts: &MeshOptions) -> Result<MeshPair> {
    let domain = &spec.domain;
    check_planar(domain)?;
    if !(grading > 1.0 && grading <= 2.0) {
        return Err(Error::arg(format!("grading must lie in (1, 2], got {grading}")));
    }
    if !(h_far > 0.0 && h_far.is_finite()) {
        return Err(Error::arg(format!("mesh size must be positive, got {h_far}")));
    }
    let centers = spec.centers();
    if centers.is_empty() {
        let perforated = mesh_full_domain_with(domain, h_far, opts)?;
        return Ok(MeshPair {
            full: perforated.clone(),
            perforated,
        });
    }
    let eps = spec.epsilon;
    let a = spec.hole_radius();
    let floor = opts.floor_rel * domain.diameter();
    if a < floor {
        return Err(Error::Geometry(format!(
            "unresolvable hole at epsilon={eps}: radius {a:e} below floor {floor:e}"
        )));
    }

    let n_req = ring_segments(opts.tol_rel);
    let m_h = (2.0 * eps / h_far - 1e-9).ceil().max(1.0) as usize;
    let m = m_h.max(n_req.div_ceil(4)).max(4).next_power_of_two();
    let n = 4 * m;
    let h_cell = 2.0 * eps / m as f64;

    let mut cx: Vec<f64> = centers.iter().map(|c| c[0]).collect();
    let mut cy: Vec<f64> = centers.iter().map(|c| c[1]).collect();
    cx.sort_by(f64::total_cmp);
    cx.dedup();
    cy.sort_by(f64::total_cmp);
    cy.dedup();
    let (xs, bx) = cell_axis(domain.extents[0], &cx, eps, m, h_cell);
    let (ys, by) = cell_axis(domain.extents[1], &cy, eps, m, h_cell);
    check_count(xs.len(), ys.len(), opts)?;

    // Layers between polygon and square: ratio bounded by the grading and by
    // the tangential resolution of the polygon.
    let rho = eps / a;
    let q_cap = grading.min(1.0 + 2.0 * PI / n as f64);
    let layers = ((rho.ln() / q_cap.ln()).ceil() as usize).max(1);
    let hole_elems = centers.len() * layers * n * 2;
    if (xs.len() - 1) * (ys.len() - 1) * 2 + hole_elems > opts.max_elements {
        return Err(Error::Resource(format!(
            "perforated mesh would exceed {} elements",
            opts.max_elements
        )));
    }

    let blocks: Vec<Block> = centers
        .iter()
        .map(|c| Block {
            ix: bx[cx.iter().position(|&v| v == c[0]).unwrap()],
            iy: by[cy.iter().position(|&v| v == c[1]).unwrap()],
            center: [c[0], c[1]],
        })
        .collect();
    let grid = Grid::new(xs, ys, &blocks, &[m]);
    let ogrid = OGrid { m, radius: a, layers };
    let mut perforated = grid.into_mesh_with(&blocks, &ogrid);
    canonicalize(&mut perforated);
    perforated.audit()?;
    perforated.check_quality(opts.min_angle)?;

    let full = fill_holes(&perforated);
    full.audit()?;
    full.check_quality(opts.min_angle)?;
    Ok(MeshPair { perforated, full })
}

fn check_planar(domain: &DomainSpec) -> Result<()> {
    if domain.dim != 2 {
        return Err(Error::arg("triangulations are two-dimensional"));
    }
    Ok(())
}

fn check_count(nx: usize, ny: usize, opts: &MeshOptions) -> Result<()> {
    let cells = (nx.saturating_sub(1)).saturating_mul(ny.saturating_sub(1));
    if cells.saturating_mul(2) > opts.max_elements {
        return Err(Error::Resource(format!(
            "mesh would exceed {} elements",
            opts.max_elements
        )));
    }
    Ok(())
}

fn push_interval(nodes: &mut Vec<f64>, x0: f64, x1: f64, segs: usize) {
    for k in 1..segs {
        nodes.push(x0 + (x1 - x0) * k as f64 / segs as f64);
    }
    nodes.push(x1);
}

fn uniform_axis(x0: f64, x1: f64, h: f64) -> Vec<f64> {
    let segs = ((x1 - x0) / h - 1e-9).ceil().max(1.0) as usize;
    let mut nodes = vec![x0];
    push_interval(&mut nodes, x0, x1, segs);
    nodes
}

/// Axis nodes with exactly `m` segments per cell interval. Returns the nodes
/// and, per center, the index of the node at `c − ε`.
fn cell_axis(len: f64, centers: &[f64], eps: f64, m: usize, h: f64) -> (Vec<f64>, Vec<usize>) {
    let mut nodes = vec![0.0];
    let mut starts = Vec::with_capacity(centers.len());
    let mut x = 0.0;
    for &c in centers {
        let lo = c - eps;
        if lo > x {
            let segs = ((lo - x) / h - 1e-9).ceil().max(1.0) as usize;
            push_interval(&mut nodes, x, lo, segs);
            x = lo;
        }
        starts.push(nodes.len() - 1);
        let hi = c + eps;
        push_interval(&mut nodes, x, hi, m);
        x = hi;
    }
    if len > x {
        let segs = ((len - x) / h - 1e-9).ceil().max(1.0) as usize;
        push_interval(&mut nodes, x, len, segs);
    }
    (nodes, starts)
}

struct Block {
    ix: usize,
    iy: usize,
    center: [f64; 2],
}

struct OGrid {
    m: usize,
    radius: f64,
    layers: usize,
}

struct Grid {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Vertex id of each grid node, `None` for nodes strictly inside a block.
    ids: Vec<Option<usize>>,
    /// Block owning each grid rectangle.
    owner: Vec<Option<usize>>,
    vertices: Vec<[f64; 2]>,
}

impl Grid {
    fn new(xs: Vec<f64>, ys: Vec<f64>, blocks: &[Block], m: &[usize]) -> Self {
        let (nx, ny) = (xs.len(), ys.len());
        let mut owner = vec![None; (nx - 1) * (ny - 1)];
        let mut inside = vec![false; nx * ny];
        if let Some(&m) = m.first() {
            for (b, blk) in blocks.iter().enumerate() {
                for i in 0..m {
                    for j in 0..m {
                        owner[(blk.iy + j) * (nx - 1) + blk.ix + i] = Some(b);
                    }
                }
                for i in 1..m {
                    for j in 1..m {
                        inside[(blk.iy + j) * nx + blk.ix + i] = true;
                    }
                }
            }
        }
        let mut ids = vec![None; nx * ny];
        let mut vertices = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                if !inside[j * nx + i] {
                    ids[j * nx + i] = Some(vertices.len());
                    vertices.push([xs[i], ys[j]]);
                }
            }
        }
        Self {
            xs,
            ys,
            ids,
            owner,
            vertices,
        }
    }

    fn id(&self, i: usize, j: usize) -> usize {
        self.ids[j * self.xs.len() + i].expect("grid node exists")
    }

    fn background(&self) -> (Vec<[usize; 3]>, Vec<BoundaryEdge>) {
        let (nx, ny) = (self.xs.len(), self.ys.len());
        let mut tris = Vec::new();
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                if self.owner[j * (nx - 1) + i].is_some() {
                    continue;
                }
                let v00 = self.id(i, j);
                let v10 = self.id(i + 1, j);
                let v11 = self.id(i + 1, j + 1);
                let v01 = self.id(i, j + 1);
                tris.push([v00, v10, v11]);
                tris.push([v00, v11, v01]);
            }
        }
        let mut edges = Vec::new();
        let outer = |a, b| BoundaryEdge {
            nodes: [a, b],
            marker: Marker::Outer,
        };
        for i in 0..nx - 1 {
            edges.push(outer(self.id(i, 0), self.id(i + 1, 0)));
            edges.push(outer(self.id(i + 1, ny - 1), self.id(i, ny - 1)));
        }
        for j in 0..ny - 1 {
            edges.push(outer(self.id(nx - 1, j), self.id(nx - 1, j + 1)));
            edges.push(outer(self.id(0, j + 1), self.id(0, j)));
        }
        (tris, edges)
    }

    fn into_mesh(self) -> Mesh {
        let (triangles, boundary_edges) = self.background();
        let mut mesh = Mesh {
            triangle_hole: vec![None; triangles.len()],
            vertices: self.vertices,
            triangles,
            boundary_edges,
            holes: Vec::new(),
            h_max: 0.0,
            h_min: 0.0,
        };
        mesh.refresh_sizes();
        mesh
    }

    fn into_mesh_with(mut self, blocks: &[Block], og: &OGrid) -> Mesh {
        let (mut triangles, mut boundary_edges) = self.background();
        let mut holes = Vec::with_capacity(blocks.len());
        let m = og.m;
        let n = 4 * m;
        let a = og.radius;
        for (b, blk) in blocks.iter().enumerate() {
            let (ix, iy) = (blk.ix, blk.iy);
            let eps = 0.5 * (self.xs[ix + m] - self.xs[ix]);
            let mut square = Vec::with_capacity(n);
            for k in 0..m {
                square.push(self.id(ix + k, iy));
            }
            for k in 0..m {
                square.push(self.id(ix + m, iy + k));
            }
            for k in 0..m {
                square.push(self.id(ix + m - k, iy + m));
            }
            for k in 0..m {
                square.push(self.id(ix, iy + m - k));
            }
            let c = blk.center;
            let circle: Vec<[f64; 2]> = (0..n)
                .map(|j| {
                    let t = -0.75 * PI + 2.0 * PI * j as f64 / n as f64;
                    [c[0] + a * t.cos(), c[1] + a * t.sin()]
                })
                .collect();
            let q = (eps / a).powf(1.0 / og.layers as f64);
            // rows[k][j]: layer k = 0 on the polygon, k = layers on the square.
            let mut rows: Vec<Vec<usize>> = Vec::with_capacity(og.layers + 1);
            for k in 0..og.layers {
                let s = if k == 0 { 0.0 } else { (a * q.powi(k as i32) - a) / (eps - a) };
                let row = (0..n)
                    .map(|j| {
                        let sq = self.vertices[square[j]];
                        let p = if k == 0 {
                            circle[j]
                        } else {
                            [circle[j][0] + s * (sq[0] - circle[j][0]), circle[j][1] + s * (sq[1] - circle[j][1])]
                        };
                        self.vertices.push(p);
                        self.vertices.len() - 1
                    })
                    .collect();
                rows.push(row);
            }
            rows.push(square);
            for k in 0..og.layers {
                for j in 0..n {
                    let j1 = (j + 1) % n;
                    let quad = [rows[k][j], rows[k + 1][j], rows[k + 1][j1], rows[k][j1]];
                    split_quad(&self.vertices, quad, &mut triangles);
                }
            }
            let ring = rows[0].clone();
            for j in 0..n {
                boundary_edges.push(BoundaryEdge {
                    nodes: [ring[(j + 1) % n], ring[j]],
                    marker: Marker::Hole(b),
                });
            }
            holes.push(HolePolygon {
                center: c,
                radius: a,
                ring,
                interior: Vec::new(),
            });
        }
        let mut mesh = Mesh {
            triangle_hole: vec![None; triangles.len()],
            vertices: self.vertices,
            triangles,
            boundary_edges,
            holes,
            h_max: 0.0,
            h_min: 0.0,
        };
        mesh.refresh_sizes();
        mesh
    }
}

fn min_angle_of(v: &[[f64; 2]], t: [usize; 3]) -> f64 {
    super::triangle_angles([v[t[0]], v[t[1]], v[t[2]]])
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

fn orient(v: &[[f64; 2]], t: [usize; 3]) -> [usize; 3] {
    if signed_area([v[t[0]], v[t[1]], v[t[2]]]) < 0.0 {
        [t[0], t[2], t[1]]
    } else {
        t
    }
}

/// Splits a convex quadrilateral along the diagonal that maximizes the
/// smallest angle.
fn split_quad(v: &[[f64; 2]], q: [usize; 4], out: &mut Vec<[usize; 3]>) {
    let d1 = [[q[0], q[1], q[2]], [q[0], q[2], q[3]]];
    let d2 = [[q[0], q[1], q[3]], [q[1], q[2], q[3]]];
    let score = |d: &[[usize; 3]; 2]| min_angle_of(v, d[0]).min(min_angle_of(v, d[1]));
    let pick = if score(&d2) > score(&d1) + 1e-12 { d2 } else { d1 };
    for t in pick {
        out.push(orient(v, t));
    }
}

/// Triangulates every hole polygon with concentric rings whose vertex count
/// halves inward down to 8, closed by a fan around the center.
fn fill_holes(perf: &Mesh) -> Mesh {
    let mut vertices = perf.vertices.clone();
    let mut triangles = perf.triangles.clone();
    let mut triangle_hole = perf.triangle_hole.clone();
    let mut holes = perf.holes.clone();
    let n_perf = vertices.len();
    for (h, hole) in holes.iter_mut().enumerate() {
        let c = hole.center;
        let ring = &hole.ring;
        let phase = {
            let p = vertices[ring[0]];
            (p[1] - c[1]).atan2(p[0] - c[0])
        };
        let mut s_ref = 2.0 * PI * hole.radius / ring.len() as f64;
        let mut outer: Vec<usize> = ring.clone();
        let mut r = hole.radius;
        let start = vertices.len();
        let first_tri = triangles.len();
        loop {
            let cnt = outer.len();
            if cnt <= 8 {
                vertices.push(c);
                let apex = vertices.len() - 1;
                for j in 0..cnt {
                    triangles.push(orient(&vertices, [apex, outer[j], outer[(j + 1) % cnt]]));
                }
                break;
            }
            let s = 2.0 * PI * r / cnt as f64;
            let r_next = r - 0.85 * s;
            let halve = 2.0 * PI * r_next / (cnt / 2) as f64 <= 1.45 * s_ref;
            let inner_cnt = if halve { cnt / 2 } else { cnt };
            let inner: Vec<usize> = (0..inner_cnt)
                .map(|j| {
                    let t = phase + 2.0 * PI * j as f64 / inner_cnt as f64;
                    vertices.push([c[0] + r_next * t.cos(), c[1] + r_next * t.sin()]);
                    vertices.len() - 1
                })
                .collect();
            if halve {
                for i in 0..inner_cnt {
                    let o0 = outer[2 * i];
                    let o1 = outer[2 * i + 1];
                    let o2 = outer[(2 * i + 2) % cnt];
                    let i0 = inner[i];
                    let i1 = inner[(i + 1) % inner_cnt];
                    triangles.push(orient(&vertices, [o0, o1, i0]));
                    triangles.push(orient(&vertices, [o1, o2, i1]));
                    triangles.push(orient(&vertices, [i0, o1, i1]));
                }
                s_ref = 2.0 * PI * r_next / inner_cnt as f64;
            } else {
                for j in 0..cnt {
                    let j1 = (j + 1) % cnt;
                    split_quad(&vertices, [outer[j], inner[j], inner[j1], outer[j1]], &mut triangles);
                }
            }
            outer = inner;
            r = r_next;
        }
        triangle_hole.resize(triangles.len(), None);
        for t in &mut triangle_hole[first_tri..] {
            *t = Some(h);
        }
        hole.interior = (start..vertices.len()).collect();
    }
    let mut full = Mesh {
        vertices,
        triangles,
        boundary_edges: perf.boundary_edges.iter().filter(|e| e.marker == Marker::Outer).copied().collect(),
        holes,
        triangle_hole,
        h_max: 0.0,
        h_min: 0.0,
    };
    canonicalize_tail(&mut full, n_perf, perf.triangles.len());
    full.refresh_sizes();
    full
}

fn rotate_min_first(t: [usize; 3]) -> [usize; 3] {
    let k = (0..3).min_by_key(|&k| t[k]).unwrap();
    [t[k], t[(k + 1) % 3], t[(k + 2) % 3]]
}

/// Lexicographic vertex order (x, then y); triangles rotated to start at
/// their smallest index and sorted; boundary edges sorted by marker.
fn canonicalize(mesh: &mut Mesh) {
    let n = mesh.vertices.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (mesh.vertices[i], mesh.vertices[j]);
        a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1]))
    });
    let mut new_id = vec![0; n];
    for (k, &old) in order.iter().enumerate() {
        new_id[old] = k;
    }
    mesh.vertices = order.iter().map(|&i| mesh.vertices[i]).collect();
    remap_topology(mesh, &new_id, 0);
}

/// Canonical order for the appended part of a filled mesh only.
fn canonicalize_tail(mesh: &mut Mesh, n_fixed: usize, t_fixed: usize) {
    let n = mesh.vertices.len();
    let mut order: Vec<usize> = (n_fixed..n).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (mesh.vertices[i], mesh.vertices[j]);
        a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1]))
    });
    let mut new_id: Vec<usize> = (0..n).collect();
    for (k, &old) in order.iter().enumerate() {
        new_id[old] = n_fixed + k;
    }
    let tail: Vec<[f64; 2]> = order.iter().map(|&i| mesh.vertices[i]).collect();
    mesh.vertices.truncate(n_fixed);
    mesh.vertices.extend(tail);
    remap_topology(mesh, &new_id, t_fixed);
}

fn remap_topology(mesh: &mut Mesh, new_id: &[usize], t_fixed: usize) {
    let mut tagged: Vec<([usize; 3], Option<usize>)> = mesh.triangles[t_fixed..]
        .iter()
        .zip(&mesh.triangle_hole[t_fixed..])
        .map(|(t, &h)| (rotate_min_first([new_id[t[0]], new_id[t[1]], new_id[t[2]]]), h))
        .collect();
    tagged.sort_unstable();
    mesh.triangles.truncate(t_fixed);
    mesh.triangle_hole.truncate(t_fixed);
    for (t, h) in tagged {
        mesh.triangles.push(t);
        mesh.triangle_hole.push(h);
    }
    for e in &mut mesh.boundary_edges {
        e.nodes = [new_id[e.nodes[0]], new_id[e.nodes[1]]];
    }
    mesh.boundary_edges.sort_by_key(|e| (e.marker, e.nodes));
    for hole in &mut mesh.holes {
        for v in hole.ring.iter_mut().chain(hole.interior.iter_mut()) {
            *v = new_id[*v];
        }
        hole.interior.sort_unstable();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundaryKind, DomainShape};
    use crate::C64;

    fn robin(eps: f64) -> PerforationSpec {
        PerforationSpec::new(DomainSpec::unit_square(), eps, BoundaryKind::Robin(C64::new(1.0, 0.0))).unwrap()
    }

    #[test]
    fn structured_counts() {
        let m = mesh_full_domain(&DomainSpec::unit_square(), 0.5).unwrap();
        assert_eq!((m.n_triangles(), m.n_vertices()), (8, 9));
        let m = mesh_full_domain(&DomainSpec::unit_square(), 0.25).unwrap();
        assert_eq!(m.n_triangles(), 32);
        assert!(m.h_max <= 0.25 + 1e-15);
        assert_eq!(m.boundary_edges.len(), 16);
        m.audit().unwrap();
    }

    #[test]
    fn structured_rejects_degenerate_size() {
        assert!(mesh_full_domain(&DomainSpec::unit_square(), 1.0).is_err());
        assert!(mesh_full_domain(&DomainSpec::unit_square(), 0.0).is_err());
    }

    #[test]
    fn element_cap_is_a_resource_error() {
        let opts = MeshOptions {
            max_elements: 100,
            ..Default::default()
        };
        let err = mesh_full_domain_with(&DomainSpec::unit_square(), 0.01, &opts).unwrap_err();
        assert_eq!(err.kind(), "resource");
    }

    #[test]
    fn ring_segment_bound() {
        assert_eq!(ring_segments(1.0), 16);
        for &tol in &[1e-2, 1e-3, 1e-4] {
            let n = ring_segments(tol) as f64;
            let defect = 1.0 - (2.0 * PI / n).sin() / (2.0 * PI / n);
            assert!(defect <= tol, "tol {tol}: defect {defect}");
        }
    }

    #[test]
    fn one_hole_robin_mesh() {
        let spec = robin(0.25);
        let pair = mesh_perforated_pair(&spec, 0.125, 1.5, &MeshOptions::default()).unwrap();
        let m = &pair.perforated;
        assert_eq!(m.holes.len(), 1);
        let q = m.quality();
        assert!(q.min_angle >= 20.0, "{q}");
        assert!(q.boundary_fit <= super::super::tol_geo(m.holes[0].center, 0.0625));
        let poly = m.holes[0].polygon_area(&m.vertices);
        assert!((m.area() - (1.0 - poly)).abs() <= 1e-12);
        assert!((poly - PI * 0.0625f64.powi(2)).abs() <= 1e-2 * PI * 0.0625f64.powi(2));
        let f = &pair.full;
        assert!((f.area() - 1.0).abs() <= 1e-12);
        assert_eq!(&f.vertices[..m.n_vertices()], &m.vertices[..]);
        assert!(f.quality().min_angle >= 20.0);
    }

    #[test]
    fn nine_holes_and_grading() {
        let spec = robin(0.125);
        let pair = mesh_perforated_pair(&spec, 0.0625, 1.5, &MeshOptions::default()).unwrap();
        assert_eq!(pair.perforated.holes.len(), 9);
        let q = pair.perforated.quality();
        assert!(q.max_size_ratio <= 1.5 + 1e-9, "{}", q.max_size_ratio);
        pair.full.audit().unwrap();
    }

    #[test]
    fn no_centers_gives_structured_mesh() {
        let spec = robin(0.5);
        let m = mesh_perforated(&spec, 0.25, 1.5).unwrap();
        assert_eq!(m, mesh_full_domain(&DomainSpec::unit_square(), 0.25).unwrap());
    }

    #[test]
    fn unresolvable_dirichlet_hole() {
        let spec = PerforationSpec::new(DomainSpec::unit_square(), 0.125, BoundaryKind::Dirichlet).unwrap();
        let err = mesh_perforated(&spec, 0.1, 1.5).unwrap_err();
        assert_eq!(err.kind(), "geometry");
        assert!(err.to_string().contains("unresolvable hole"));
    }

    #[test]
    fn strip_mesh() {
        let d = DomainSpec::new(vec![8.0, 1.0], DomainShape::Strip).unwrap();
        let spec = PerforationSpec::new(d, 0.25, BoundaryKind::Robin(C64::new(1.0, 1.0))).unwrap();
        let pair = mesh_perforated_pair(&spec, 0.125, 1.5, &MeshOptions::default()).unwrap();
        assert_eq!(pair.perforated.holes.len(), 15);
        pair.perforated.audit().unwrap();
        assert!((pair.full.area() - 8.0).abs() < 1e-11);
    }

    #[test]
    fn deterministic() {
        let spec = robin(0.125);
        let a = mesh_perforated(&spec, 0.1, 1.5).unwrap();
        let b = mesh_perforated(&spec, 0.1, 1.5).unwrap();
        assert_eq!(a, b);
    }
}
