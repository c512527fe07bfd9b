//! Conforming triangulations of boxes and perforated boxes, plus 1-D radial
//! grids.
//!
//! Perforated meshes are built from a tensor-product background grid. Every
//! lattice cell `P_i` is replaced by an O-grid that connects the cell square to
//! an inscribed regular polygon of radius `a`, so the hole rings and the
//! background are conforming by construction. [`mesh_perforated_pair`] also
//! returns the matching full-domain mesh whose first vertices coincide with
//! the perforated ones, which is what the identification maps rely on.

mod generate;
mod interp;
mod io;
mod radial;

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

pub use generate::{mesh_full_domain, mesh_perforated, mesh_perforated_pair, ring_segments, MeshOptions};
pub use interp::{barycentric as barycentric_coords, interpolate, PointLocator};
pub use radial::{radial_grid, RadialGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Marker {
    Outer,
    Hole(usize),
}

impl fmt::Display for Marker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Marker::Outer => write!(f, "outer"),
            Marker::Hole(k) => write!(f, "hole:{k}"),
        }
    }
}

/// Boundary edge oriented with the domain on its left.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub marker: Marker,
}

/// Polygonal hole: `ring` lists the polygon vertices counterclockwise.
/// `interior` is non-empty only on filled (full-domain) meshes.
#[derive(Debug, Clone, PartialEq)]
pub struct HolePolygon {
    pub center: [f64; 2],
    pub radius: f64,
    pub ring: Vec<usize>,
    pub interior: Vec<usize>,
}

impl HolePolygon {
    pub fn polygon(&self, vertices: &[[f64; 2]]) -> Vec<[f64; 2]> {
        self.ring.iter().map(|&v| vertices[v]).collect()
    }

    pub fn polygon_area(&self, vertices: &[[f64; 2]]) -> f64 {
        polygon_area(&self.polygon(vertices))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub holes: Vec<HolePolygon>,
    /// Hole owning each triangle; only filled meshes have `Some` entries.
    pub triangle_hole: Vec<Option<usize>>,
    pub h_max: f64,
    pub h_min: f64,
}

/// A perforated mesh and its filled companion. Vertex `i` of `perforated` is
/// vertex `i` of `full`; the hole interiors are appended after them.
#[derive(Debug, Clone)]
pub struct MeshPair {
    pub perforated: Mesh,
    pub full: Mesh,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeshQualityReport {
    pub vertices: usize,
    pub triangles: usize,
    pub boundary_edges: usize,
    pub holes: usize,
    pub min_angle: f64,
    pub max_aspect: f64,
    pub boundary_fit: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Largest size ratio between triangles sharing an edge.
    pub max_size_ratio: f64,
}

impl fmt::Display for MeshQualityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "vertices={} triangles={} min_angle={:.2} max_aspect={:.3} boundary_fit={:.3e}",
            self.vertices, self.triangles, self.min_angle, self.max_aspect, self.boundary_fit
        )
    }
}

impl MeshQualityReport {
    pub const CSV_HEADER: &'static str =
        "vertices,triangles,boundary_edges,holes,min_angle_deg,max_aspect,boundary_fit,h_min,h_max,max_size_ratio";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.vertices,
            self.triangles,
            self.boundary_edges,
            self.holes,
            self.min_angle,
            self.max_aspect,
            self.boundary_fit,
            self.h_min,
            self.h_max,
            self.max_size_ratio
        )
    }
}

/// Counts returned by a successful [`Mesh::audit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuditSummary {
    pub interior_edges: usize,
    pub boundary_edges: usize,
}

/// Size of a triangle: `sqrt(2·area)`, the leg of the right isosceles
/// triangle with the same area. Equals `h` on the structured grids.
pub fn element_size(area: f64) -> f64 {
    (2.0 * area).sqrt()
}

pub fn polygon_area(p: &[[f64; 2]]) -> f64 {
    let n = p.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = p[i];
        let b = p[(i + 1) % n];
        s += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * s
}

fn triangle_angles(p: [[f64; 2]; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for k in 0..3 {
        let a = p[k];
        let b = p[(k + 1) % 3];
        let c = p[(k + 2) % 3];
        let u = [b[0] - a[0], b[1] - a[1]];
        let v = [c[0] - a[0], c[1] - a[1]];
        let cross = u[0] * v[1] - u[1] * v[0];
        let dot = u[0] * v[0] + u[1] * v[1];
        out[k] = cross.abs().atan2(dot).to_degrees();
    }
    out
}

fn aspect(p: [[f64; 2]; 3]) -> f64 {
    let len = |i: usize, j: usize| ((p[i][0] - p[j][0]).powi(2) + (p[i][1] - p[j][1]).powi(2)).sqrt();
    let e = [len(0, 1), len(1, 2), len(2, 0)];
    let longest = e.iter().cloned().fold(0.0, f64::max);
    let perimeter: f64 = e.iter().sum();
    let area = crate::quadrature::signed_area(p).abs();
    longest * perimeter / (4.0 * 3f64.sqrt() * area)
}

/// Placement tolerance for on-circle vertices. The relative part is `1e-12·a`;
/// the second term is the rounding floor of coordinates of size `|c| + a`.
pub fn tol_geo(center: [f64; 2], radius: f64) -> f64 {
    1e-12 * radius + 4.0 * f64::EPSILON * (center[0].abs().max(center[1].abs()) + radius)
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        crate::quadrature::signed_area(self.corners(t))
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Whether the hole interiors are triangulated (full-domain companion).
    pub fn is_filled(&self) -> bool {
        self.holes.iter().any(|h| !h.interior.is_empty())
    }

    pub fn markers(&self) -> Vec<Marker> {
        let mut m: Vec<Marker> = self.boundary_edges.iter().map(|e| e.marker).collect();
        m.sort();
        m.dedup();
        m
    }

    /// Sorted vertex set touched by edges carrying a marker accepted by `keep`.
    pub fn boundary_vertices(&self, keep: impl Fn(Marker) -> bool) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .boundary_edges
            .iter()
            .filter(|e| keep(e.marker))
            .flat_map(|e| e.nodes)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub(crate) fn refresh_sizes(&mut self) {
        let mut hmax: f64 = 0.0;
        let mut hmin = f64::INFINITY;
        for t in 0..self.triangles.len() {
            let s = element_size(self.triangle_area(t).abs());
            hmax = hmax.max(s);
            hmin = hmin.min(s);
        }
        self.h_max = hmax;
        self.h_min = if hmin.is_finite() { hmin } else { 0.0 };
    }

    /// Full recomputation of the quality metrics.
    pub fn quality(&self) -> MeshQualityReport {
        let mut min_angle = f64::INFINITY;
        let mut max_aspect: f64 = 0.0;
        let mut sizes = Vec::with_capacity(self.triangles.len());
        for t in 0..self.triangles.len() {
            let p = self.corners(t);
            for a in triangle_angles(p) {
                min_angle = min_angle.min(a);
            }
            max_aspect = max_aspect.max(aspect(p));
            sizes.push(element_size(crate::quadrature::signed_area(p).abs()));
        }
        let mut boundary_fit: f64 = 0.0;
        for hole in &self.holes {
            for &v in &hole.ring {
                let x = self.vertices[v];
                let r = (x[0] - hole.center[0]).hypot(x[1] - hole.center[1]);
                boundary_fit = boundary_fit.max((r - hole.radius).abs());
            }
        }
        let mut max_size_ratio: f64 = 1.0;
        for (_, tris) in self.edge_map() {
            if let [t0, t1] = tris[..] {
                let (a, b) = (sizes[t0], sizes[t1]);
                max_size_ratio = max_size_ratio.max(a.max(b) / a.min(b));
            }
        }
        MeshQualityReport {
            vertices: self.vertices.len(),
            triangles: self.triangles.len(),
            boundary_edges: self.boundary_edges.len(),
            holes: self.holes.len(),
            min_angle: if min_angle.is_finite() { min_angle } else { 0.0 },
            max_aspect,
            boundary_fit,
            h_min: sizes.iter().cloned().fold(f64::INFINITY, f64::min),
            h_max: sizes.iter().cloned().fold(0.0, f64::max),
            max_size_ratio,
        }
    }

    /// Undirected edge -> incident triangles, in triangle order.
    fn edge_map(&self) -> HashMap<(usize, usize), Vec<usize>> {
        let mut map: HashMap<(usize, usize), Vec<usize>> = HashMap::with_capacity(self.triangles.len() * 2);
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                map.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        map
    }

    fn fail(&self, message: String) -> Error {
        Error::Mesh {
            message,
            report: Box::new(self.quality()),
        }
    }

    /// Conformity and orientation audit: positive areas, every edge shared by
    /// at most two consistently oriented triangles, and the single-triangle
    /// edges being exactly the marked boundary.
    pub fn audit(&self) -> Result<AuditSummary> {
        let n = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(self.fail(format!("triangle {t} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(self.fail(format!("triangle {t} repeats a vertex")));
            }
            if self.triangle_area(t) <= 0.0 {
                return Err(self.fail(format!("triangle {t} is not counterclockwise")));
            }
        }
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(self.triangles.len() * 3);
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                if directed.insert((tri[k], tri[(k + 1) % 3]), t).is_some() {
                    return Err(self.fail(format!(
                        "edge ({}, {}) traversed twice in the same direction",
                        tri[k],
                        tri[(k + 1) % 3]
                    )));
                }
            }
        }
        let mut interior = 0;
        let mut open: Vec<(usize, usize)> = Vec::new();
        for &(a, b) in directed.keys() {
            if directed.contains_key(&(b, a)) {
                if a < b {
                    interior += 1;
                }
            } else {
                open.push((a, b));
            }
        }
        open.sort_unstable();
        let mut marked: Vec<(usize, usize)> = self.boundary_edges.iter().map(|e| (e.nodes[0], e.nodes[1])).collect();
        marked.sort_unstable();
        if open != marked {
            return Err(self.fail(format!(
                "boundary mismatch: {} open edges, {} marked edges",
                open.len(),
                marked.len()
            )));
        }
        let filled = self.is_filled();
        for hole in &self.holes {
            let tol = tol_geo(hole.center, hole.radius);
            for &v in &hole.ring {
                let x = self.vertices[v];
                let r = (x[0] - hole.center[0]).hypot(x[1] - hole.center[1]);
                if (r - hole.radius).abs() > tol {
                    return Err(self.fail(format!("hole vertex {v} is off its circle by {:.3e}", (r - hole.radius).abs())));
                }
            }
            if filled && hole.interior.is_empty() {
                return Err(self.fail("filled mesh has an empty hole".into()));
            }
        }
        Ok(AuditSummary {
            interior_edges: interior,
            boundary_edges: open.len(),
        })
    }

    pub fn check_quality(&self, min_angle: f64) -> Result<MeshQualityReport> {
        let report = self.quality();
        if report.min_angle < min_angle {
            return Err(Error::Mesh {
                message: format!("minimum angle {:.2} below {:.2}", report.min_angle, min_angle),
                report: Box::new(report),
            });
        }
        Ok(report)
    }
}
