use super::Mesh;
use crate::C64;

/// Bucket grid over the triangles of a mesh for point location.
pub struct PointLocator<'a> {
    mesh: &'a Mesh,
    origin: [f64; 2],
    cell: [f64; 2],
    dims: [usize; 2],
    start: Vec<usize>,
    items: Vec<usize>,
}

const BARY_TOL: f64 = 1e-12;

impl<'a> PointLocator<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &mesh.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let nt = mesh.triangles.len().max(1);
        let side = (nt as f64).sqrt().ceil() as usize;
        let span = [(hi[0] - lo[0]).max(1e-300), (hi[1] - lo[1]).max(1e-300)];
        let dims = [side.max(1), side.max(1)];
        let cell = [span[0] / dims[0] as f64, span[1] / dims[1] as f64];
        let mut loc = Self {
            mesh,
            origin: lo,
            cell,
            dims,
            start: Vec::new(),
            items: Vec::new(),
        };
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); dims[0] * dims[1]];
        for t in 0..mesh.triangles.len() {
            let p = mesh.corners(t);
            let bx0 = loc.bucket(p.iter().map(|q| q[0]).fold(f64::INFINITY, f64::min), 0);
            let bx1 = loc.bucket(p.iter().map(|q| q[0]).fold(f64::NEG_INFINITY, f64::max), 0);
            let by0 = loc.bucket(p.iter().map(|q| q[1]).fold(f64::INFINITY, f64::min), 1);
            let by1 = loc.bucket(p.iter().map(|q| q[1]).fold(f64::NEG_INFINITY, f64::max), 1);
            for by in by0..=by1 {
                for bx in bx0..=bx1 {
                    buckets[by * dims[0] + bx].push(t);
                }
            }
        }
        loc.start.push(0);
        for b in buckets {
            loc.items.extend(b);
            loc.start.push(loc.items.len());
        }
        loc
    }

    fn bucket(&self, x: f64, k: usize) -> usize {
        let b = ((x - self.origin[k]) / self.cell[k]).floor();
        if b < 0.0 {
            0
        } else {
            (b as usize).min(self.dims[k] - 1)
        }
    }

    /// Containing triangle and barycentric coordinates, if any.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let b = self.bucket(p[1], 1) * self.dims[0] + self.bucket(p[0], 0);
        for &t in &self.items[self.start[b]..self.start[b + 1]] {
            let bary = barycentric(self.mesh.corners(t), p);
            if bary.iter().all(|&l| l >= -BARY_TOL) {
                return Some((t, bary));
            }
        }
        None
    }
}

pub fn barycentric(c: [[f64; 2]; 3], p: [f64; 2]) -> [f64; 3] {
    let det = (c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (c[1][1] - c[0][1]);
    let l1 = ((p[0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (p[1] - c[0][1])) / det;
    let l2 = ((c[1][0] - c[0][0]) * (p[1] - c[0][1]) - (p[0] - c[0][0]) * (c[1][1] - c[0][1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

/// Nodal P1 interpolation from `source` onto the vertices of `target`.
/// Target vertices outside the source triangulation (e.g. inside holes) get 0.
pub fn interpolate(u: &[C64], source: &Mesh, target: &Mesh) -> Vec<C64> {
    assert_eq!(u.len(), source.vertices.len(), "field length must match the source mesh");
    let loc = PointLocator::new(source);
    target
        .vertices
        .iter()
        .map(|&p| match loc.locate(p) {
            Some((t, l)) => {
                let [a, b, c] = source.triangles[t];
                // Exact hits keep the nodal value bit-for-bit.
                if l[0] == 1.0 {
                    u[a]
                } else if l[1] == 1.0 {
                    u[b]
                } else if l[2] == 1.0 {
                    u[c]
                } else {
                    u[a] * l[0].clamp(0.0, 1.0) + u[b] * l[1].clamp(0.0, 1.0) + u[c] * l[2].clamp(0.0, 1.0)
                }
            }
            None => C64::new(0.0, 0.0),
        })
        .collect()
}
