//! Plain-text mesh format:
//!
//! ```text
//! pdmesh 1
//! vertices <n>
//! <x> <y>
//! triangles <t>
//! <i> <j> <k>
//! boundary_edges <e>
//! <i> <j> outer|hole:<id>
//! ```

use std::io::{BufRead, Write};

use super::{BoundaryEdge, HolePolygon, Marker, Mesh};
use crate::error::{Error, Result};

impl Mesh {
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "pdmesh 1")?;
        writeln!(w, "vertices {}", self.vertices.len())?;
        for v in &self.vertices {
            writeln!(w, "{} {}", v[0], v[1])?;
        }
        writeln!(w, "triangles {}", self.triangles.len())?;
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        writeln!(w, "boundary_edges {}", self.boundary_edges.len())?;
        for e in &self.boundary_edges {
            writeln!(w, "{} {} {}", e.nodes[0], e.nodes[1], e.marker)?;
        }
        Ok(())
    }

    /// Reads the text format. Hole polygons are rebuilt from the hole-marked
    /// edges, with center and radius taken as the mean of the ring vertices.
    pub fn read_text<R: BufRead>(r: R) -> Result<Mesh> {
        let mut lines = r.lines().map(|l| l.map_err(Error::from));
        let mut next = move || -> Result<String> {
            loop {
                match lines.next() {
                    Some(l) => {
                        let l = l?;
                        if !l.trim().is_empty() {
                            return Ok(l);
                        }
                    }
                    None => return Err(Error::Parse("unexpected end of mesh file".into())),
                }
            }
        };
        if next()?.trim() != "pdmesh 1" {
            return Err(Error::Parse("missing 'pdmesh 1' header".into()));
        }
        let nv = section(&next()?, "vertices")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let f = fields::<f64>(&next()?, 2)?;
            vertices.push([f[0], f[1]]);
        }
        let nt = section(&next()?, "triangles")?;
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let f = fields::<usize>(&next()?, 3)?;
            if f.iter().any(|&i| i >= nv) {
                return Err(Error::Parse("triangle index out of range".into()));
            }
            triangles.push([f[0], f[1], f[2]]);
        }
        let ne = section(&next()?, "boundary_edges")?;
        let mut boundary_edges = Vec::with_capacity(ne);
        for _ in 0..ne {
            let line = next()?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::Parse(format!("bad boundary edge line '{line}'")));
            }
            let a: usize = parts[0].parse().map_err(|_| Error::Parse(format!("bad index in '{line}'")))?;
            let b: usize = parts[1].parse().map_err(|_| Error::Parse(format!("bad index in '{line}'")))?;
            if a >= nv || b >= nv {
                return Err(Error::Parse("boundary edge index out of range".into()));
            }
            let marker = match parts[2] {
                "outer" => Marker::Outer,
                m => match m.strip_prefix("hole:").and_then(|k| k.parse().ok()) {
                    Some(k) => Marker::Hole(k),
                    None => return Err(Error::Parse(format!("unknown marker '{m}'"))),
                },
            };
            boundary_edges.push(BoundaryEdge { nodes: [a, b], marker });
        }
        let holes = rebuild_holes(&vertices, &boundary_edges)?;
        let mut mesh = Mesh {
            triangle_hole: vec![None; triangles.len()],
            vertices,
            triangles,
            boundary_edges,
            holes,
            h_max: 0.0,
            h_min: 0.0,
        };
        mesh.refresh_sizes();
        Ok(mesh)
    }
}

fn section(line: &str, name: &str) -> Result<usize> {
    let mut it = line.split_whitespace();
    match (it.next(), it.next().and_then(|n| n.parse().ok()), it.next()) {
        (Some(k), Some(n), None) if k == name => Ok(n),
        _ => Err(Error::Parse(format!("expected '{name} <count>', got '{line}'"))),
    }
}

fn fields<T: std::str::FromStr>(line: &str, n: usize) -> Result<Vec<T>> {
    let out: Vec<T> = line
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad value '{s}'"))))
        .collect::<Result<_>>()?;
    if out.len() != n {
        return Err(Error::Parse(format!("expected {n} values, got '{line}'")));
    }
    Ok(out)
}

fn rebuild_holes(vertices: &[[f64; 2]], edges: &[BoundaryEdge]) -> Result<Vec<HolePolygon>> {
    let n_holes = edges
        .iter()
        .filter_map(|e| match e.marker {
            Marker::Hole(k) => Some(k + 1),
            Marker::Outer => None,
        })
        .max()
        .unwrap_or(0);
    let mut holes = Vec::with_capacity(n_holes);
    for k in 0..n_holes {
        // Hole edges run clockwise around the hole; follow them backwards.
        let mut prev: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
        for e in edges.iter().filter(|e| e.marker == Marker::Hole(k)) {
            prev.insert(e.nodes[0], e.nodes[1]);
        }
        let Some(&start) = prev.keys().min() else {
            return Err(Error::Parse(format!("hole {k} has no edges")));
        };
        let mut ring = vec![start];
        let mut v = prev[&start];
        while v != start {
            ring.push(v);
            v = *prev
                .get(&v)
                .ok_or_else(|| Error::Parse(format!("hole {k} boundary is not closed")))?;
            if ring.len() > prev.len() {
                return Err(Error::Parse(format!("hole {k} boundary is not a simple cycle")));
            }
        }
        let n = ring.len() as f64;
        let center = ring.iter().fold([0.0, 0.0], |c, &i| [c[0] + vertices[i][0] / n, c[1] + vertices[i][1] / n]);
        let radius = ring
            .iter()
            .map(|&i| (vertices[i][0] - center[0]).hypot(vertices[i][1] - center[1]))
            .sum::<f64>()
            / n;
        holes.push(HolePolygon {
            center,
            radius,
            ring,
            interior: Vec::new(),
        });
    }
    Ok(holes)
}
