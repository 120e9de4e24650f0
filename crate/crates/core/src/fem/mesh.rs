use std::fs::File;
use std::hash::{Hash, Hasher};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

const GEOM_TOL: f64 = 1e-12;

/// Triangulation of the unit square with counterclockwise triangles and
/// per-vertex boundary flags.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
}

/// A mesh read from disk together with the number of triangles whose
/// orientation had to be flipped.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedMesh {
    pub mesh: TriMesh,
    pub reoriented: usize,
}

impl TriMesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.signed_area(t)).sum()
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.num_vertices())
            .filter(|&v| !self.boundary[v])
            .collect()
    }

    /// Largest edge length.
    pub fn mesh_size(&self) -> f64 {
        let mut h = 0.0f64;
        for tri in &self.triangles {
            for e in 0..3 {
                let p = self.vertices[tri[e]];
                let q = self.vertices[tri[(e + 1) % 3]];
                h = h.max(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
            }
        }
        h
    }

    /// Deterministic hash of the geometry and connectivity.
    pub fn content_hash(&self) -> u64 {
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        for v in &self.vertices {
            v[0].to_bits().hash(&mut hasher);
            v[1].to_bits().hash(&mut hasher);
        }
        self.triangles.hash(&mut hasher);
        self.boundary.hash(&mut hasher);
        hasher.finish()
    }

    /// Checks positive orientation, area sum, and boundary placement.
    pub fn validate(&self) -> Result<()> {
        if self.boundary.len() != self.vertices.len() {
            return Err(Error::Mesh(
                "boundary flags do not match vertex count".into(),
            ));
        }
        for (v, p) in self.vertices.iter().enumerate() {
            if p.iter()
                .any(|&c| !(-GEOM_TOL..=1.0 + GEOM_TOL).contains(&c))
            {
                return Err(Error::Mesh(format!(
                    "vertex {v} lies outside the unit square"
                )));
            }
            if self.boundary[v] && !on_unit_square_boundary(*p) {
                return Err(Error::Mesh(format!(
                    "boundary vertex {v} at ({}, {}) is not on the boundary",
                    p[0], p[1]
                )));
            }
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= self.vertices.len()) {
                return Err(Error::Mesh(format!(
                    "triangle {t} references a missing vertex"
                )));
            }
            if self.signed_area(t) <= 0.0 {
                return Err(Error::Mesh(format!("triangle {t} has non-positive area")));
            }
        }
        let area = self.total_area();
        if (area - 1.0).abs() > GEOM_TOL {
            return Err(Error::Mesh(format!("triangle areas sum to {area}, not 1")));
        }
        Ok(())
    }
}

pub(crate) fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn on_unit_square_boundary(p: [f64; 2]) -> bool {
    p.iter()
        .any(|&c| c.abs() <= GEOM_TOL || (c - 1.0).abs() <= GEOM_TOL)
}

/// Uniform `n × n` grid of the unit square, each cell cut along the diagonal
/// from its lower-left to its upper-right corner.
pub fn structured_mesh(n: usize) -> TriMesh {
    assert!(n >= 1, "structured mesh needs at least one cell per side");
    let h = 1.0 / n as f64;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    let mut boundary = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            // Exact endpoints keep boundary coordinates at 0 and 1.
            let x = if i == n { 1.0 } else { i as f64 * h };
            let y = if j == n { 1.0 } else { j as f64 * h };
            vertices.push([x, y]);
            boundary.push(i == 0 || j == 0 || i == n || j == n);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v11, v01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    TriMesh {
        vertices,
        triangles,
        boundary,
    }
}

/// Writes the text mesh format: `nv nt`, then `x y b` per vertex, then
/// 1-based `i j k` per triangle.
pub fn save_mesh(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{} {}", mesh.num_vertices(), mesh.num_triangles())?;
    for (p, &b) in mesh.vertices.iter().zip(&mesh.boundary) {
        writeln!(w, "{:e} {:e} {}", p[0], p[1], u8::from(b))?;
    }
    for t in &mesh.triangles {
        writeln!(w, "{} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the text mesh format. Clockwise triangles are flipped and counted;
/// degenerate ones are rejected.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<LoadedMesh> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut counts: Option<(usize, usize)> = None;
    let mut vertices = Vec::new();
    let mut boundary = Vec::new();
    let mut triangles = Vec::new();
    let mut reoriented = 0;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let Some((nv, nt)) = counts else {
            if fields.len() != 2 {
                return Err(err(lineno, "expected `nv nt`".into()));
            }
            let nv = fields[0]
                .parse()
                .map_err(|_| err(lineno, format!("invalid vertex count `{}`", fields[0])))?;
            let nt = fields[1]
                .parse()
                .map_err(|_| err(lineno, format!("invalid triangle count `{}`", fields[1])))?;
            counts = Some((nv, nt));
            continue;
        };
        if fields.len() != 3 {
            return Err(err(
                lineno,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        if vertices.len() < nv {
            let x: f64 = fields[0]
                .parse()
                .map_err(|_| err(lineno, format!("invalid coordinate `{}`", fields[0])))?;
            let y: f64 = fields[1]
                .parse()
                .map_err(|_| err(lineno, format!("invalid coordinate `{}`", fields[1])))?;
            let b = match fields[2] {
                "0" => false,
                "1" => true,
                other => return Err(err(lineno, format!("boundary flag `{other}` is not 0/1"))),
            };
            vertices.push([x, y]);
            boundary.push(b);
        } else if triangles.len() < nt {
            let mut tri = [0usize; 3];
            for (slot, f) in tri.iter_mut().zip(&fields) {
                let v: usize = f
                    .parse()
                    .map_err(|_| err(lineno, format!("invalid vertex index `{f}`")))?;
                if v == 0 || v > nv {
                    return Err(err(lineno, format!("vertex index {v} outside 1..={nv}")));
                }
                *slot = v - 1;
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if area == 0.0 {
                return Err(err(lineno, "degenerate triangle".into()));
            }
            if area < 0.0 {
                tri.swap(1, 2);
                reoriented += 1;
            }
            triangles.push(tri);
        } else {
            return Err(err(lineno, "unexpected trailing data".into()));
        }
    }
    let (nv, nt) = counts.ok_or_else(|| err(1, "missing `nv nt` line".into()))?;
    if vertices.len() != nv || triangles.len() != nt {
        return Err(Error::Mesh(format!(
            "{}: expected {nv} vertices and {nt} triangles, found {} and {}",
            path.display(),
            vertices.len(),
            triangles.len()
        )));
    }
    let mesh = TriMesh {
        vertices,
        triangles,
        boundary,
    };
    mesh.validate()?;
    Ok(LoadedMesh { mesh, reoriented })
}
