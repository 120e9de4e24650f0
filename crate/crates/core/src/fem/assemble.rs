use super::mesh::{signed_area, TriMesh};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    /// `-Δu = λu`
    Laplace,
    /// `-Δu - u/|x - Z| = λu`
    Coulomb,
}

impl std::str::FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "laplace" => Ok(Self::Laplace),
            "coulomb" => Ok(Self::Coulomb),
            other => Err(Error::InvalidParameter(format!(
                "unknown problem `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Laplace => "laplace",
            Self::Coulomb => "coulomb",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    /// Center `Z` of the Coulomb potential.
    pub center: [f64; 2],
    /// `|x - Z|` is clamped from below by this radius.
    pub clamp_radius: f64,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        Self {
            kind: ProblemKind::Laplace,
            center: [0.5, 0.5],
            clamp_radius: 1e-10,
        }
    }
}

impl ProblemSpec {
    pub fn laplace() -> Self {
        Self::default()
    }

    pub fn coulomb() -> Self {
        Self {
            kind: ProblemKind::Coulomb,
            ..Self::default()
        }
    }

    /// `V(x) = -1 / max(|x - Z|, clamp_radius)`.
    pub fn potential(&self, x: [f64; 2]) -> f64 {
        let r = ((x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2)).sqrt();
        -1.0 / r.max(self.clamp_radius)
    }
}

fn element_points(mesh: &TriMesh, t: usize) -> Result<([[f64; 2]; 3], f64)> {
    let tri = mesh.triangles[t];
    let p = [
        mesh.vertices[tri[0]],
        mesh.vertices[tri[1]],
        mesh.vertices[tri[2]],
    ];
    let area = signed_area(p[0], p[1], p[2]);
    if !(area > 0.0) {
        return Err(Error::Mesh(format!(
            "triangle {t} is degenerate or clockwise"
        )));
    }
    Ok((p, area))
}

/// P1 element stiffness `∫ ∇φ_i · ∇φ_j` from the exact constant gradients.
pub fn element_stiffness(p: [[f64; 2]; 3]) -> Result<[[f64; 3]; 3]> {
    let area = signed_area(p[0], p[1], p[2]);
    if !(area > 0.0) {
        return Err(Error::Mesh("degenerate or clockwise element".into()));
    }
    let mut b = [0.0; 3];
    let mut c = [0.0; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        b[i] = p[j][1] - p[k][1];
        c[i] = p[k][0] - p[j][0];
    }
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
        }
    }
    Ok(k)
}

fn assemble_elements(
    mesh: &TriMesh,
    mut element: impl FnMut(usize, [[f64; 2]; 3], f64) -> Result<[[f64; 3]; 3]>,
) -> Result<CsrMatrix> {
    let n = mesh.num_vertices();
    let mut triplets = Vec::with_capacity(9 * mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let (p, area) = element_points(mesh, t)?;
        let local = element(t, p, area)?;
        let tri = mesh.triangles[t];
        for i in 0..3 {
            for j in 0..3 {
                triplets.push((tri[i], tri[j], local[i][j]));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &triplets)
}

/// Global P1 stiffness matrix over all vertices.
pub fn assemble_stiffness(mesh: &TriMesh) -> Result<CsrMatrix> {
    assemble_elements(mesh, |_, p, _| element_stiffness(p))
}

/// Global consistent P1 mass matrix, `|T|/12 · [[2,1,1],[1,2,1],[1,1,2]]` per element.
pub fn assemble_mass(mesh: &TriMesh) -> Result<CsrMatrix> {
    assemble_elements(mesh, |_, _, area| {
        let mut m = [[area / 12.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = area / 6.0;
        }
        Ok(m)
    })
}

/// `∫ f φ_i φ_j` by the edge-midpoint rule (exact for quadratics).
pub fn assemble_weighted_mass(mesh: &TriMesh, f: impl Fn([f64; 2]) -> f64) -> Result<CsrMatrix> {
    assemble_elements(mesh, |_, p, area| {
        let mut m = [[0.0; 3]; 3];
        for e in 0..3 {
            // Midpoint of the edge opposite vertex e: φ_e = 0, the other two = 1/2.
            let (a, b) = ((e + 1) % 3, (e + 2) % 3);
            let mid = [0.5 * (p[a][0] + p[b][0]), 0.5 * (p[a][1] + p[b][1])];
            let w = area / 3.0 * f(mid);
            let mut phi = [0.5; 3];
            phi[e] = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += w * phi[i] * phi[j];
                }
            }
        }
        Ok(m)
    })
}

/// `∫ V φ_i φ_j` for the clamped Coulomb potential of `spec`.
pub fn assemble_potential(mesh: &TriMesh, spec: &ProblemSpec) -> Result<CsrMatrix> {
    assemble_weighted_mass(mesh, |x| spec.potential(x))
}

/// Deletes boundary rows and columns. Returns the interior pair and the
/// interior-to-global vertex map.
pub fn apply_dirichlet(
    a: &CsrMatrix,
    m: &CsrMatrix,
    mesh: &TriMesh,
) -> (CsrMatrix, CsrMatrix, Vec<usize>) {
    let interior = mesh.interior_vertices();
    (a.submatrix(&interior), m.submatrix(&interior), interior)
}

/// Interior Galerkin pair of a model problem.
#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    pub a: CsrMatrix,
    pub m: CsrMatrix,
    pub interior: Vec<usize>,
}

pub fn discretize(mesh: &TriMesh, spec: &ProblemSpec) -> Result<DiscreteProblem> {
    let mut a = assemble_stiffness(mesh)?;
    if spec.kind == ProblemKind::Coulomb {
        let inside = (0.0..=1.0).contains(&spec.center[0]) && (0.0..=1.0).contains(&spec.center[1]);
        if !inside {
            return Err(Error::InvalidParameter(
                "Coulomb center must lie in the domain".into(),
            ));
        }
        a = a.add_scaled(1.0, &assemble_potential(mesh, spec)?, 1.0)?;
    }
    let m = assemble_mass(mesh)?;
    let (a, m, interior) = apply_dirichlet(&a, &m, mesh);
    Ok(DiscreteProblem { a, m, interior })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{Cholesky, DenseMatrix};
    use crate::fem::structured_mesh;

    #[test]
    fn reference_element_stiffness() {
        let k = element_stiffness([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let want = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - want[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn degenerate_element_is_an_error() {
        assert!(element_stiffness([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_err());
    }

    #[test]
    fn reference_element_mass() {
        let mesh = TriMesh {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            boundary: vec![true; 3],
        };
        let m = assemble_mass(&mesh).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 2.0 / 24.0 } else { 1.0 / 24.0 };
                assert!((m.get(i, j) - want).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn stiffness_kernel_and_symmetry() {
        let mesh = structured_mesh(6);
        let k = assemble_stiffness(&mesh).unwrap();
        let ones = vec![1.0; mesh.num_vertices()];
        assert!(k.spmv(&ones).unwrap().iter().all(|v| v.abs() < 1e-13));
        assert_eq!(k.asymmetry(), 0.0);
    }

    #[test]
    fn mass_partition_of_unity_and_spd() {
        let mesh = structured_mesh(4);
        let m = assemble_mass(&mesh).unwrap();
        let total: f64 = m.values().iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
        assert!(Cholesky::factor(&DenseMatrix::from_sparse(&m)).is_ok());
    }

    #[test]
    fn constant_weight_reproduces_mass() {
        let mesh = structured_mesh(5);
        let m = assemble_mass(&mesh).unwrap();
        let w = assemble_weighted_mass(&mesh, |_| 1.0).unwrap();
        assert_eq!(m.nnz(), w.nnz());
        for ((_, _, a), (_, _, b)) in m.triplets().zip(w.triplets()) {
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1e-300));
        }
    }

    #[test]
    fn potential_sign_and_symmetry() {
        let mesh = structured_mesh(8);
        let v = assemble_potential(&mesh, &ProblemSpec::coulomb()).unwrap();
        assert_eq!(v.asymmetry(), 0.0);
        assert!(v.values().iter().all(|&x| x <= 0.0));
    }

    #[test]
    fn dirichlet_elimination() {
        let mesh = structured_mesh(8);
        let pb = discretize(&mesh, &ProblemSpec::laplace()).unwrap();
        assert_eq!(pb.a.nrows(), 49);
        assert!(pb.interior.iter().all(|&v| !mesh.boundary[v]));
        assert_eq!(pb.a.asymmetry(), 0.0);
        assert_eq!(pb.m.asymmetry(), 0.0);
        assert!(Cholesky::factor(&DenseMatrix::from_sparse(&pb.a)).is_ok());
    }
}
