//! P1 finite element pairs `(A, M)` on triangulations of the unit square with
//! homogeneous Dirichlet conditions.

mod assemble;
mod mesh;

pub use assemble::{
    apply_dirichlet, assemble_mass, assemble_potential, assemble_stiffness, assemble_weighted_mass,
    discretize, element_stiffness, DiscreteProblem, ProblemKind, ProblemSpec,
};
pub use mesh::{load_mesh, save_mesh, structured_mesh, LoadedMesh, TriMesh};
