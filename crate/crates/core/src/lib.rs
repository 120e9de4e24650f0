//! Algebraic multigrid eigensolver for sparse symmetric generalized
//! eigenvalue problems `A u = λ M u`.
//!
//! The crate is organised bottom-up:
//!
//! * [`sparse`]: CSR storage, products, Galerkin triple product, Matrix Market I/O.
//! * [`amg`]: Ruge–Stüben setup (strength graph, C/F splitting, interpolation,
//!   hierarchy of Galerkin pairs).
//! * [`solve`]: CG smoothing, V-cycles and the `m`-cycle AMG iteration.
//! * [`eig`]: dense symmetric-definite generalized eigensolver.
//! * [`correction`]: the AMG correction step and the nested eigensolver.
//! * [`fem`]: P1 finite element pairs on triangular meshes of the unit square.
//! * [`experiment`]: direct oracle and convergence studies written as CSV.

pub mod amg;
pub mod correction;
pub mod dense;
pub mod eig;
pub mod error;
pub mod experiment;
pub mod fem;
pub mod solve;
pub mod sparse;

pub use error::{Error, Result};
