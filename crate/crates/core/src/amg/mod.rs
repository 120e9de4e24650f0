//! Classical Ruge–Stüben setup: strength of connection, C/F splitting,
//! interpolation and the hierarchy of Galerkin pairs `(A_k, M_k)`.

mod coarsen;
mod hierarchy;
mod interp;
mod strength;

pub use coarsen::{coarsen_preliminary, CfSplit, PointLabel};
pub use hierarchy::{
    build_hierarchy, composite_transfer, CoarseningRecord, CoarsestLevel, Hierarchy, Level,
    SetupParams,
};
pub use interp::{assemble_prolongation, finalize_interpolation, Interpolation, Stencil};
pub use strength::{strength_sets, StrengthGraph};
