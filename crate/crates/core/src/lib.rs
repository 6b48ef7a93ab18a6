//! Mixed finite element discretization of the linearized rotating
//! shallow-water (tide) equations, Crank–Nicolson time stepping, and
//! weighted-norm block preconditioners for the per-step saddle-point solve.
//!
//! The unknowns are the linearized momentum `u` in the lowest-order
//! Raviart–Thomas space (triangles or squares) and the free-surface
//! elevation `eta` in piecewise constants. Each time step solves
//!
//! ```text
//! [ M̌       -(βk/ε²) Dᵀ ] [u  ]   [f]
//! [ (βk/ε²) D  (β/ε²) M  ] [eta] = [g]
//! ```
//!
//! with restarted GMRES, left-preconditioned by one of the block-diagonal
//! operators in [`assembly::PreconditionerKind`].

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assembly;
pub mod dense;
mod error;
pub mod experiment;
pub mod fespace;
pub mod krylov;
pub mod mesh;
pub mod newton;
pub mod sparse;
pub mod stepper;
pub mod verify;

pub use assembly::{BlockSystem, Coefficient, Preconditioner, PreconditionerKind, TideParams};
pub use error::{Error, Result};
pub use fespace::{DofMap, FeFamily};
pub use krylov::{gmres, LinearOperator, SolveReport, SolverConfig};
pub use mesh::{CellKind, Mesh};
pub use sparse::CsrMatrix;
pub use stepper::{EnergyTrace, State};
