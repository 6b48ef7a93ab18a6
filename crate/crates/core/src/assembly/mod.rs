//! Matrices and vectors of the per-step mixed problem, boundary elimination
//! and the block preconditioners.

mod forms;
mod params;
mod precond;
mod system;

pub use forms::{
    assemble_coriolis, assemble_div, assemble_divdiv, assemble_scalar_load, assemble_scalar_mass,
    assemble_tensor_mass, assemble_vector_load, assemble_weighted_vector_mass, ScalarFn,
};
pub use params::{Coefficient, TideParams};
pub use precond::{
    assemble_velocity_block, build_preconditioner, Preconditioner, PreconditionerKind,
};
pub use system::{apply_bc, build_system, BlockSystem, BoundaryReduction};

#[cfg(test)]
pub(crate) use system::build_system_unchecked;
pub(crate) use system::quadrature_degree;
