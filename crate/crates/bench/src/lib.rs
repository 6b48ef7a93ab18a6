//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use tide_core::assembly::{build_preconditioner, build_system};
use tide_core::experiment::steady_rhs;
use tide_core::{
    BlockSystem, CellKind, DofMap, FeFamily, Mesh, Preconditioner, PreconditionerKind, Result,
    TideParams,
};

/// Velocity and elevation spaces on the `n × n` unit-square mesh.
pub fn spaces(n: usize, cell: CellKind) -> Result<(DofMap, DofMap)> {
    let mesh = Arc::new(Mesh::build_structured(n, cell)?);
    Ok((
        DofMap::new(mesh.clone(), FeFamily::rt_for(cell))?,
        DofMap::new(mesh, FeFamily::Dg0)?,
    ))
}

/// Everything needed for one steady solve.
pub struct Fixture {
    pub params: TideParams,
    pub v: DofMap,
    pub w: DofMap,
    pub system: BlockSystem,
    pub pc: Preconditioner,
    pub rhs: Vec<f64>,
}

impl Fixture {
    /// Desk defaults (`C = f = 1`, `β = 0.1`, `ε = 0.01`) with half step `k`.
    pub fn new(n: usize, cell: CellKind, k: f64, kind: PreconditionerKind) -> Result<Self> {
        let params = TideParams::new(k);
        let (v, w) = spaces(n, cell)?;
        let system = build_system(&params, &v, &w)?;
        let pc = build_preconditioner(&params, &v, &w, kind)?;
        let rhs = steady_rhs(&params, &v, &w)?;
        Ok(Fixture {
            params,
            v,
            w,
            system,
            pc,
            rhs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_dimensions_agree() {
        let f = Fixture::new(4, CellKind::Quad, 0.01, PreconditionerKind::Riesz).unwrap();
        assert_eq!(f.rhs.len(), f.system.nu() + f.system.neta());
    }
}
