//! Lowest-order Raviart–Thomas spaces (triangles and squares) and piecewise
//! constants.
//!
//! Each RT degree of freedom is the integrated normal flux across one mesh
//! edge, measured with the edge's global normal. Reference basis functions
//! carry unit outward flux through their own reference edge; the
//! contravariant Piola map preserves that flux, and the mesh orientation
//! sign turns "outward" into "along the global normal".

mod quadrature;

use std::sync::Arc;

pub use quadrature::{default_degree, gauss_legendre_unit, quad_rule, QuadRule};

use crate::mesh::{local_edge_vertices, CellKind, Mesh};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeFamily {
    /// Lowest-order Raviart–Thomas on triangles.
    Rt1Triangle,
    /// Lowest-order Raviart–Thomas on squares.
    Rtc1Quad,
    /// Piecewise constants.
    Dg0,
}

impl FeFamily {
    pub fn name(self) -> &'static str {
        match self {
            FeFamily::Rt1Triangle => "RT1",
            FeFamily::Rtc1Quad => "RTc1",
            FeFamily::Dg0 => "DG0",
        }
    }

    pub fn is_rt(self) -> bool {
        !matches!(self, FeFamily::Dg0)
    }

    /// The RT family matching a mesh's cell shape.
    pub fn rt_for(kind: CellKind) -> Self {
        match kind {
            CellKind::Triangle => FeFamily::Rt1Triangle,
            CellKind::Quad => FeFamily::Rtc1Quad,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DofMap {
    family: FeFamily,
    mesh: Arc<Mesh>,
    ndofs: usize,
    stride: usize,
    cell_dofs: Vec<(usize, f64)>,
    boundary_dofs: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: Arc<Mesh>, family: FeFamily) -> Result<Self> {
        let kind = mesh.cell_kind();
        let compatible = match family {
            FeFamily::Rt1Triangle => kind == CellKind::Triangle,
            FeFamily::Rtc1Quad => kind == CellKind::Quad,
            FeFamily::Dg0 => true,
        };
        if !compatible {
            return Err(Error::IncompatibleFamily {
                family: family.name(),
                cell: kind.name(),
            });
        }
        let (ndofs, stride, cell_dofs, boundary_dofs) = if family.is_rt() {
            let nv = kind.vertices_per_cell();
            let mut cd = Vec::with_capacity(mesh.num_cells() * nv);
            for c in 0..mesh.num_cells() {
                cd.extend(mesh.cell_edges(c).iter().map(|&(e, s)| (e, f64::from(s))));
            }
            (mesh.num_edges(), nv, cd, mesh.boundary_edges().to_vec())
        } else {
            let cd = (0..mesh.num_cells()).map(|c| (c, 1.0)).collect();
            (mesh.num_cells(), 1, cd, Vec::new())
        };
        Ok(DofMap {
            family,
            mesh,
            ndofs,
            stride,
            cell_dofs,
            boundary_dofs,
        })
    }

    pub fn family(&self) -> FeFamily {
        self.family
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn ndofs(&self) -> usize {
        self.ndofs
    }

    /// Local basis functions per cell.
    pub fn dofs_per_cell(&self) -> usize {
        self.stride
    }

    /// `(global dof, sign)` for each local basis function of `cell`.
    pub fn cell_dofs(&self, cell: usize) -> &[(usize, f64)] {
        &self.cell_dofs[cell * self.stride..(cell + 1) * self.stride]
    }

    pub fn boundary_dofs(&self) -> &[usize] {
        &self.boundary_dofs
    }

    /// Degrees of freedom left after pinning every boundary flux to zero.
    pub fn interior_dofs(&self) -> Vec<usize> {
        if !self.family.is_rt() {
            return (0..self.ndofs).collect();
        }
        (0..self.ndofs)
            .filter(|&e| !self.mesh.is_boundary_edge(e))
            .collect()
    }

    pub fn geometry(&self, cell: usize) -> Result<CellGeometry> {
        CellGeometry::new(&self.mesh, cell)
    }

    /// Physical quadrature points and weights on `cell`.
    pub fn cell_quadrature(
        &self,
        cell: usize,
        rule: &QuadRule,
    ) -> Result<(Vec<[f64; 2]>, Vec<f64>)> {
        let g = self.geometry(cell)?;
        let pts = rule.points.iter().map(|&p| g.map(p)).collect();
        let wts = rule.weights.iter().map(|w| w * g.det).collect();
        Ok((pts, wts))
    }

    /// Basis values and divergences on the physical cell, Piola-mapped and
    /// multiplied by the orientation signs.
    pub fn tabulate(&self, cell: usize, rule: &QuadRule) -> Result<BasisTable> {
        let g = self.geometry(cell)?;
        let nb = self.stride;
        let nq = rule.len();
        let mut table = BasisTable {
            nbasis: nb,
            points: Vec::with_capacity(nq),
            weights: Vec::with_capacity(nq),
            values: Vec::with_capacity(nq * nb),
            divs: Vec::with_capacity(nq * nb),
        };
        let dofs = self.cell_dofs(cell);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            table.points.push(g.map(*p));
            table.weights.push(w * g.det);
            for (i, &(_, sign)) in dofs.iter().enumerate() {
                let (v, d) = match self.family {
                    FeFamily::Dg0 => ([0.0, 0.0], 0.0),
                    _ => {
                        let (rv, rd) = reference_rt(self.mesh.cell_kind(), i, *p);
                        (g.piola(rv), rd / g.det)
                    }
                };
                table.values.push([sign * v[0], sign * v[1]]);
                table.divs.push(sign * d);
            }
        }
        Ok(table)
    }

    /// RT interpolant of `field`: each coefficient is the flux of `field`
    /// through its edge along the global normal (3-point Gauss on the edge).
    pub fn interpolate(&self, field: impl Fn([f64; 2]) -> [f64; 2]) -> Result<Vec<f64>> {
        if !self.family.is_rt() {
            return Err(Error::InvalidArgument(
                "vector interpolation needs an RT space".into(),
            ));
        }
        let (s, w) = gauss_legendre_unit(3);
        let verts = self.mesh.vertices();
        Ok((0..self.ndofs)
            .map(|e| {
                let [a, b] = self.mesh.edges()[e];
                let (pa, pb) = (verts[a], verts[b]);
                let n = self.mesh.edge_normal(e);
                let len = self.mesh.edge_length(e);
                s.iter()
                    .zip(&w)
                    .map(|(t, wt)| {
                        let x = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
                        let u = field(x);
                        wt * len * (u[0] * n[0] + u[1] * n[1])
                    })
                    .sum()
            })
            .collect())
    }

    /// Cell averages of `field` (the L² projection onto piecewise constants).
    pub fn project_scalar(&self, field: impl Fn([f64; 2]) -> f64) -> Result<Vec<f64>> {
        let rule = quad_rule(self.mesh.cell_kind(), 4)?;
        (0..self.mesh.num_cells())
            .map(|c| {
                let (pts, wts) = self.cell_quadrature(c, &rule)?;
                let area: f64 = wts.iter().sum();
                let integral: f64 = pts.iter().zip(&wts).map(|(p, w)| w * field(*p)).sum();
                Ok(integral / area)
            })
            .collect()
    }
}

/// Affine map from the reference cell: `x = origin + J x̂`.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry {
    pub origin: [f64; 2],
    /// Columns are the images of the reference axes.
    pub jac: [[f64; 2]; 2],
    pub det: f64,
}

impl CellGeometry {
    fn new(mesh: &Mesh, cell: usize) -> Result<Self> {
        let p = mesh.cell_coords(cell);
        let (a, b) = match mesh.cell_kind() {
            CellKind::Triangle => (p[1], p[2]),
            CellKind::Quad => (p[1], p[3]),
        };
        let jac = [
            [a[0] - p[0][0], b[0] - p[0][0]],
            [a[1] - p[0][1], b[1] - p[0][1]],
        ];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.abs() <= f64::EPSILON * mesh.cell_diameter(cell).powi(2) {
            return Err(Error::DegenerateCell(cell));
        }
        if det < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "cell {cell} is not counterclockwise"
            )));
        }
        if mesh.cell_kind() == CellKind::Quad {
            let far = [a[0] + b[0] - p[0][0], a[1] + b[1] - p[0][1]];
            if (far[0] - p[2][0]).abs() + (far[1] - p[2][1]).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "cell {cell} is not a parallelogram"
                )));
            }
        }
        Ok(CellGeometry {
            origin: p[0],
            jac,
            det,
        })
    }

    pub fn map(&self, xr: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + self.jac[0][0] * xr[0] + self.jac[0][1] * xr[1],
            self.origin[1] + self.jac[1][0] * xr[0] + self.jac[1][1] * xr[1],
        ]
    }

    /// Contravariant Piola map `J v̂ / det J`.
    pub fn piola(&self, v: [f64; 2]) -> [f64; 2] {
        [
            (self.jac[0][0] * v[0] + self.jac[0][1] * v[1]) / self.det,
            (self.jac[1][0] * v[0] + self.jac[1][1] * v[1]) / self.det,
        ]
    }
}

/// Reference RT basis function `local` (value, divergence) at `x`, normalized
/// to unit outward flux through reference edge `local`.
fn reference_rt(kind: CellKind, local: usize, x: [f64; 2]) -> ([f64; 2], f64) {
    match kind {
        // x̂ - v̂_i, with v̂_i the vertex opposite edge i.
        CellKind::Triangle => {
            let v = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]][local];
            ([x[0] - v[0], x[1] - v[1]], 2.0)
        }
        CellKind::Quad => {
            let v = match local {
                0 => [0.0, x[1] - 1.0],
                1 => [x[0], 0.0],
                2 => [0.0, x[1]],
                _ => [x[0] - 1.0, 0.0],
            };
            (v, 1.0)
        }
    }
}

/// Basis values on one physical cell, indexed `[q * nbasis + i]`.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub nbasis: usize,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub values: Vec<[f64; 2]>,
    pub divs: Vec<f64>,
}

impl BasisTable {
    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn value(&self, q: usize, i: usize) -> [f64; 2] {
        self.values[q * self.nbasis + i]
    }

    pub fn div(&self, q: usize, i: usize) -> f64 {
        self.divs[q * self.nbasis + i]
    }

    /// Evaluates `Σ coeffs[i] ψ_i` at quadrature point `q`.
    pub fn eval(&self, q: usize, coeffs: &[f64]) -> [f64; 2] {
        let mut out = [0.0, 0.0];
        for (i, c) in coeffs.iter().enumerate() {
            let v = self.value(q, i);
            out[0] += c * v[0];
            out[1] += c * v[1];
        }
        out
    }
}

/// Endpoints of reference edge `local`, in counterclockwise traversal order.
pub fn reference_edge(kind: CellKind, local: usize) -> ([f64; 2], [f64; 2]) {
    let verts: &[[f64; 2]] = match kind {
        CellKind::Triangle => &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        CellKind::Quad => &[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
    };
    let (a, b) = local_edge_vertices(kind, local);
    (verts[a], verts[b])
}
