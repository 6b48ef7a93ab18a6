//! Structured meshes of the unit square.
//!
//! Vertices are numbered row-major (x fastest). Cells are listed
//! counterclockwise. Every edge is stored once, as `(lo, hi)` vertex indices
//! with `lo < hi`, and carries a global unit normal obtained by rotating the
//! `lo -> hi` tangent 90° clockwise.
//!
//! Local edge conventions:
//! - triangle: local edge `i` joins local vertices `i+1 -> i+2` (it is
//!   opposite local vertex `i`),
//! - quadrilateral: local edge `i` joins local vertices `i -> i+1`
//!   (bottom, right, top, left for a cell listed from its lower-left corner).
//!
//! With counterclockwise cells the outward normal of a local edge is the
//! clockwise rotation of its traversal tangent, so a cell's orientation sign
//! on an edge is `+1` exactly when it traverses the edge from `lo` to `hi`.

use std::collections::HashMap;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    Triangle,
    Quad,
}

impl CellKind {
    pub fn vertices_per_cell(self) -> usize {
        match self {
            CellKind::Triangle => 3,
            CellKind::Quad => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CellKind::Triangle => "triangle",
            CellKind::Quad => "quadrilateral",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    cell_kind: CellKind,
    n: usize,
    vertices: Vec<[f64; 2]>,
    /// Flat cell -> vertex table, `vertices_per_cell` entries per cell.
    cells: Vec<usize>,
    edges: Vec<[usize; 2]>,
    /// Flat cell -> (edge, orientation sign) table, aligned with `cells`.
    cell_edges: Vec<(usize, i8)>,
    boundary_edges: Vec<usize>,
    on_boundary: Vec<bool>,
}

impl Mesh {
    /// Builds an `n x n` mesh of the unit square. Triangle meshes split every
    /// square along its lower-left to upper-right diagonal.
    pub fn build_structured(n: usize, cell_kind: CellKind) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "mesh needs at least one subdivision per side".into(),
            ));
        }
        let np = n + 1;
        let h = 1.0 / n as f64;
        let mut vertices = Vec::with_capacity(np * np);
        for j in 0..np {
            for i in 0..np {
                vertices.push([i as f64 * h, j as f64 * h]);
            }
        }

        let mut cells = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let v00 = j * np + i;
                let v10 = v00 + 1;
                let v01 = v00 + np;
                let v11 = v01 + 1;
                match cell_kind {
                    CellKind::Quad => cells.extend_from_slice(&[v00, v10, v11, v01]),
                    CellKind::Triangle => {
                        cells.extend_from_slice(&[v00, v10, v11]);
                        cells.extend_from_slice(&[v00, v11, v01]);
                    }
                }
            }
        }

        let nv = cell_kind.vertices_per_cell();
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut incidence: Vec<u8> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for cell in cells.chunks_exact(nv) {
            for local in 0..nv {
                let (a, b) = local_edge_vertices(cell_kind, local);
                let (va, vb) = (cell[a], cell[b]);
                let key = (va.min(vb), va.max(vb));
                let idx = *lookup.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    incidence.push(0);
                    edges.len() - 1
                });
                incidence[idx] += 1;
                cell_edges.push((idx, if va < vb { 1 } else { -1 }));
            }
        }

        let on_boundary: Vec<bool> = incidence.iter().map(|&c| c == 1).collect();
        let boundary_edges = (0..edges.len()).filter(|&e| on_boundary[e]).collect();

        Ok(Mesh {
            cell_kind,
            n,
            vertices,
            cells,
            edges,
            cell_edges,
            boundary_edges,
            on_boundary,
        })
    }

    pub fn cell_kind(&self) -> CellKind {
        self.cell_kind
    }

    /// Subdivisions per side.
    pub fn subdivisions(&self) -> usize {
        self.n
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len() / self.cell_kind.vertices_per_cell()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let nv = self.cell_kind.vertices_per_cell();
        &self.cells[c * nv..(c + 1) * nv]
    }

    /// `(edge, sign)` pairs of cell `c` in local edge order.
    pub fn cell_edges(&self, c: usize) -> &[(usize, i8)] {
        let nv = self.cell_kind.vertices_per_cell();
        &self.cell_edges[c * nv..(c + 1) * nv]
    }

    pub fn boundary_edges(&self) -> &[usize] {
        &self.boundary_edges
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.on_boundary[e]
    }

    pub fn cell_coords(&self, c: usize) -> Vec<[f64; 2]> {
        self.cell(c).iter().map(|&v| self.vertices[v]).collect()
    }

    /// Signed area (shoelace formula).
    pub fn cell_area(&self, c: usize) -> f64 {
        let p = self.cell_coords(c);
        let m = p.len();
        0.5 * (0..m)
            .map(|i| {
                let (a, b) = (p[i], p[(i + 1) % m]);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum::<f64>()
    }

    pub fn cell_diameter(&self, c: usize) -> f64 {
        let p = self.cell_coords(c);
        let mut d: f64 = 0.0;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                d = d.max(dist(p[i], p[j]));
            }
        }
        d
    }

    /// Maximum cell diameter.
    pub fn mesh_size(&self) -> f64 {
        (0..self.num_cells())
            .map(|c| self.cell_diameter(c))
            .fold(0.0, f64::max)
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        dist(self.vertices[a], self.vertices[b])
    }

    /// Global unit normal: the `lo -> hi` unit tangent rotated clockwise.
    pub fn edge_normal(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        let len = dist(pa, pb);
        let t = [(pb[0] - pa[0]) / len, (pb[1] - pa[1]) / len];
        [t[1], -t[0]]
    }
}

/// Local vertex pair `(from, to)` traversed counterclockwise by local edge `local`.
pub fn local_edge_vertices(kind: CellKind, local: usize) -> (usize, usize) {
    match kind {
        CellKind::Triangle => ((local + 1) % 3, (local + 2) % 3),
        CellKind::Quad => (local, (local + 1) % 4),
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_invariants(mesh: &Mesh) {
        let n = mesh.subdivisions();
        // Euler relation for a disk: V - E + F = 1.
        let euler = mesh.num_vertices() as i64 - mesh.num_edges() as i64 + mesh.num_cells() as i64;
        assert_eq!(euler, 1);
        assert_eq!(mesh.boundary_edges().len(), 4 * n);

        let mut sign_sum = vec![0i32; mesh.num_edges()];
        let mut count = vec![0usize; mesh.num_edges()];
        for c in 0..mesh.num_cells() {
            assert!(mesh.cell_area(c) > 0.0);
            for &(e, s) in mesh.cell_edges(c) {
                sign_sum[e] += s as i32;
                count[e] += 1;
            }
        }
        for e in 0..mesh.num_edges() {
            match count[e] {
                1 => assert!(mesh.is_boundary_edge(e)),
                2 => {
                    assert!(!mesh.is_boundary_edge(e));
                    assert_eq!(sign_sum[e], 0, "edge {e}");
                }
                k => panic!("edge {e} has {k} cells"),
            }
        }
        let total: f64 = (0..mesh.num_cells()).map(|c| mesh.cell_area(c)).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_quad() {
        let m = Mesh::build_structured(1, CellKind::Quad).unwrap();
        assert_eq!(m.num_vertices(), 4);
        assert_eq!(m.num_edges(), 4);
        assert_eq!(m.num_cells(), 1);
        assert_eq!(m.boundary_edges().len(), 4);
        check_invariants(&m);
    }

    #[test]
    fn single_square_split() {
        let m = Mesh::build_structured(1, CellKind::Triangle).unwrap();
        assert_eq!(m.num_vertices(), 4);
        assert_eq!(m.num_edges(), 5);
        assert_eq!(m.num_cells(), 2);
        check_invariants(&m);
    }

    #[test]
    fn two_by_two_triangles_match_enumeration() {
        let m = Mesh::build_structured(2, CellKind::Triangle).unwrap();
        // Enumeration: 2*N*(N+1) axis-aligned edges plus N^2 diagonals.
        let n = 2;
        assert_eq!(m.num_vertices(), (n + 1) * (n + 1));
        assert_eq!(m.num_edges(), 2 * n * (n + 1) + n * n);
        assert_eq!(m.num_edges(), 16);
        assert_eq!(m.num_cells(), 8);
        check_invariants(&m);
    }

    #[test]
    fn invariants_hold_across_sizes() {
        for kind in [CellKind::Triangle, CellKind::Quad] {
            for n in [1, 2, 3, 5, 8] {
                check_invariants(&Mesh::build_structured(n, kind).unwrap());
            }
        }
    }

    #[test]
    fn rejects_zero_subdivisions() {
        assert!(Mesh::build_structured(0, CellKind::Quad).is_err());
    }

    #[test]
    fn mesh_sizes() {
        let s2 = 2f64.sqrt();
        let h = |n, k| Mesh::build_structured(n, k).unwrap().mesh_size();
        assert!((h(1, CellKind::Quad) - s2).abs() < 1e-15);
        assert!((h(2, CellKind::Triangle) - s2 / 2.0).abs() < 1e-15);
        assert!((h(4, CellKind::Quad) - s2 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn edge_normal_is_clockwise_rotation_of_tangent() {
        let m = Mesh::build_structured(1, CellKind::Quad).unwrap();
        // Bottom edge runs 0 -> 1 along +x, so its normal points along -y.
        let e = m.cell_edges(0)[0].0;
        assert_eq!(m.edges()[e], [0, 1]);
        let nrm = m.edge_normal(e);
        assert!((nrm[0]).abs() < 1e-15 && (nrm[1] + 1.0).abs() < 1e-15);
        assert_eq!(m.cell_edges(0)[0].1, 1);
    }

    #[test]
    fn diagonal_runs_lower_left_to_upper_right() {
        let m = Mesh::build_structured(3, CellKind::Triangle).unwrap();
        for sq in 0..9 {
            let t = m.cell(2 * sq);
            let a = m.vertices()[t[0]];
            let c = m.vertices()[t[2]];
            assert!(c[0] > a[0] && c[1] > a[1]);
        }
    }
}
