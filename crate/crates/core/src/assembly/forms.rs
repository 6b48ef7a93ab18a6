use std::sync::Arc;

use rayon::prelude::*;

use crate::fespace::{quad_rule, BasisTable, DofMap, FeFamily};
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Pointwise scalar weight.
pub type ScalarFn<'a> = &'a (dyn Fn([f64; 2]) -> f64 + Sync);

/// Generic cell loop for bilinear forms on one space. `kernel` fills the
/// local matrix `local[i * nb + j]` (row = test function `i`, column = trial
/// function `j`) from the signed, Piola-mapped table of cell `c`.
pub(crate) fn assemble_bilinear<K>(v: &DofMap, degree: usize, kernel: K) -> Result<CsrMatrix>
where
    K: Fn(usize, &BasisTable, &mut [f64]) + Sync,
{
    let rule = quad_rule(v.mesh().cell_kind(), degree)?;
    let nb = v.dofs_per_cell();
    let ncells = v.mesh().num_cells();
    let per_cell: Vec<Vec<(usize, usize, f64)>> = (0..ncells)
        .into_par_iter()
        .map(|c| {
            let table = v.tabulate(c, &rule)?;
            let mut local = vec![0.0; nb * nb];
            kernel(c, &table, &mut local);
            let dofs = v.cell_dofs(c);
            let mut trips = Vec::with_capacity(nb * nb);
            for (i, &(gi, _)) in dofs.iter().enumerate() {
                for (j, &(gj, _)) in dofs.iter().enumerate() {
                    trips.push((gi, gj, local[i * nb + j]));
                }
            }
            Ok(trips)
        })
        .collect::<Result<_>>()?;
    let trips: Vec<_> = per_cell.into_iter().flatten().collect();
    Ok(CsrMatrix::from_triplets(v.ndofs(), v.ndofs(), &trips))
}

fn require_rt(v: &DofMap) -> Result<()> {
    if v.family().is_rt() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "expected an RT space, got {}",
            v.family().name()
        )))
    }
}

fn require_dg0(w: &DofMap) -> Result<()> {
    if w.family() == FeFamily::Dg0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "expected a DG0 space, got {}",
            w.family().name()
        )))
    }
}

fn same_mesh(v: &DofMap, w: &DofMap) -> bool {
    let (a, b) = (v.mesh(), w.mesh());
    Arc::ptr_eq(a, b)
        || (a.cell_kind() == b.cell_kind()
            && a.subdivisions() == b.subdivisions()
            && a.num_cells() == b.num_cells()
            && a.num_edges() == b.num_edges())
}

/// `(w ψ_j, ψ_i)`.
pub fn assemble_weighted_vector_mass(v: &DofMap, w: ScalarFn, degree: usize) -> Result<CsrMatrix> {
    require_rt(v)?;
    let nb = v.dofs_per_cell();
    assemble_bilinear(v, degree, |_, t, local| {
        for q in 0..t.num_points() {
            let s = t.weights[q] * w(t.points[q]);
            for i in 0..nb {
                let vi = t.value(q, i);
                for j in 0..nb {
                    let vj = t.value(q, j);
                    local[i * nb + j] += s * (vi[0] * vj[0] + vi[1] * vj[1]);
                }
            }
        }
    })
}

/// `(c ψ_j^⊥, ψ_i)` with `u^⊥ = (-u₂, u₁)`.
pub fn assemble_coriolis(v: &DofMap, c: ScalarFn, degree: usize) -> Result<CsrMatrix> {
    require_rt(v)?;
    let nb = v.dofs_per_cell();
    assemble_bilinear(v, degree, |_, t, local| {
        for q in 0..t.num_points() {
            let s = t.weights[q] * c(t.points[q]);
            for i in 0..nb {
                let vi = t.value(q, i);
                for j in 0..nb {
                    let vj = t.value(q, j);
                    local[i * nb + j] += s * (vi[1] * vj[0] - vi[0] * vj[1]);
                }
            }
        }
    })
}

/// `c (div ψ_j, div ψ_i)`.
pub fn assemble_divdiv(v: &DofMap, c: f64) -> Result<CsrMatrix> {
    require_rt(v)?;
    if !(c >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "div-div scale must be nonnegative, got {c}"
        )));
    }
    let nb = v.dofs_per_cell();
    assemble_bilinear(v, 1, |_, t, local| {
        for q in 0..t.num_points() {
            let s = c * t.weights[q];
            for i in 0..nb {
                for j in 0..nb {
                    local[i * nb + j] += s * t.div(q, i) * t.div(q, j);
                }
            }
        }
    })
}

/// `(K ψ_j, ψ_i)` for a 2×2 tensor `K(cell, q)` given per quadrature point.
pub fn assemble_tensor_mass<K>(v: &DofMap, degree: usize, tensor: K) -> Result<CsrMatrix>
where
    K: Fn(usize, usize, [f64; 2]) -> [[f64; 2]; 2] + Sync,
{
    require_rt(v)?;
    let nb = v.dofs_per_cell();
    assemble_bilinear(v, degree, |c, t, local| {
        for q in 0..t.num_points() {
            let k = tensor(c, q, t.points[q]);
            let w = t.weights[q];
            for j in 0..nb {
                let vj = t.value(q, j);
                let kv = [
                    k[0][0] * vj[0] + k[0][1] * vj[1],
                    k[1][0] * vj[0] + k[1][1] * vj[1],
                ];
                for i in 0..nb {
                    let vi = t.value(q, i);
                    local[i * nb + j] += w * (vi[0] * kv[0] + vi[1] * kv[1]);
                }
            }
        }
    })
}

/// `D_{ij} = (div ψ_j, φ_i)`, rows indexed by cells.
pub fn assemble_div(v: &DofMap, w: &DofMap) -> Result<CsrMatrix> {
    require_rt(v)?;
    require_dg0(w)?;
    if !same_mesh(v, w) {
        return Err(Error::InvalidArgument(
            "velocity and elevation spaces live on different meshes".into(),
        ));
    }
    let rule = quad_rule(v.mesh().cell_kind(), 1)?;
    let ncells = v.mesh().num_cells();
    let mut trips = Vec::with_capacity(ncells * v.dofs_per_cell());
    for c in 0..ncells {
        let t = v.tabulate(c, &rule)?;
        let row = w.cell_dofs(c)[0].0;
        for (i, &(gi, _)) in v.cell_dofs(c).iter().enumerate() {
            let s: f64 = (0..t.num_points())
                .map(|q| t.weights[q] * t.div(q, i))
                .sum();
            trips.push((row, gi, s));
        }
    }
    Ok(CsrMatrix::from_triplets(w.ndofs(), v.ndofs(), &trips))
}

/// `c (φ_j, φ_i)`: diagonal of scaled cell areas.
pub fn assemble_scalar_mass(w: &DofMap, c: f64) -> Result<CsrMatrix> {
    require_dg0(w)?;
    let mesh = w.mesh();
    let mut diag = vec![0.0; w.ndofs()];
    for cell in 0..mesh.num_cells() {
        diag[w.cell_dofs(cell)[0].0] = c * mesh.cell_area(cell);
    }
    Ok(CsrMatrix::from_diagonal(&diag))
}

/// `(F, ψ_i)` for a vector field `F`.
pub fn assemble_vector_load(
    v: &DofMap,
    field: &(dyn Fn([f64; 2]) -> [f64; 2] + Sync),
    degree: usize,
) -> Result<Vec<f64>> {
    require_rt(v)?;
    let rule = quad_rule(v.mesh().cell_kind(), degree)?;
    let per_cell: Vec<Vec<(usize, f64)>> = (0..v.mesh().num_cells())
        .into_par_iter()
        .map(|c| {
            let t = v.tabulate(c, &rule)?;
            let dofs = v.cell_dofs(c);
            let mut out: Vec<(usize, f64)> = dofs.iter().map(|&(g, _)| (g, 0.0)).collect();
            for q in 0..t.num_points() {
                let f = field(t.points[q]);
                for (i, slot) in out.iter_mut().enumerate() {
                    let vi = t.value(q, i);
                    slot.1 += t.weights[q] * (f[0] * vi[0] + f[1] * vi[1]);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut b = vec![0.0; v.ndofs()];
    for (g, val) in per_cell.into_iter().flatten() {
        b[g] += val;
    }
    Ok(b)
}

/// `(G, φ_i)` for a scalar field `G` on a DG0 space.
pub fn assemble_scalar_load(w: &DofMap, field: ScalarFn, degree: usize) -> Result<Vec<f64>> {
    require_dg0(w)?;
    let rule = quad_rule(w.mesh().cell_kind(), degree)?;
    let mut b = vec![0.0; w.ndofs()];
    for c in 0..w.mesh().num_cells() {
        let (pts, wts) = w.cell_quadrature(c, &rule)?;
        b[w.cell_dofs(c)[0].0] += pts
            .iter()
            .zip(&wts)
            .map(|(p, wt)| wt * field(*p))
            .sum::<f64>();
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense;
    use crate::mesh::{CellKind, Mesh};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spaces(n: usize, kind: CellKind) -> (DofMap, DofMap) {
        let mesh = Arc::new(Mesh::build_structured(n, kind).unwrap());
        (
            DofMap::new(mesh.clone(), FeFamily::rt_for(kind)).unwrap(),
            DofMap::new(mesh, FeFamily::Dg0).unwrap(),
        )
    }

    fn quadratic_form(a: &CsrMatrix, x: &[f64]) -> f64 {
        let ax = a.spmv(x).unwrap();
        ax.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn single_square_mass_is_symmetric() {
        let (v, _) = spaces(1, CellKind::Quad);
        let m = assemble_weighted_vector_mass(&v, &|_| 1.0, 3).unwrap();
        for i in 0..4 {
            assert!(m.get(i, i) > 0.0);
            for j in 0..4 {
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
    }

    #[test]
    fn constant_field_has_unit_norm() {
        for kind in [CellKind::Triangle, CellKind::Quad] {
            for n in [1, 3, 6] {
                let (v, _) = spaces(n, kind);
                let m = assemble_weighted_vector_mass(&v, &|_| 1.0, 2).unwrap();
                let u = v.interpolate(|_| [1.0, 0.0]).unwrap();
                assert!((quadratic_form(&m, &u) - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn mass_is_linear_in_weight() {
        let (v, _) = spaces(3, CellKind::Triangle);
        let one = assemble_weighted_vector_mass(&v, &|_| 1.0, 2).unwrap();
        let half = assemble_weighted_vector_mass(&v, &|_| 1.0 / 2.0, 2).unwrap();
        for (a, b) in one.values().iter().zip(half.values()) {
            assert_eq!(0.5 * a, *b);
        }
    }

    #[test]
    fn coriolis_is_skew() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for kind in [CellKind::Triangle, CellKind::Quad] {
            let (v, _) = spaces(4, kind);
            let s = assemble_coriolis(&v, &|x| 0.5 + x[0] * x[1], 4).unwrap();
            let sum = s.linear_combination(1.0, &s.transpose(), 1.0).unwrap();
            assert!(sum.max_abs() <= 1e-13 * s.max_abs());
            for _ in 0..10 {
                let x: Vec<f64> = (0..v.ndofs())
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect();
                assert!(quadratic_form(&s, &x).abs() < 1e-13);
            }
            let zero = assemble_coriolis(&v, &|_| 0.0, 2).unwrap();
            assert_eq!(zero.max_abs(), 0.0);
        }
    }

    #[test]
    fn div_column_sums_follow_divergence_theorem() {
        for kind in [CellKind::Triangle, CellKind::Quad] {
            let (v, w) = spaces(3, kind);
            let d = assemble_div(&v, &w).unwrap();
            let ones = vec![1.0; w.ndofs()];
            let mut sums = vec![0.0; v.ndofs()];
            d.mul_transpose_add_to(1.0, &ones, &mut sums);
            let mesh = v.mesh();
            for (e, s) in sums.iter().enumerate() {
                if mesh.is_boundary_edge(e) {
                    let n = mesh.edge_normal(e);
                    let [a, b] = mesh.edges()[e];
                    let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
                    let mid = [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0];
                    let outward = if mid[0] == 0.0 {
                        [-1.0, 0.0]
                    } else if mid[0] == 1.0 {
                        [1.0, 0.0]
                    } else if mid[1] == 0.0 {
                        [0.0, -1.0]
                    } else {
                        [0.0, 1.0]
                    };
                    let expected = n[0] * outward[0] + n[1] * outward[1];
                    assert!((s - expected).abs() < 1e-13, "edge {e}: {s} vs {expected}");
                } else {
                    assert!(s.abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn div_of_interpolant_is_exact() {
        let (v, w) = spaces(4, CellKind::Triangle);
        let d = assemble_div(&v, &w).unwrap();
        let u = v.interpolate(|x| [x[0], 0.0]).unwrap();
        let du = d.spmv(&u).unwrap();
        for c in 0..w.ndofs() {
            assert!((du[c] - v.mesh().cell_area(c)).abs() < 1e-14);
        }
    }

    #[test]
    fn div_has_full_row_rank() {
        for kind in [CellKind::Triangle, CellKind::Quad] {
            for n in 1..=4 {
                let (v, w) = spaces(n, kind);
                let d = dense::to_dense(&assemble_div(&v, &w).unwrap());
                assert_eq!(dense::rank(&d, 1e-10), w.ndofs());
            }
        }
    }

    #[test]
    fn divdiv_matches_div_identity() {
        for kind in [CellKind::Triangle, CellKind::Quad] {
            for n in 1..=4 {
                let (v, w) = spaces(n, kind);
                let dd = assemble_divdiv(&v, 1.0).unwrap();
                let d = assemble_div(&v, &w).unwrap();
                let m = assemble_scalar_mass(&w, 1.0).unwrap();
                let inv: Vec<f64> = m.diagonal().iter().map(|x| 1.0 / x).collect();
                let scaled = CsrMatrix::from_diagonal(&inv);
                let dt = d.transpose();
                let tmp = dense::to_dense(&dt) * dense::to_dense(&scaled) * dense::to_dense(&d);
                let diff = (dense::to_dense(&dd) - tmp).abs().max();
                assert!(diff <= 1e-13 * dd.max_abs(), "{diff}");
                assert_eq!(assemble_divdiv(&v, 0.0).unwrap().max_abs(), 0.0);
            }
        }
    }

    #[test]
    fn divdiv_vanishes_on_kernel() {
        let (v, w) = spaces(3, CellKind::Quad);
        let d = dense::to_dense(&assemble_div(&v, &w).unwrap());
        let dd = assemble_divdiv(&v, 1.0).unwrap();
        let svd = d.clone().svd(false, true);
        let vt = svd.v_t.unwrap();
        let rank = dense::rank(&d, 1e-10);
        for r in rank..vt.nrows() {
            let x: Vec<f64> = vt.row(r).iter().copied().collect();
            assert!(quadratic_form(&dd, &x).abs() < 1e-12);
        }
    }

    #[test]
    fn scalar_mass_examples() {
        let (_, w) = spaces(1, CellKind::Triangle);
        assert_eq!(
            assemble_scalar_mass(&w, 1.0).unwrap().diagonal(),
            vec![0.5, 0.5]
        );
        let (_, w) = spaces(2, CellKind::Quad);
        assert_eq!(
            assemble_scalar_mass(&w, 4.0).unwrap().diagonal(),
            vec![1.0; 4]
        );
        let (_, w) = spaces(5, CellKind::Triangle);
        let tr: f64 = assemble_scalar_mass(&w, 3.0)
            .unwrap()
            .diagonal()
            .iter()
            .sum();
        assert!((tr - 3.0).abs() < 1e-13);
    }

    #[test]
    fn mismatched_spaces_are_rejected() {
        let (v, _) = spaces(2, CellKind::Triangle);
        let (_, w) = spaces(3, CellKind::Triangle);
        assert!(assemble_div(&v, &w).is_err());
        assert!(assemble_div(&v, &v).is_err());
        assert!(assemble_scalar_mass(&v, 1.0).is_err());
    }

    #[test]
    fn vector_load_of_constant_matches_mass_action() {
        let (v, _) = spaces(3, CellKind::Quad);
        let m = assemble_weighted_vector_mass(&v, &|_| 1.0, 3).unwrap();
        let u = v.interpolate(|_| [0.3, -1.2]).unwrap();
        let mu = m.spmv(&u).unwrap();
        let b = assemble_vector_load(&v, &|_| [0.3, -1.2], 3).unwrap();
        for (a, c) in mu.iter().zip(&b) {
            assert!((a - c).abs() < 1e-14);
        }
    }
}
