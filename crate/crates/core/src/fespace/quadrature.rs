//! Quadrature on the reference triangle `{(0,0), (1,0), (0,1)}` and the
//! reference square `[0,1]^2`.

use crate::mesh::CellKind;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Rule integrating polynomials of total degree `degree` exactly on the
/// reference cell of `kind`.
pub fn quad_rule(kind: CellKind, degree: usize) -> Result<QuadRule> {
    if !(1..=4).contains(&degree) {
        return Err(Error::UnsupportedQuadrature(degree));
    }
    let (points, weights) = match kind {
        CellKind::Triangle => triangle_rule(degree),
        CellKind::Quad => {
            let n = match degree {
                1 => 1,
                2 | 3 => 2,
                _ => 3,
            };
            let (x, w) = gauss_legendre_unit(n);
            let mut pts = Vec::with_capacity(n * n);
            let mut wts = Vec::with_capacity(n * n);
            for j in 0..n {
                for i in 0..n {
                    pts.push([x[i], x[j]]);
                    wts.push(w[i] * w[j]);
                }
            }
            (pts, wts)
        }
    };
    Ok(QuadRule {
        points,
        weights,
        degree,
    })
}

/// Default degree: exact for products of two lowest-order basis functions
/// with constant coefficients, doubled (and capped at 4) when a coefficient
/// varies in space.
pub fn default_degree(kind: CellKind, varying_coefficients: bool) -> usize {
    let base = match kind {
        CellKind::Triangle => 2,
        CellKind::Quad => 3,
    };
    if varying_coefficients {
        (2 * base).min(4)
    } else {
        base
    }
}

fn triangle_rule(degree: usize) -> (Vec<[f64; 2]>, Vec<f64>) {
    match degree {
        1 => (vec![[1.0 / 3.0, 1.0 / 3.0]], vec![0.5]),
        2 => (
            vec![
                [1.0 / 6.0, 1.0 / 6.0],
                [2.0 / 3.0, 1.0 / 6.0],
                [1.0 / 6.0, 2.0 / 3.0],
            ],
            vec![1.0 / 6.0; 3],
        ),
        _ => {
            // Six-point symmetric rule, exact through degree 4.
            const A1: f64 = 0.445_948_490_915_964_9;
            const W1: f64 = 0.223_381_589_678_011_47;
            const A2: f64 = 0.091_576_213_509_770_74;
            const W2: f64 = 0.109_951_743_655_321_87;
            let mut pts = Vec::with_capacity(6);
            let mut wts = Vec::with_capacity(6);
            for (a, w) in [(A1, W1), (A2, W2)] {
                let b = 1.0 - 2.0 * a;
                pts.extend_from_slice(&[[a, a], [b, a], [a, b]]);
                wts.extend_from_slice(&[0.5 * w; 3]);
            }
            (pts, wts)
        }
    }
}

/// Gauss–Legendre points and weights mapped to `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    match n {
        1 => (vec![0.5], vec![1.0]),
        2 => {
            let d = 0.5 / 3f64.sqrt();
            (vec![0.5 - d, 0.5 + d], vec![0.5, 0.5])
        }
        3 => {
            let d = 0.5 * 0.6f64.sqrt();
            (
                vec![0.5 - d, 0.5, 0.5 + d],
                vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
            )
        }
        _ => unreachable!("only 1..=3 point rules are used"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact integral of x^a y^b over the reference triangle: a! b! / (a+b+2)!.
    fn tri_monomial(a: u32, b: u32) -> f64 {
        let f = |n: u32| (1..=n).map(f64::from).product::<f64>();
        f(a) * f(b) / f(a + b + 2)
    }

    fn integrate(rule: &QuadRule, a: i32, b: i32) -> f64 {
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| w * p[0].powi(a) * p[1].powi(b))
            .sum()
    }

    #[test]
    fn triangle_degree_two_rule() {
        let r = quad_rule(CellKind::Triangle, 2).unwrap();
        assert_eq!(r.len(), 3);
        assert!((r.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
        assert!((integrate(&r, 2, 0) - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn quad_degree_three_is_two_by_two_gauss() {
        let r = quad_rule(CellKind::Quad, 3).unwrap();
        assert_eq!(r.len(), 4);
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rules_are_exact_to_their_degree() {
        for degree in 1..=4 {
            let t = quad_rule(CellKind::Triangle, degree).unwrap();
            let q = quad_rule(CellKind::Quad, degree).unwrap();
            assert!(t.weights.iter().chain(&q.weights).all(|&w| w > 0.0));
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    let exact_t = tri_monomial(a, b);
                    assert!((integrate(&t, a as i32, b as i32) - exact_t).abs() < 1e-14);
                    let exact_q = 1.0 / f64::from((a + 1) * (b + 1));
                    assert!((integrate(&q, a as i32, b as i32) - exact_q).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn unsupported_degrees() {
        assert_eq!(
            quad_rule(CellKind::Quad, 0),
            Err(Error::UnsupportedQuadrature(0))
        );
        assert!(quad_rule(CellKind::Triangle, 5).is_err());
    }
}
