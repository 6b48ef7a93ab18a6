use std::fmt;
use std::sync::Arc;

use crate::{Error, Result};

type Field = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

/// Scalar coefficient: constant or evaluated at quadrature points.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Field(Field),
}

impl Coefficient {
    pub fn field(f: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Field(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Field(f) => f(x),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Coefficient::Constant(c) => Some(*c),
            Coefficient::Field(_) => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }
}

impl From<f64> for Coefficient {
    fn from(c: f64) -> Self {
        Coefficient::Constant(c)
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::Field(_) => f.write_str("Field(..)"),
        }
    }
}

/// Physical and discretization constants of the nondimensional tide model.
///
/// `half_step` is `k = Δt / 2`. The Coriolis parameter is assumed to satisfy
/// `|f| <= 1`, the drag `C >= 0`, and the rest depth `H > 0`.
#[derive(Debug, Clone)]
pub struct TideParams {
    /// Coriolis parameter `f`.
    pub coriolis: Coefficient,
    /// Rossby number `ε`.
    pub rossby: f64,
    /// Burger number `β`.
    pub burger: f64,
    /// Linear drag coefficient `C`.
    pub drag: Coefficient,
    /// Rest depth `H`.
    pub depth: Coefficient,
    /// `k = Δt / 2`.
    pub half_step: f64,
    /// Overrides the default quadrature degree when set.
    pub quad_degree: Option<usize>,
}

impl TideParams {
    /// Constant coefficients `f = C = H = 1`, `β = 0.1`, `ε = 0.01`.
    pub fn new(half_step: f64) -> Self {
        TideParams {
            coriolis: Coefficient::Constant(1.0),
            rossby: 0.01,
            burger: 0.1,
            drag: Coefficient::Constant(1.0),
            depth: Coefficient::Constant(1.0),
            half_step,
            quad_degree: None,
        }
    }

    pub fn with_rossby(mut self, eps: f64) -> Self {
        self.rossby = eps;
        self
    }

    pub fn with_burger(mut self, beta: f64) -> Self {
        self.burger = beta;
        self
    }

    pub fn with_coriolis(mut self, f: impl Into<Coefficient>) -> Self {
        self.coriolis = f.into();
        self
    }

    pub fn with_drag(mut self, c: impl Into<Coefficient>) -> Self {
        self.drag = c.into();
        self
    }

    pub fn with_depth(mut self, h: impl Into<Coefficient>) -> Self {
        self.depth = h.into();
        self
    }

    pub fn with_half_step(mut self, k: f64) -> Self {
        self.half_step = k;
        self
    }

    pub fn with_quad_degree(mut self, degree: Option<usize>) -> Self {
        self.quad_degree = degree;
        self
    }

    /// `β / ε²`.
    pub fn pressure_scale(&self) -> f64 {
        self.burger / (self.rossby * self.rossby)
    }

    /// `β k / ε²`.
    pub fn coupling_scale(&self) -> f64 {
        self.pressure_scale() * self.half_step
    }

    pub fn has_varying_coefficients(&self) -> bool {
        !(self.coriolis.is_constant() && self.drag.is_constant() && self.depth.is_constant())
    }

    /// Largest constant drag, when the drag is constant.
    pub fn max_drag(&self) -> Option<f64> {
        self.drag.as_constant()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.rossby > 0.0) {
            return bad(format!(
                "Rossby number must be positive, got {}",
                self.rossby
            ));
        }
        if !(self.burger > 0.0) {
            return bad(format!(
                "Burger number must be positive, got {}",
                self.burger
            ));
        }
        if !(self.half_step > 0.0) || !self.half_step.is_finite() {
            return bad(format!(
                "half step must be positive, got {}",
                self.half_step
            ));
        }
        if let Some(h) = self.depth.as_constant() {
            if !(h > 0.0) {
                return bad(format!("depth must be positive, got {h}"));
            }
        }
        if let Some(c) = self.drag.as_constant() {
            if !(c >= 0.0) {
                return bad(format!("drag must be nonnegative, got {c}"));
            }
        }
        if let Some(f) = self.coriolis.as_constant() {
            if f.abs() > 1.0 {
                return bad(format!("|f| must not exceed 1, got {f}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scales() {
        let p = TideParams::new(0.5).with_burger(0.1).with_rossby(0.1);
        assert!((p.pressure_scale() - 10.0).abs() < 1e-12);
        assert!((p.coupling_scale() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(TideParams::new(0.1).validate().is_ok());
        assert!(TideParams::new(0.0).validate().is_err());
        assert!(TideParams::new(0.1).with_rossby(0.0).validate().is_err());
        assert!(TideParams::new(0.1).with_depth(-1.0).validate().is_err());
        assert!(TideParams::new(0.1).with_drag(-0.5).validate().is_err());
        assert!(TideParams::new(0.1).with_coriolis(1.5).validate().is_err());
    }

    #[test]
    fn fields_are_evaluated() {
        let c = Coefficient::field(|x| x[0] + 2.0 * x[1]);
        assert_eq!(c.eval([1.0, 1.0]), 3.0);
        assert!(!c.is_constant());
        assert!(TideParams::new(0.1)
            .with_depth(c)
            .has_varying_coefficients());
    }
}
