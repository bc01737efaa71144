//! Evaluable scalar functions on balls of ℝⁿ.
//!
//! A [`Func`] wraps a pure closure together with the radius of the ball it
//! is defined on. Evaluation outside that ball is an error. Functions built
//! from a [`FuncExpr`] keep the expression around so certificates can reason
//! about it symbolically (e.g. detect a constant envelope width).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::epi::{distance, norm, pos_part, Point};
use crate::error::{Error, Result};

type EvalFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

#[derive(Clone)]
pub struct Func {
    eval: Arc<EvalFn>,
    domain_radius: f64,
    label: String,
    expr: Option<FuncExpr>,
}

impl fmt::Debug for Func {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Func")
            .field("label", &self.label)
            .field("domain_radius", &self.domain_radius)
            .field("expr", &self.expr)
            .finish()
    }
}

impl Func {
    /// Wraps an arbitrary pure closure. The closure must be deterministic.
    pub fn new<F>(eval: F, domain_radius: f64, label: impl Into<String>) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        assert!(
            domain_radius.is_finite() && domain_radius > 0.0,
            "domain radius must be positive and finite"
        );
        Func {
            eval: Arc::new(eval),
            domain_radius,
            label: label.into(),
            expr: None,
        }
    }

    pub fn constant(value: f64, domain_radius: f64, label: impl Into<String>) -> Self {
        let mut f = Func::new(move |_| value, domain_radius, label);
        f.expr = Some(FuncExpr::Constant { value });
        f
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn expr(&self) -> Option<&FuncExpr> {
        self.expr.as_ref()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn eval(&self, x: &Point) -> Result<f64> {
        self.eval_slice(x.coords())
    }

    pub(crate) fn eval_slice(&self, x: &[f64]) -> Result<f64> {
        let n = norm(x);
        if !(n <= self.domain_radius) {
            return Err(Error::OutsideDomain {
                label: self.label.clone(),
                norm: n,
                radius: self.domain_radius,
            });
        }
        self.eval_inside(x)
    }

    /// Evaluates without the domain check; callers must have established
    /// `‖x‖ ≤ domain_radius` already.
    pub(crate) fn eval_inside(&self, x: &[f64]) -> Result<f64> {
        let v = (self.eval)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite {
                what: "function value",
                value: v,
            })
        }
    }

    /// Fails unless the closed ball of radius `radius` lies inside the domain.
    pub fn check_covers(&self, radius: f64) -> Result<()> {
        if radius <= self.domain_radius {
            Ok(())
        } else {
            Err(Error::OutsideDomain {
                label: self.label.clone(),
                norm: radius,
                radius: self.domain_radius,
            })
        }
    }
}

/// Named analytic function families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FuncExpr {
    /// `value`
    Constant { value: f64 },
    /// `scale · ‖x - center‖²` (center defaults to the origin)
    Quadratic {
        scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// `coeff · ‖x - center‖^exponent`
    Power {
        coeff: f64,
        exponent: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// `⟨slope, x⟩ + offset`
    Affine { slope: Vec<f64>, offset: f64 },
    /// `amplitude · max{0, 1 - ‖x - center‖ / rho}`
    Bump {
        amplitude: f64,
        center: Vec<f64>,
        rho: f64,
    },
    /// `(inner(x) - delta)_+`
    ClampShift { inner: Box<FuncExpr>, delta: f64 },
    /// `Σ terms`
    Sum { terms: Vec<FuncExpr> },
    /// `factor · inner(x)`
    Scale { factor: f64, inner: Box<FuncExpr> },
}

impl FuncExpr {
    /// Checks parameters against the ambient dimension.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let finite = |what: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::NonFinite { what, value: v })
            }
        };
        let vector = |v: &[f64]| -> Result<()> {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            v.iter().try_for_each(|&c| finite("vector entry", c))
        };
        match self {
            FuncExpr::Constant { value } => finite("constant", *value),
            FuncExpr::Quadratic { scale, center } => {
                finite("scale", *scale)?;
                center.as_deref().map_or(Ok(()), vector)
            }
            FuncExpr::Power {
                coeff,
                exponent,
                center,
            } => {
                finite("coeff", *coeff)?;
                crate::epi::positive("exponent", *exponent)?;
                center.as_deref().map_or(Ok(()), vector)
            }
            FuncExpr::Affine { slope, offset } => {
                finite("offset", *offset)?;
                vector(slope)
            }
            FuncExpr::Bump {
                amplitude,
                center,
                rho,
            } => {
                finite("amplitude", *amplitude)?;
                crate::epi::positive("rho", *rho)?;
                vector(center)
            }
            FuncExpr::ClampShift { inner, delta } => {
                finite("delta", *delta)?;
                inner.validate(dim)
            }
            FuncExpr::Sum { terms } => terms.iter().try_for_each(|t| t.validate(dim)),
            FuncExpr::Scale { factor, inner } => {
                finite("factor", *factor)?;
                inner.validate(dim)
            }
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            FuncExpr::Constant { value } => *value,
            FuncExpr::Quadratic { scale, center } => {
                let sq: f64 = match center.as_deref() {
                    Some(c) => x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum(),
                    None => x.iter().map(|a| a * a).sum(),
                };
                scale * sq
            }
            FuncExpr::Power {
                coeff,
                exponent,
                center,
            } => coeff * radial(x, center.as_deref()).powf(*exponent),
            FuncExpr::Affine { slope, offset } => {
                slope.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + offset
            }
            FuncExpr::Bump {
                amplitude,
                center,
                rho,
            } => amplitude * pos_part(1.0 - distance(x, center) / rho),
            FuncExpr::ClampShift { inner, delta } => pos_part(inner.evaluate(x) - delta),
            FuncExpr::Sum { terms } => terms.iter().map(|t| t.evaluate(x)).sum(),
            FuncExpr::Scale { factor, inner } => factor * inner.evaluate(x),
        }
    }

    pub fn build(&self, dim: usize, domain_radius: f64, label: impl Into<String>) -> Result<Func> {
        self.validate(dim)?;
        crate::epi::positive("domain_radius", domain_radius)?;
        let expr = self.clone();
        let mut f = Func::new(
            {
                let expr = expr.clone();
                move |x: &[f64]| expr.evaluate(x)
            },
            domain_radius,
            label,
        );
        f.expr = Some(expr);
        Ok(f)
    }

    /// Splits the expression into its non-constant summands and the sum of
    /// its constant summands (nested sums are flattened).
    fn split_constant(&self) -> (Vec<&FuncExpr>, f64) {
        let mut terms = Vec::new();
        let mut constant = 0.0;
        self.collect_terms(&mut terms, &mut constant);
        (terms, constant)
    }

    fn collect_terms<'a>(&'a self, terms: &mut Vec<&'a FuncExpr>, constant: &mut f64) {
        match self {
            FuncExpr::Constant { value } => *constant += value,
            FuncExpr::Sum { terms: inner } => {
                for t in inner {
                    t.collect_terms(terms, constant);
                }
            }
            other => terms.push(other),
        }
    }

    /// `Some(c)` when `other - self ≡ c` can be read off the expressions:
    /// both share the same non-constant summands and differ only in their
    /// constant parts.
    pub fn constant_offset_to(&self, other: &FuncExpr) -> Option<f64> {
        let (a, ca) = self.split_constant();
        let (b, cb) = other.split_constant();
        (a == b).then_some(cb - ca)
    }

    /// True when the supremum over a ball of this expression is attained on
    /// the base lattice: constants everywhere, affine maps in one dimension
    /// (the endpoints ±R are lattice nodes).
    pub fn is_grid_exact(&self, dim: usize) -> bool {
        match self {
            FuncExpr::Constant { .. } => true,
            FuncExpr::Affine { .. } => dim == 1,
            _ => false,
        }
    }
}

fn radial(x: &[f64], center: Option<&[f64]>) -> f64 {
    match center {
        Some(c) => distance(x, c),
        None => norm(x),
    }
}
