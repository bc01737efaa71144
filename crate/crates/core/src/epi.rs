//! Vertical distance to an epigraph, the cylinder `C_{R,M}` and the
//! localized vertical epigraphic gauge.
//!
//! For a real function `F` the vertical distance from `(x, t)` to `epi F`
//! at fixed base point is `(F(x) - t)_+`. The gauge between two functions
//! on the cylinder `{ ‖x‖ ≤ R, |t| ≤ M }` is the supremum of the absolute
//! difference of their vertical distances.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::Func;

/// Absolute slack used when asserting certified inequalities on
/// floating-point data.
pub const TAU: f64 = 1e-12;

/// A point of ℝⁿ with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        if let Some(&bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                what: "coordinate",
                value: bad,
            });
        }
        Ok(Point(coords))
    }

    /// One-dimensional point. Panics on non-finite input.
    pub fn scalar(x: f64) -> Self {
        Point::new(vec![x]).expect("finite scalar")
    }

    /// Origin of ℝⁿ.
    pub fn origin(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        Point(vec![0.0; dim])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn distance(&self, other: &Point) -> f64 {
        distance(&self.0, &other.0)
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Point::new(coords)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub(crate) fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// The cylinder `C_{R,M} = { (x, t) : ‖x‖ ≤ R, |t| ≤ M }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cylinder {
    /// Base radius `R`.
    pub radius: f64,
    /// Level bound `M`.
    pub level: f64,
}

impl Cylinder {
    pub fn new(radius: f64, level: f64) -> Result<Self> {
        let cyl = Cylinder { radius, level };
        cyl.validate()?;
        Ok(cyl)
    }

    pub fn validate(&self) -> Result<()> {
        positive("radius", self.radius)?;
        positive("level", self.level)
    }

    pub fn contains_base(&self, x: &Point) -> bool {
        x.norm() <= self.radius
    }

    pub fn contains_level(&self, t: f64) -> bool {
        t.abs() <= self.level
    }

    pub fn contains(&self, x: &Point, t: f64) -> bool {
        self.contains_base(x) && self.contains_level(t)
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::NonFinite { what: name, value });
    }
    if value <= 0.0 {
        return Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive",
        });
    }
    Ok(())
}

pub(crate) fn nonnegative(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::NonFinite { what: name, value });
    }
    if value < 0.0 {
        return Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be nonnegative",
        });
    }
    Ok(())
}

/// Which certificate pattern produced a [`GaugeBound`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// A caller-certified uniform value bound on the base ball.
    ValueBound,
    /// Width of a bracketing envelope (possibly aggregated from a cover).
    Envelope,
    /// Supremum of a vertical tolerance field on the cylinder.
    ToleranceField,
    /// Taken on trust, nothing certifies it.
    Assumed,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Provenance::ValueBound => "value_bound",
            Provenance::Envelope => "envelope",
            Provenance::ToleranceField => "tolerance_field",
            Provenance::Assumed => "assumed",
        };
        f.write_str(s)
    }
}

/// A scalar `δ` with `G_{R,M}(F, F̃) ≤ δ`, tagged with where it came from.
///
/// `certified` is false when `δ` is only a finite-sample estimate of a
/// supremum (a lower bound of the true value) or was assumed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeBound {
    pub delta: f64,
    pub cylinder: Cylinder,
    pub provenance: Provenance,
    pub certified: bool,
    pub detail: String,
}

impl GaugeBound {
    pub fn new(
        delta: f64,
        cylinder: Cylinder,
        provenance: Provenance,
        certified: bool,
        detail: impl Into<String>,
    ) -> Result<Self> {
        nonnegative("delta", delta)?;
        cylinder.validate()?;
        Ok(GaugeBound {
            delta,
            cylinder,
            provenance,
            certified: certified && provenance != Provenance::Assumed,
            detail: detail.into(),
        })
    }

    /// A bound nothing certifies.
    pub fn assumed(delta: f64, cylinder: Cylinder) -> Result<Self> {
        GaugeBound::new(
            delta,
            cylinder,
            Provenance::Assumed,
            false,
            "assumed, not certified",
        )
    }
}

/// `(r)_+ = max{r, 0}`.
#[inline]
pub fn pos_part(r: f64) -> f64 {
    if r > 0.0 {
        r
    } else {
        0.0
    }
}

/// `inf_{s ≥ f_value} |t - s| = (f_value - t)_+`.
#[inline]
pub fn vertical_distance(f_value: f64, t: f64) -> f64 {
    pos_part(f_value - t)
}

/// `|d_F(x, t) - d_G(x, t)|` given `F(x) = fa` and `G(x) = fb`.
///
/// Evaluated as `(max(fa, fb) - max(min(fa, fb), t))_+`, which equals
/// `|(fa - t)_+ - (fb - t)_+|` and, by monotonicity of rounding, never
/// exceeds the computed `|fa - fb|`.
#[inline]
pub fn pointwise_discrepancy(fa: f64, fb: f64, t: f64) -> f64 {
    let (hi, lo) = if fa >= fb { (fa, fb) } else { (fb, fa) };
    pos_part(hi - lo.max(t))
}

/// A certified uniform value bound `sup_{‖x‖≤R} |F - F̃| ≤ eps` bounds the
/// gauge by the same `eps`, since `u ↦ (u - t)_+` is 1-Lipschitz.
pub fn gauge_from_value_bound(eps: f64, cyl: Cylinder) -> Result<GaugeBound> {
    nonnegative("eps", eps)?;
    GaugeBound::new(
        eps,
        cyl,
        Provenance::ValueBound,
        true,
        format!("uniform value bound {eps} on B(0, {})", cyl.radius),
    )
}

/// The gauge integrand at base point `x` along the given levels.
pub fn discrepancy_profile(f: &Func, g: &Func, x: &Point, t_samples: &[f64]) -> Result<Vec<f64>> {
    if let Some(&bad) = t_samples.iter().find(|t| !t.is_finite()) {
        return Err(Error::NonFinite {
            what: "level sample",
            value: bad,
        });
    }
    let fa = f.eval(x)?;
    let fb = g.eval(x)?;
    Ok(t_samples
        .iter()
        .map(|&t| pointwise_discrepancy(fa, fb, t))
        .collect())
}
