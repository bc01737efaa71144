//! Certificate patterns that yield a computable bound on the gauge.
//!
//! * a bracketing envelope `F⁻ ≤ F, F̃ ≤ F⁺` on a region bounds the gauge by
//!   the envelope width;
//! * neighborhood-wise envelopes are aggregated into one envelope on the
//!   covered region (max of active lowers, min of active uppers);
//! * a vertical tolerance field bounds the gauge by its supremum.
//!
//! A supremum taken over a lattice is only reported as certified when the
//! inputs are declared grid-exact, i.e. the maximum is known to be attained
//! at a lattice node. Otherwise the bound is flagged as a grid estimate.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::epi::{norm, positive, Cylinder, GaugeBound, Point, Provenance};
use crate::error::{Error, Result};
use crate::func::{Func, FuncExpr};
use crate::oracle::{Grid, LevelGrid};

pub const GRID_ESTIMATE: &str = "grid estimate (lower bound of true sup)";

/// Certified bracketing `lower ≤ F ≤ upper` on `B(0, region_radius)`.
#[derive(Debug, Clone)]
pub struct EnvelopeCert {
    dim: usize,
    region_radius: f64,
    lower: Func,
    upper: Func,
    grid_exact: bool,
    symbolic_width: Option<f64>,
}

impl EnvelopeCert {
    /// Builds the certificate and checks `lower ≤ upper` on the lattice of
    /// step `validation_step` over the region.
    pub fn new(
        dim: usize,
        region_radius: f64,
        lower: Func,
        upper: Func,
        validation_step: f64,
    ) -> Result<Self> {
        positive("region_radius", region_radius)?;
        lower.check_covers(region_radius)?;
        upper.check_covers(region_radius)?;
        let grid = Grid::new(dim, region_radius, validation_step)?;
        check_order(&grid, &lower, &upper)?;

        let (symbolic_width, grid_exact) = match (lower.expr(), upper.expr()) {
            (Some(lo), Some(up)) => {
                let offset = lo.constant_offset_to(up);
                let exact = offset.is_some() || (lo.is_grid_exact(dim) && up.is_grid_exact(dim));
                (offset, exact)
            }
            _ => (None, false),
        };
        Ok(EnvelopeCert {
            dim,
            region_radius,
            lower,
            upper,
            grid_exact,
            symbolic_width,
        })
    }

    /// Overrides the grid-exactness inferred from the envelope expressions.
    pub fn declare_grid_exact(mut self, exact: bool) -> Self {
        self.grid_exact = exact;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn region_radius(&self) -> f64 {
        self.region_radius
    }

    pub fn lower(&self) -> &Func {
        &self.lower
    }

    pub fn upper(&self) -> &Func {
        &self.upper
    }

    pub fn is_grid_exact(&self) -> bool {
        self.grid_exact
    }
}

fn check_order(grid: &Grid, lower: &Func, upper: &Func) -> Result<()> {
    let rows: Vec<(Vec<f64>, f64, f64)> = grid
        .par_points()
        .map(|x| {
            let lo = lower.eval_inside(&x)?;
            let up = upper.eval_inside(&x)?;
            Ok((x, lo, up))
        })
        .collect::<Result<_>>()?;
    match rows.into_iter().find(|(_, lo, up)| lo > up) {
        Some((point, lower, upper)) => Err(Error::EnvelopeOrder {
            point,
            lower,
            upper,
        }),
        None => Ok(()),
    }
}

fn check_region(cyl: &Cylinder, region_radius: f64) -> Result<()> {
    cyl.validate()?;
    if cyl.radius > region_radius {
        Err(Error::CylinderExceedsRegion {
            radius: cyl.radius,
            region: region_radius,
        })
    } else {
        Ok(())
    }
}

/// `δ = sup_{‖x‖≤R} (F⁺ - F⁻)` over the base lattice; bounds the gauge for
/// every level `M` once both functions are bracketed.
pub fn envelope_width_bound(cert: &EnvelopeCert, cyl: Cylinder, grid_step: f64) -> Result<GaugeBound> {
    check_region(&cyl, cert.region_radius)?;
    let grid = Grid::new(cert.dim, cyl.radius, grid_step)?;
    let width = grid
        .par_points()
        .map(|x| Ok(cert.upper.eval_inside(&x)? - cert.lower.eval_inside(&x)?))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    let delta = match cert.symbolic_width {
        Some(w) => width.max(w),
        None => width,
    };
    let detail = if let Some(w) = cert.symbolic_width {
        format!("constant envelope width {w} (lattice step {grid_step})")
    } else if cert.grid_exact {
        format!("envelope width maximum attained on lattice of step {grid_step}")
    } else {
        format!("{GRID_ESTIMATE}; envelope width on lattice of step {grid_step}")
    };
    GaugeBound::new(
        delta.max(0.0),
        cyl,
        Provenance::Envelope,
        cert.grid_exact,
        detail,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct BracketFailure {
    pub point: Point,
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
}

/// Grid points where `lower ≤ candidate ≤ upper` fails.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketingReport {
    pub label: String,
    pub checked: usize,
    pub failures: Vec<BracketFailure>,
}

impl BracketingReport {
    pub fn passes(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for BracketingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "bracketing of `{}`: {} of {} lattice points fail",
            self.label,
            self.failures.len(),
            self.checked
        )
    }
}

pub fn validate_bracketing(
    cert: &EnvelopeCert,
    candidate: &Func,
    cyl: Cylinder,
    grid_step: f64,
) -> Result<BracketingReport> {
    check_region(&cyl, cert.region_radius)?;
    candidate.check_covers(cyl.radius)?;
    let grid = Grid::new(cert.dim, cyl.radius, grid_step)?;
    let rows: Vec<Option<BracketFailure>> = grid
        .par_points()
        .map(|x| {
            let lower = cert.lower.eval_inside(&x)?;
            let upper = cert.upper.eval_inside(&x)?;
            let value = candidate.eval_inside(&x)?;
            if lower <= value && value <= upper {
                return Ok(None);
            }
            Ok(Some(BracketFailure {
                point: Point::new(x)?,
                lower,
                value,
                upper,
            }))
        })
        .collect::<Result<_>>()?;
    Ok(BracketingReport {
        label: candidate.label().to_string(),
        checked: rows.len(),
        failures: rows.into_iter().flatten().collect(),
    })
}

/// Envelope `lower ≤ F ≤ upper` certified on the closed ball
/// `B(center, radius)`.
#[derive(Debug, Clone)]
pub struct LocalCert {
    center: Point,
    radius: f64,
    lower: Func,
    upper: Func,
}

impl LocalCert {
    /// Checks `lower ≤ upper` on a lattice of `D_i` with 50 steps per radius.
    pub fn new(center: Point, radius: f64, lower: Func, upper: Func) -> Result<Self> {
        positive("local radius", radius)?;
        let reach = center.norm() + radius;
        lower.check_covers(reach)?;
        upper.check_covers(reach)?;
        let grid = Grid::new(center.dim(), radius, radius / 50.0)?;
        let shifted: Vec<Vec<f64>> = grid
            .points()
            .map(|d| d.iter().zip(center.coords()).map(|(a, c)| a + c).collect())
            .collect();
        for x in shifted {
            // shifted lattice points may round just outside the domain ball
            if norm(&x) > lower.domain_radius().min(upper.domain_radius()) {
                continue;
            }
            let lo = lower.eval_inside(&x)?;
            let up = upper.eval_inside(&x)?;
            if lo > up {
                return Err(Error::EnvelopeOrder {
                    point: x,
                    lower: lo,
                    upper: up,
                });
            }
        }
        Ok(LocalCert {
            center,
            radius,
            lower,
            upper,
        })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn lower(&self) -> &Func {
        &self.lower
    }

    pub fn upper(&self) -> &Func {
        &self.upper
    }

    /// Closed-ball membership.
    pub fn is_active(&self, x: &Point) -> bool {
        x.distance(&self.center) <= self.radius
    }
}

#[derive(Debug, Clone)]
pub struct Cover {
    certs: Vec<LocalCert>,
}

impl Cover {
    pub fn new(certs: Vec<LocalCert>) -> Result<Self> {
        let first = certs.first().ok_or(Error::EmptyCover)?;
        let dim = first.center.dim();
        if let Some(bad) = certs.iter().find(|c| c.center.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.center.dim(),
            });
        }
        Ok(Cover { certs })
    }

    pub fn certs(&self) -> &[LocalCert] {
        &self.certs
    }

    pub fn dim(&self) -> usize {
        self.certs[0].center.dim()
    }
}

/// Pointwise aggregation of a [`Cover`]: `F⁻ = max` of active lowers,
/// `F⁺ = min` of active uppers.
#[derive(Debug, Clone)]
pub struct AggregatedEnvelope {
    cover: Arc<Cover>,
}

pub fn aggregate_cover(cover: Cover) -> AggregatedEnvelope {
    AggregatedEnvelope {
        cover: Arc::new(cover),
    }
}

impl AggregatedEnvelope {
    pub fn cover(&self) -> &Cover {
        &self.cover
    }

    /// Indices of the certificates whose neighborhood contains `x`.
    pub fn active(&self, x: &Point) -> Vec<usize> {
        self.cover
            .certs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_active(x))
            .map(|(i, _)| i)
            .collect()
    }

    fn raw_bounds(&self, x: &Point) -> Result<(f64, f64)> {
        let mut lower = f64::NEG_INFINITY;
        let mut upper = f64::INFINITY;
        let mut any = false;
        for c in self.cover.certs.iter().filter(|c| c.is_active(x)) {
            any = true;
            lower = lower.max(c.lower.eval(x)?);
            upper = upper.min(c.upper.eval(x)?);
        }
        if any {
            Ok((lower, upper))
        } else {
            Err(Error::OutsideCover {
                point: x.coords().to_vec(),
            })
        }
    }

    /// `(F⁻(x), F⁺(x))`. Fails outside the covered region and when the
    /// active certificates contradict each other.
    pub fn bounds(&self, x: &Point) -> Result<(f64, f64)> {
        let (lower, upper) = self.raw_bounds(x)?;
        if lower > upper {
            return Err(Error::InconsistentCover {
                point: x.coords().to_vec(),
                lower,
                upper,
            });
        }
        Ok((lower, upper))
    }

    pub fn lower(&self, x: &Point) -> Result<f64> {
        self.bounds(x).map(|b| b.0)
    }

    pub fn upper(&self, x: &Point) -> Result<f64> {
        self.bounds(x).map(|b| b.1)
    }

    /// Restricts the aggregated pair to `B(0, region_radius)` as an
    /// [`EnvelopeCert`]. Every node of the validation lattice must be
    /// covered and consistent.
    pub fn into_envelope(&self, region_radius: f64, validation_step: f64) -> Result<EnvelopeCert> {
        let dim = self.cover.dim();
        let grid = Grid::new(dim, region_radius, validation_step)?;
        let checks: Vec<Result<()>> = grid
            .par_points()
            .map(|x| self.bounds(&Point::new(x)?).map(|_| ()))
            .collect();
        checks.into_iter().collect::<Result<()>>()?;

        let lo = self.clone();
        let up = self.clone();
        let lower = Func::new(
            move |x| {
                Point::new(x.to_vec())
                    .and_then(|p| lo.bounds(&p))
                    .map_or(f64::NAN, |b| b.0)
            },
            region_radius,
            "aggregated lower envelope",
        );
        let upper = Func::new(
            move |x| {
                Point::new(x.to_vec())
                    .and_then(|p| up.bounds(&p))
                    .map_or(f64::NAN, |b| b.1)
            },
            region_radius,
            "aggregated upper envelope",
        );
        let mut env = EnvelopeCert::new(dim, region_radius, lower, upper, validation_step)?;
        // The aggregated width is at most the width of any active local pair,
        // so constant local widths bound it wherever the cover is complete.
        // Completeness between lattice nodes is only decidable here in 1-D.
        let widths: Option<Vec<f64>> = self
            .cover
            .certs
            .iter()
            .map(|c| c.lower.expr()?.constant_offset_to(c.upper.expr()?))
            .collect();
        if let Some(w) = widths {
            if dim == 1 && covers_interval(&self.cover.certs, region_radius) {
                env.symbolic_width = w.into_iter().reduce(f64::max);
                env.grid_exact = true;
            }
        }
        Ok(env)
    }
}

/// Whether the union of the closed local intervals contains `[-r, r]`.
fn covers_interval(certs: &[LocalCert], r: f64) -> bool {
    let mut spans: Vec<(f64, f64)> = certs
        .iter()
        .map(|c| (c.center.coords()[0] - c.radius, c.center.coords()[0] + c.radius))
        .collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut reach = -r;
    for (lo, hi) in spans {
        if lo > reach {
            break;
        }
        reach = reach.max(hi);
    }
    reach >= r
}

type EtaFn = dyn Fn(&[f64], f64) -> f64 + Send + Sync;

/// Certified pointwise bound `η(x, t)` on the gauge integrand over the
/// cylinder.
#[derive(Clone)]
pub struct ToleranceField {
    eta: Arc<EtaFn>,
    cylinder: Cylinder,
    dim: usize,
    grid_exact: bool,
}

impl fmt::Debug for ToleranceField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ToleranceField")
            .field("cylinder", &self.cylinder)
            .field("dim", &self.dim)
            .field("grid_exact", &self.grid_exact)
            .finish()
    }
}

impl ToleranceField {
    pub fn new<F>(eta: F, cylinder: Cylinder, dim: usize) -> Result<Self>
    where
        F: Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    {
        cylinder.validate()?;
        Ok(ToleranceField {
            eta: Arc::new(eta),
            cylinder,
            dim,
            grid_exact: false,
        })
    }

    /// `η(x, t) = base(x) + level_slope · |t|`.
    pub fn from_expr(base: FuncExpr, level_slope: f64, cylinder: Cylinder, dim: usize) -> Result<Self> {
        base.validate(dim)?;
        if !level_slope.is_finite() {
            return Err(Error::NonFinite {
                what: "level_slope",
                value: level_slope,
            });
        }
        let exact = base.is_grid_exact(dim);
        let mut tf = ToleranceField::new(
            move |x, t| base.evaluate(x) + level_slope * t.abs(),
            cylinder,
            dim,
        )?;
        tf.grid_exact = exact;
        Ok(tf)
    }

    pub fn declare_grid_exact(mut self, exact: bool) -> Self {
        self.grid_exact = exact;
        self
    }

    pub fn cylinder(&self) -> Cylinder {
        self.cylinder
    }

    pub fn eta(&self, x: &Point, t: f64) -> f64 {
        (self.eta)(x.coords(), t)
    }
}

/// `δ = max η` over the cylinder lattice. A negative value of `η` anywhere
/// on the lattice voids the certificate.
pub fn gauge_from_tolerance_field(tf: &ToleranceField, grid_step_x: f64, grid_step_t: f64) -> Result<GaugeBound> {
    let cyl = tf.cylinder;
    let grid = Grid::new(tf.dim, cyl.radius, grid_step_x)?;
    let levels = LevelGrid::new(cyl.level, grid_step_t)?;
    let ts = levels.values();
    // per base point: (max eta, most negative (t, eta) if any)
    let rows: Vec<(Vec<f64>, f64, Option<(f64, f64)>)> = grid
        .par_points()
        .map(|x| {
            let mut max = f64::NEG_INFINITY;
            let mut worst: Option<(f64, f64)> = None;
            for &t in ts {
                let v = (tf.eta)(&x, t);
                if !v.is_finite() {
                    worst = Some((t, v));
                    break;
                }
                max = max.max(v);
                if v < 0.0 && worst.is_none_or(|(_, w)| v < w) {
                    worst = Some((t, v));
                }
            }
            (x, max, worst)
        })
        .collect();
    let mut delta = 0.0f64;
    for (x, max, worst) in rows {
        if let Some((t, value)) = worst {
            if value.is_nan() || value.is_infinite() {
                return Err(Error::NonFinite {
                    what: "tolerance value",
                    value,
                });
            }
            return Err(Error::NegativeTolerance { point: x, t, value });
        }
        delta = delta.max(max);
    }
    let detail = if tf.grid_exact {
        format!("tolerance maximum attained on lattice (steps {grid_step_x}, {grid_step_t})")
    } else {
        format!("{GRID_ESTIMATE}; tolerance lattice steps {grid_step_x}, {grid_step_t}")
    };
    GaugeBound::new(delta, cyl, Provenance::ToleranceField, tf.grid_exact, detail)
}
