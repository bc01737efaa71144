//! From a gauge bound to value control and minimizer displacement.
//!
//! On the window `‖x‖ ≤ R`, `F(x), F̃(x) ∈ [-M, M]`, a gauge bound `δ`
//! controls `|F(x) - F̃(x)| ≤ δ`. Combined with set-based quadratic growth
//! `F(x) - inf F ≥ (μ/2) dist(x, X★)²` this gives
//! `dist(x̃★, X★) ≤ 2√(δ/μ)` for any minimizer `x̃★` of `F̃` on the ball.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::epi::{positive, Cylinder, GaugeBound, Point, TAU};
use crate::error::{Error, Result};
use crate::func::Func;
use crate::oracle::{dist_to_set, ArgminSet, Grid};

/// Quadratic growth certificate for the target function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthCert {
    mu: f64,
    radius: f64,
    argmin_set: ArgminSet,
    inf_value: f64,
}

impl GrowthCert {
    /// `inf_value` is taken as given; it is never recomputed from samples.
    pub fn new(mu: f64, radius: f64, argmin_set: ArgminSet, inf_value: f64, dim: usize) -> Result<Self> {
        positive("mu", mu)?;
        positive("growth radius", radius)?;
        if !inf_value.is_finite() {
            return Err(Error::NonFinite {
                what: "inf_value",
                value: inf_value,
            });
        }
        argmin_set.validate(dim)?;
        Ok(GrowthCert {
            mu,
            radius,
            argmin_set,
            inf_value,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn argmin_set(&self) -> &ArgminSet {
        &self.argmin_set
    }

    pub fn inf_value(&self) -> f64 {
        self.inf_value
    }

    /// Listed minimizers (or the set's representative) whose value differs
    /// from `inf_value` by more than `TAU`.
    pub fn mismatched_minimizers(&self, f: &Func) -> Result<Vec<(Point, f64)>> {
        let pts = match &self.argmin_set {
            ArgminSet::Points { points } => points.clone(),
            other => vec![other.representative()?],
        };
        let mut bad = Vec::new();
        for p in pts {
            let v = f.eval(&p)?;
            if (v - self.inf_value).abs() > TAU {
                bad.push((p, v));
            }
        }
        Ok(bad)
    }
}

/// A failed window precondition.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindowFailure {
    OutsideBase { norm: f64, radius: f64 },
    TargetOutsideLevel { value: f64, level: f64 },
    SurrogateOutsideLevel { value: f64, level: f64 },
    CylinderNotCovered { gauge: Cylinder, check: Cylinder },
}

impl fmt::Display for WindowFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowFailure::OutsideBase { norm, radius } => {
                write!(f, "base window: ‖x‖ = {norm} > R = {radius}")
            }
            WindowFailure::TargetOutsideLevel { value, level } => {
                write!(f, "level window: F(x) = {value} outside [-{level}, {level}]")
            }
            WindowFailure::SurrogateOutsideLevel { value, level } => {
                write!(f, "level window: F̃(x) = {value} outside [-{level}, {level}]")
            }
            WindowFailure::CylinderNotCovered { gauge, check } => write!(
                f,
                "gauge cylinder (R = {}, M = {}) does not contain check cylinder (R = {}, M = {})",
                gauge.radius, gauge.level, check.radius, check.level
            ),
        }
    }
}

/// Window membership of a base point, computed from the stored values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowCheck {
    point: Point,
    f_value: f64,
    g_value: f64,
    cylinder: Cylinder,
    in_base: bool,
    in_level: bool,
}

impl WindowCheck {
    pub fn new(point: Point, f_value: f64, g_value: f64, cylinder: Cylinder) -> Self {
        let in_base = cylinder.contains_base(&point);
        let in_level = cylinder.contains_level(f_value) && cylinder.contains_level(g_value);
        WindowCheck {
            point,
            f_value,
            g_value,
            cylinder,
            in_base,
            in_level,
        }
    }

    pub fn evaluate(f: &Func, g: &Func, point: Point, cylinder: Cylinder) -> Result<Self> {
        let fv = f.eval(&point)?;
        let gv = g.eval(&point)?;
        Ok(WindowCheck::new(point, fv, gv, cylinder))
    }

    pub fn point(&self) -> &Point {
        &self.point
    }

    pub fn f_value(&self) -> f64 {
        self.f_value
    }

    pub fn g_value(&self) -> f64 {
        self.g_value
    }

    pub fn cylinder(&self) -> Cylinder {
        self.cylinder
    }

    pub fn in_base(&self) -> bool {
        self.in_base
    }

    pub fn in_level(&self) -> bool {
        self.in_level
    }

    pub fn failures(&self) -> Vec<WindowFailure> {
        let cyl = self.cylinder;
        let mut out = Vec::new();
        if !self.in_base {
            out.push(WindowFailure::OutsideBase {
                norm: self.point.norm(),
                radius: cyl.radius,
            });
        }
        if !cyl.contains_level(self.f_value) {
            out.push(WindowFailure::TargetOutsideLevel {
                value: self.f_value,
                level: cyl.level,
            });
        }
        if !cyl.contains_level(self.g_value) {
            out.push(WindowFailure::SurrogateOutsideLevel {
                value: self.g_value,
                level: cyl.level,
            });
        }
        out
    }

    /// Recomputes both flags from the raw values.
    pub fn reverify(&self) -> bool {
        let again = WindowCheck::new(self.point.clone(), self.f_value, self.g_value, self.cylinder);
        again.in_base == self.in_base && again.in_level == self.in_level
    }
}

fn covers(gauge: &Cylinder, check: &Cylinder) -> bool {
    gauge.radius >= check.radius && gauge.level >= check.level
}

/// `|F(x) - F̃(x)| ≤ δ` whenever `x` lies in the window of the gauge's
/// cylinder. Returns the first failing precondition otherwise.
pub fn value_gap_from_gauge(gauge: &GaugeBound, check: &WindowCheck) -> std::result::Result<f64, WindowFailure> {
    if !covers(&gauge.cylinder, &check.cylinder) {
        return Err(WindowFailure::CylinderNotCovered {
            gauge: gauge.cylinder,
            check: check.cylinder,
        });
    }
    match check.failures().into_iter().next() {
        Some(fail) => Err(fail),
        None => Ok(gauge.delta),
    }
}

/// How the surrogate minimizer was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MinimizerSource {
    /// Supplied by the caller as an exact minimizer over the ball.
    Exact,
    /// Lattice argmin with the given step.
    Grid { step: f64 },
}

/// The three inequalities chained in the displacement argument, replayed
/// on the recorded values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainReplay {
    /// `F̃(x★) ≤ F(x★) + δ`
    pub surrogate_at_target_min: bool,
    /// `F(x̃★) ≤ F̃(x̃★) + δ`
    pub target_at_surrogate_min: bool,
    /// `F̃(x̃★) ≤ F̃(x★)`
    pub surrogate_minimality: bool,
    /// `F(x̃★) - inf F ≤ 2δ`
    pub suboptimality: bool,
}

impl ChainReplay {
    pub fn holds(&self) -> bool {
        self.surrogate_at_target_min
            && self.target_at_surrogate_min
            && self.surrogate_minimality
            && self.suboptimality
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisplacementCert {
    /// `2√(δ/μ)`.
    pub bound: f64,
    /// Additive allowance for an inexact minimizer (0 when exact).
    pub slack: f64,
    pub gauge: GaugeBound,
    pub growth: GrowthCert,
    pub xstar: Point,
    pub xtilde: Point,
    pub source: MinimizerSource,
    /// Checks at `x★` and `x̃★`, each carrying both function values.
    pub window_checks: [WindowCheck; 2],
    pub failures: Vec<String>,
    pub valid: bool,
    pub detail: String,
}

impl DisplacementCert {
    pub fn bound_with_slack(&self) -> f64 {
        self.bound + self.slack
    }

    /// Marks `x̃★` as a lattice argmin of step `h`. The reported allowance
    /// is `2h`; the growth-aware allowance `2h(1 + √(μ/δ)·h)` is recorded in
    /// `detail`.
    pub fn with_grid_minimizer(mut self, h: f64) -> Self {
        self.source = MinimizerSource::Grid { step: h };
        self.slack = 2.0 * h;
        let growth_aware = if self.gauge.delta > 0.0 {
            format!("{}", 2.0 * h * (1.0 + (self.growth.mu / self.gauge.delta).sqrt() * h))
        } else {
            "unbounded (δ = 0)".to_string()
        };
        self.detail = format!(
            "x̃★ is a lattice argmin (step {h}); reported slack 2h = {}; growth-aware slack 2h(1 + √(μ/δ)·h) = {growth_aware}",
            self.slack
        );
        self
    }

    pub fn chain(&self) -> ChainReplay {
        let d = self.gauge.delta;
        let [at_star, at_tilde] = &self.window_checks;
        let inf = self.growth.inf_value;
        ChainReplay {
            surrogate_at_target_min: at_star.g_value <= at_star.f_value + d + TAU,
            target_at_surrogate_min: at_tilde.f_value <= at_tilde.g_value + d + TAU,
            surrogate_minimality: at_tilde.g_value <= at_star.g_value + TAU,
            suboptimality: at_tilde.f_value - inf <= 2.0 * d + TAU,
        }
    }

    /// Re-derives `valid` from the stored raw values.
    pub fn reverify(&self) -> bool {
        let windows_ok = self.window_checks.iter().all(|w| {
            w.reverify() && w.failures().is_empty() && covers(&self.gauge.cylinder, &w.cylinder)
        });
        !self.valid || windows_ok
    }
}

/// `dist(x̃★, X★) ≤ 2√(δ/μ)` with every precondition checked and recorded.
pub fn displacement_bound(
    gauge: &GaugeBound,
    growth: &GrowthCert,
    xstar: &Point,
    xtilde: &Point,
    f: &Func,
    g: &Func,
) -> Result<DisplacementCert> {
    positive("mu", growth.mu)?;
    if !(gauge.delta >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "delta",
            value: gauge.delta,
            reason: "must be nonnegative",
        });
    }
    let cyl = gauge.cylinder;
    let at_star = WindowCheck::evaluate(f, g, xstar.clone(), cyl)?;
    let at_tilde = WindowCheck::evaluate(f, g, xtilde.clone(), cyl)?;

    let mut failures = Vec::new();
    for (name, check) in [("x★", &at_star), ("x̃★", &at_tilde)] {
        for fail in check.failures() {
            failures.push(format!("{name}: {fail}"));
        }
    }
    if !growth.argmin_set.contains(xstar, TAU)? {
        failures.push(format!("x★ = {xstar} is not in the certified argmin set"));
    }
    if growth.radius < cyl.radius {
        failures.push(format!(
            "growth certified on B(0, {}) but the cylinder radius is {}",
            growth.radius, cyl.radius
        ));
    }

    Ok(DisplacementCert {
        bound: 2.0 * (gauge.delta / growth.mu).sqrt(),
        slack: 0.0,
        gauge: gauge.clone(),
        growth: growth.clone(),
        xstar: xstar.clone(),
        xtilde: xtilde.clone(),
        source: MinimizerSource::Exact,
        window_checks: [at_star, at_tilde],
        valid: failures.is_empty(),
        failures,
        detail: "x̃★ supplied as an exact minimizer over the ball".to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthViolation {
    pub point: Point,
    /// `F(x) - inf F`
    pub excess: f64,
    /// `(μ/2) dist(x, X★)²`
    pub required: f64,
}

/// Lattice points violating the growth inequality. An empty report does
/// not certify growth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub header: String,
    pub checked: usize,
    pub violations: Vec<GrowthViolation>,
}

impl GrowthReport {
    pub fn falsified(&self) -> bool {
        !self.violations.is_empty()
    }
}

pub fn falsify_quadratic_growth(f: &Func, growth: &GrowthCert, cyl: Cylinder, grid_step: f64) -> Result<GrowthReport> {
    positive("grid_step", grid_step)?;
    let dim = growth.argmin_set.representative()?.dim();
    let grid = Grid::new(dim, cyl.radius, grid_step)?;
    f.check_covers(cyl.radius)?;
    let half_mu = 0.5 * growth.mu;
    let rows: Vec<Option<GrowthViolation>> = grid
        .par_points()
        .map(|x| {
            let p = Point::new(x)?;
            let excess = f.eval(&p)? - growth.inf_value;
            let d = dist_to_set(&p, &growth.argmin_set)?;
            let required = half_mu * d * d;
            Ok((excess < required - TAU).then_some(GrowthViolation {
                point: p,
                excess,
                required,
            }))
        })
        .collect::<Result<_>>()?;
    Ok(GrowthReport {
        header: format!(
            "quadratic growth (mu = {}) scanned on lattice of step {grid_step} over B(0, {}); \
             no violation found is NOT a certificate",
            growth.mu, cyl.radius
        ),
        checked: rows.len(),
        violations: rows.into_iter().flatten().collect(),
    })
}

/// `F(x) - inf F`.
pub fn suboptimality_gap(f: &Func, x: &Point, inf_value: f64) -> Result<f64> {
    if !inf_value.is_finite() {
        return Err(Error::NonFinite {
            what: "inf_value",
            value: inf_value,
        });
    }
    Ok(f.eval(x)? - inf_value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epi::{gauge_from_value_bound, Provenance};
    use crate::func::FuncExpr;

    fn cyl(r: f64, m: f64) -> Cylinder {
        Cylinder::new(r, m).unwrap()
    }

    fn quad(scale: f64) -> Func {
        FuncExpr::Quadratic {
            scale,
            center: None,
        }
        .build(1, 1.0, "quad")
        .unwrap()
    }

    fn origin_growth(mu: f64) -> GrowthCert {
        GrowthCert::new(mu, 1.0, ArgminSet::single(Point::scalar(0.0)), 0.0, 1).unwrap()
    }

    #[test]
    fn value_gap_inside_window() {
        let c = cyl(1.0, 1.0);
        let gauge = gauge_from_value_bound(0.1, c).unwrap();
        let check = WindowCheck::new(Point::scalar(0.5), 0.30, 0.37, c);
        assert_eq!(value_gap_from_gauge(&gauge, &check), Ok(0.1));
        assert!((0.30f64 - 0.37).abs() <= 0.1);
        let zero = gauge_from_value_bound(0.0, c).unwrap();
        let same = WindowCheck::new(Point::scalar(0.2), 0.4, 0.4, c);
        assert_eq!(value_gap_from_gauge(&zero, &same), Ok(0.0));
    }

    #[test]
    fn value_gap_outside_level_window() {
        // strictness pair values with M = 2
        let c = cyl(1.0, 2.0);
        let gauge = gauge_from_value_bound(0.0, c).unwrap();
        let check = WindowCheck::new(Point::scalar(0.0), -3.0, -8.0, c);
        assert!(!check.in_level());
        assert!(check.in_base());
        assert_eq!(
            value_gap_from_gauge(&gauge, &check),
            Err(WindowFailure::TargetOutsideLevel {
                value: -3.0,
                level: 2.0
            })
        );
    }

    #[test]
    fn value_gap_requires_covering_cylinder() {
        let gauge = gauge_from_value_bound(0.1, cyl(0.5, 1.0)).unwrap();
        let check = WindowCheck::new(Point::scalar(0.1), 0.0, 0.0, cyl(1.0, 1.0));
        assert!(matches!(
            value_gap_from_gauge(&gauge, &check),
            Err(WindowFailure::CylinderNotCovered { .. })
        ));
        let wide = gauge_from_value_bound(0.1, cyl(2.0, 3.0)).unwrap();
        assert_eq!(value_gap_from_gauge(&wide, &check), Ok(0.1));
        let outside = WindowCheck::new(Point::scalar(1.5), 0.0, 0.0, cyl(1.0, 1.0));
        assert!(matches!(
            value_gap_from_gauge(&wide, &outside),
            Err(WindowFailure::OutsideBase { .. })
        ));
    }

    #[test]
    fn displacement_formula() {
        let f = quad(0.5);
        let gauge = gauge_from_value_bound(0.01, cyl(1.0, 1.0)).unwrap();
        let cert = displacement_bound(
            &gauge,
            &origin_growth(1.0),
            &Point::scalar(0.0),
            &Point::scalar(0.0),
            &f,
            &f,
        )
        .unwrap();
        assert!((cert.bound - 0.2).abs() < 1e-15);
        assert!(cert.valid);
        assert!(cert.chain().holds());

        let zero = gauge_from_value_bound(0.0, cyl(1.0, 1.0)).unwrap();
        let cert = displacement_bound(
            &zero,
            &origin_growth(1.0),
            &Point::scalar(0.0),
            &Point::scalar(0.0),
            &f,
            &f,
        )
        .unwrap();
        assert_eq!(cert.bound, 0.0);
    }

    #[test]
    fn sharpness_instance() {
        // μ = 2, δ = 0.02: F = x², F̃ = (x² - δ)_+, extreme minimizer √0.02
        let f = quad(1.0);
        let g = FuncExpr::ClampShift {
            inner: Box::new(FuncExpr::Quadratic {
                scale: 1.0,
                center: None,
            }),
            delta: 0.02,
        }
        .build(1, 1.0, "g")
        .unwrap();
        let gauge = gauge_from_value_bound(0.02, cyl(1.0, 1.0)).unwrap();
        let xt = Point::scalar(0.02f64.sqrt());
        let cert = displacement_bound(&gauge, &origin_growth(2.0), &Point::scalar(0.0), &xt, &f, &g).unwrap();
        assert!((cert.bound - 0.2).abs() < 1e-15);
        assert!(cert.valid);
        assert!(cert.chain().holds());
        let d = dist_to_set(&xt, cert.growth.argmin_set()).unwrap();
        assert!((d - 0.141_421_356_237_309_5).abs() < 1e-15);
        assert!(d <= cert.bound);
        assert!(cert.reverify());
    }

    #[test]
    fn displacement_invalid_outside_window() {
        let f = Func::constant(-3.0, 1.0, "f");
        let g = Func::constant(-8.0, 1.0, "g");
        let gauge = gauge_from_value_bound(5.0, cyl(1.0, 2.0)).unwrap();
        let growth = GrowthCert::new(1.0, 1.0, ArgminSet::single(Point::scalar(0.0)), -3.0, 1).unwrap();
        let cert = displacement_bound(&gauge, &growth, &Point::scalar(0.0), &Point::scalar(0.5), &f, &g).unwrap();
        assert!(!cert.valid);
        assert_eq!(cert.failures.len(), 4);
        assert!(cert.failures[0].contains("level window"));
        assert!(cert.reverify());
    }

    #[test]
    fn displacement_flags_foreign_xstar() {
        let f = quad(1.0);
        let gauge = gauge_from_value_bound(0.01, cyl(1.0, 1.0)).unwrap();
        let cert = displacement_bound(
            &gauge,
            &origin_growth(2.0),
            &Point::scalar(0.5),
            &Point::scalar(0.0),
            &f,
            &f,
        )
        .unwrap();
        assert!(!cert.valid);
    }

    #[test]
    fn growth_cert_rejects_bad_parameters() {
        let set = ArgminSet::single(Point::scalar(0.0));
        assert!(GrowthCert::new(0.0, 1.0, set.clone(), 0.0, 1).is_err());
        assert!(GrowthCert::new(-1.0, 1.0, set.clone(), 0.0, 1).is_err());
        assert!(matches!(
            GrowthCert::new(1.0, 1.0, ArgminSet::Points { points: vec![] }, 0.0, 1),
            Err(Error::EmptyArgminSet)
        ));
        let bad = GrowthCert::new(1.0, 1.0, set, 0.5, 1).unwrap();
        assert_eq!(bad.mismatched_minimizers(&quad(1.0)).unwrap().len(), 1);
    }

    #[test]
    fn assumed_gauge_still_computes() {
        let f = quad(1.0);
        let gauge = GaugeBound::assumed(0.04, cyl(1.0, 1.0)).unwrap();
        assert_eq!(gauge.provenance, Provenance::Assumed);
        let cert = displacement_bound(
            &gauge,
            &origin_growth(1.0),
            &Point::scalar(0.0),
            &Point::scalar(0.0),
            &f,
            &f,
        )
        .unwrap();
        assert!((cert.bound - 0.4).abs() < 1e-15);
        assert!(!cert.gauge.certified);
    }

    #[test]
    fn grid_minimizer_slack() {
        let f = quad(1.0);
        let gauge = gauge_from_value_bound(0.02, cyl(1.0, 1.0)).unwrap();
        let cert = displacement_bound(
            &gauge,
            &origin_growth(2.0),
            &Point::scalar(0.0),
            &Point::scalar(0.0),
            &f,
            &f,
        )
        .unwrap()
        .with_grid_minimizer(1e-3);
        assert_eq!(cert.slack, 2e-3);
        assert!((cert.bound_with_slack() - 0.202).abs() < 1e-15);
        assert!(cert.detail.contains("growth-aware"));
    }

    #[test]
    fn growth_falsification() {
        let c = cyl(1.0, 1.0);
        // (μ/2)x² with μ = 2 is the equality case
        let report = falsify_quadratic_growth(&quad(1.0), &origin_growth(2.0), c, 0.01).unwrap();
        assert!(!report.falsified());
        assert!(report.header.contains("NOT a certificate"));
        assert_eq!(report.checked, 201);

        let quartic = FuncExpr::Power {
            coeff: 1.0,
            exponent: 4.0,
            center: None,
        }
        .build(1, 1.0, "x^4")
        .unwrap();
        let report = falsify_quadratic_growth(&quartic, &origin_growth(1.0), c, 0.1).unwrap();
        assert!(report.falsified());
        let at = report
            .violations
            .iter()
            .find(|v| (v.point.coords()[0] - 0.1).abs() < 1e-12)
            .unwrap();
        assert!((at.excess - 1e-4).abs() < 1e-15);
        assert!((at.required - 0.005).abs() < 1e-15);
        assert!(falsify_quadratic_growth(&quartic, &origin_growth(1.0), c, 0.0).is_err());
    }

    #[test]
    fn suboptimality_examples() {
        let f = quad(1.0);
        assert!((suboptimality_gap(&f, &Point::scalar(0.3), 0.0).unwrap() - 0.09).abs() < 1e-16);
        assert_eq!(suboptimality_gap(&f, &Point::scalar(0.0), 0.0).unwrap(), 0.0);
        // sharpness: F(√(2δ/μ)) = δ with μ = 2, δ = 0.02
        let gap = suboptimality_gap(&f, &Point::scalar(0.02f64.sqrt()), 0.0).unwrap();
        assert!((gap - 0.02).abs() < 1e-15);
        assert!(gap <= 0.04);
    }
}
