//! Explicit function pairs with closed-form properties.
//!
//! * [`SharpnessFamily`]: `F = (μ/2)x²`, `F̃ = (F - δ)_+`. The gauge is at
//!   most `δ` while the surrogate minimizers fill `[-√(2δ/μ), √(2δ/μ)]`, so
//!   the square-root displacement rate is attained.
//! * [`StrictnessPair`]: two constants below `-M`. Their gauge on `C_{R,M}`
//!   vanishes although they differ by `A` everywhere.
//! * [`ImpossibilityPair`]: `0` and a bump of height `A` that agree on any
//!   finite query set.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::epi::{distance, gauge_from_value_bound, nonnegative, positive, Cylinder, GaugeBound, Point};
use crate::error::{Error, Result};
use crate::func::{Func, FuncExpr};
use crate::oracle::{dist_to_set, grid_argmin, ArgminSet, Grid};

#[derive(Debug, Clone)]
pub struct SharpnessFamily {
    pub mu: f64,
    pub delta: f64,
    /// `(μ/2) x²`
    pub f: Func,
    /// `((μ/2) x² - δ)_+`
    pub g: Func,
}

impl SharpnessFamily {
    pub fn target_expr(mu: f64) -> FuncExpr {
        FuncExpr::Quadratic {
            scale: 0.5 * mu,
            center: None,
        }
    }

    pub fn surrogate_expr(mu: f64, delta: f64) -> FuncExpr {
        FuncExpr::ClampShift {
            inner: Box::new(Self::target_expr(mu)),
            delta,
        }
    }

    /// `√(2δ/μ)`, the largest minimizer of the surrogate.
    pub fn extreme_minimizer(&self) -> f64 {
        (2.0 * self.delta / self.mu).sqrt()
    }

    /// `argmin F̃ = [-√(2δ/μ), √(2δ/μ)]`.
    pub fn surrogate_argmin(&self) -> ArgminSet {
        let e = self.extreme_minimizer();
        ArgminSet::Interval { lo: -e, hi: e }
    }

    /// `X★ = {0}`.
    pub fn target_argmin(&self) -> ArgminSet {
        ArgminSet::single(Point::scalar(0.0))
    }

    /// `0 ≤ F - F̃ ≤ δ` holds everywhere, so `δ` bounds the gauge on every
    /// cylinder.
    pub fn gauge_bound(&self, cyl: Cylinder) -> Result<GaugeBound> {
        let mut g = gauge_from_value_bound(self.delta, cyl)?;
        g.detail = format!("0 ≤ F - (F - {})_+ ≤ {} everywhere", self.delta, self.delta);
        Ok(g)
    }
}

pub fn build_sharpness_pair(mu: f64, delta: f64) -> Result<SharpnessFamily> {
    positive("mu", mu)?;
    positive("delta", delta)?;
    let domain = (2.0 * (2.0 * delta / mu).sqrt()).max(1.0);
    Ok(SharpnessFamily {
        mu,
        delta,
        f: SharpnessFamily::target_expr(mu).build(1, domain, "F")?,
        g: SharpnessFamily::surrogate_expr(mu, delta).build(1, domain, "F̃")?,
    })
}

#[derive(Debug, Clone)]
pub struct StrictnessPair {
    pub radius: f64,
    pub level: f64,
    pub amplitude: f64,
    /// `≡ -(M + 1)`
    pub f: Func,
    /// `≡ -(M + 1) - A`
    pub g: Func,
}

impl StrictnessPair {
    pub fn cylinder(&self) -> Cylinder {
        Cylinder {
            radius: self.radius,
            level: self.level,
        }
    }
}

pub fn build_strictness_pair(radius: f64, level: f64, amplitude: f64) -> Result<StrictnessPair> {
    positive("radius", radius)?;
    positive("level", level)?;
    nonnegative("amplitude", amplitude)?;
    let base = -(level + 1.0);
    Ok(StrictnessPair {
        radius,
        level,
        amplitude,
        f: Func::constant(base, radius, "F"),
        g: Func::constant(base - amplitude, radius, "F̃"),
    })
}

#[derive(Debug, Clone)]
pub struct ImpossibilityPair {
    pub radius: f64,
    pub queries: Vec<Point>,
    pub y: Point,
    /// `(1/2) min_i ‖y - x_i‖`
    pub rho: f64,
    pub amplitude: f64,
    /// `≡ 0`
    pub f: Func,
    /// `A · max{0, 1 - ‖x - y‖/ρ}`
    pub g: Func,
}

impl ImpossibilityPair {
    /// Lipschitz constant of the bump.
    pub fn lipschitz(&self) -> f64 {
        self.amplitude / self.rho
    }
}

/// Where to put the bump.
#[derive(Debug, Clone, PartialEq)]
pub enum BumpSite {
    Given(Point),
    /// Lattice point of `B(0, R)` maximizing the distance to the nearest
    /// query; ties go to the smaller norm, then lexicographic order.
    Auto { search_step: f64 },
}

fn clearance(y: &[f64], queries: &[Point]) -> f64 {
    queries
        .iter()
        .map(|q| distance(y, q.coords()))
        .fold(f64::INFINITY, f64::min)
}

pub fn build_impossibility_pair(
    radius: f64,
    queries: Vec<Point>,
    amplitude: f64,
    site: BumpSite,
) -> Result<ImpossibilityPair> {
    positive("radius", radius)?;
    nonnegative("amplitude", amplitude)?;
    let dim = match (&site, queries.first()) {
        (_, Some(q)) => q.dim(),
        (BumpSite::Given(y), None) => y.dim(),
        (BumpSite::Auto { .. }, None) => 1,
    };
    for (index, q) in queries.iter().enumerate() {
        if q.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: q.dim(),
            });
        }
        if q.norm() > radius {
            return Err(Error::QueryOutsideBall {
                index,
                norm: q.norm(),
                radius,
            });
        }
    }

    let y = match site {
        BumpSite::Given(y) => {
            if y.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: y.dim(),
                });
            }
            if y.norm() > radius {
                return Err(Error::InvalidParameter {
                    name: "y",
                    value: y.norm(),
                    reason: "bump site must lie in the closed ball",
                });
            }
            y
        }
        BumpSite::Auto { search_step } => {
            let grid = Grid::new(dim, radius, search_step)?;
            let best = grid
                .points()
                .map(|x| (clearance(&x, &queries), x))
                .filter(|(c, _)| *c > 0.0)
                .fold(None::<(f64, Vec<f64>)>, |acc, (c, x)| match acc {
                    Some((bc, bx)) if bc > c || (bc == c && crate::epi::norm(&bx) <= crate::epi::norm(&x)) => {
                        Some((bc, bx))
                    }
                    _ => Some((c, x)),
                });
            match best {
                Some((_, x)) => Point::new(x)?,
                None => {
                    return Err(Error::NoFreePoint {
                        queries: queries.len(),
                        step: search_step,
                    })
                }
            }
        }
    };

    let rho = if queries.is_empty() {
        radius
    } else {
        0.5 * clearance(y.coords(), &queries)
    };
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter {
            name: "rho",
            value: rho,
            reason: "bump site coincides with a query",
        });
    }
    let bump = FuncExpr::Bump {
        amplitude,
        center: y.coords().to_vec(),
        rho,
    };
    Ok(ImpossibilityPair {
        radius,
        g: bump.build(dim, radius, "G")?,
        f: Func::constant(0.0, radius, "F"),
        queries,
        y,
        rho,
        amplitude,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub delta: f64,
    /// Largest lattice minimizer of the surrogate.
    pub argmin: f64,
    /// Distance of that minimizer to `X★ = {0}`.
    pub dist: f64,
    /// `2√(δ/μ)`
    pub bound: f64,
    /// `2h`
    pub slack: f64,
    /// `√(2δ/μ)`
    pub analytic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub mu: f64,
    pub grid_step: f64,
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `ln dist` against `ln δ`; `None` with fewer
    /// than two rows.
    pub slope: Option<f64>,
}

pub const SWEEP_CSV_HEADER: &str = "delta,argmin,dist,bound,slack";

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", r.delta, r.argmin, r.dist, r.bound, r.slack);
        }
        out
    }
}

/// `n` values from `lo` to `hi` equally spaced in log scale.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Grid-argmin displacement of the sharpness family over a range of `δ`.
pub fn sharpness_sweep(mu: f64, deltas: &[f64], grid_step: f64) -> Result<SweepTable> {
    positive("mu", mu)?;
    positive("grid_step", grid_step)?;
    let (&smallest, &largest) = match (deltas.first(), deltas.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::InvalidParameter {
                name: "deltas",
                value: 0.0,
                reason: "at least one delta is required",
            })
        }
    };
    for &d in deltas {
        positive("delta", d)?;
    }
    if let Some(w) = deltas.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter {
            name: "deltas",
            value: w[1],
            reason: "deltas must be strictly increasing",
        });
    }
    let required = (2.0 * smallest / mu).sqrt() / 10.0;
    if !(grid_step < required) {
        return Err(Error::GridTooCoarse {
            step: grid_step,
            required,
        });
    }
    let radius = (2.0 * (2.0 * largest / mu).sqrt()).max(1.0);
    let grid = Grid::new(1, radius, grid_step)?;
    let x_star = ArgminSet::single(Point::scalar(0.0));

    let rows = deltas
        .par_iter()
        .map(|&delta| {
            let fam = build_sharpness_pair(mu, delta)?;
            let g = SharpnessFamily::surrogate_expr(mu, delta).build(1, radius, "F̃")?;
            let am = grid_argmin(&g, &grid)?;
            let extreme = am
                .points
                .last()
                .expect("lattice argmin is nonempty")
                .clone();
            let dist = dist_to_set(&extreme, &x_star)?;
            Ok(SweepRow {
                delta,
                argmin: extreme.coords()[0],
                dist,
                bound: 2.0 * (delta / mu).sqrt(),
                slack: 2.0 * grid_step,
                analytic: fam.extreme_minimizer(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let (lx, ly): (Vec<f64>, Vec<f64>) = rows.iter().map(|r| (r.delta.ln(), r.dist.ln())).unzip();
    Ok(SweepTable {
        mu,
        grid_step,
        slope: ols_slope(&lx, &ly),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{grid_gauge, grid_sup_abs_diff, LevelGrid};

    #[test]
    fn sharpness_pair_basics() {
        let fam = build_sharpness_pair(2.0, 0.02).unwrap();
        assert!((fam.extreme_minimizer() - 0.141_421_356_237_309_5).abs() < 1e-15);
        let tiny = build_sharpness_pair(2.0, 1e-14).unwrap();
        assert!(tiny.extreme_minimizer() < 1e-6);
        assert!(build_sharpness_pair(0.0, 0.1).is_err());
        assert!(build_sharpness_pair(1.0, -0.1).is_err());
        let x = Point::scalar(0.1);
        assert_eq!(fam.g.eval(&x).unwrap(), 0.0);
        assert!((fam.f.eval(&x).unwrap() - 0.01).abs() < 1e-17);
    }

    #[test]
    fn sharpness_gauge_on_lattice() {
        let fam = build_sharpness_pair(2.0, 0.02).unwrap();
        for &(r, m) in &[(1.0, 1.0), (0.5, 0.01), (1.0, 0.3)] {
            let grid = Grid::new(1, r, 1e-3).unwrap();
            let levels = LevelGrid::new(m, 1e-3).unwrap();
            let oracle = grid_gauge(&fam.f, &fam.g, &grid, &levels).unwrap();
            assert!(oracle <= 0.02 + 1e-12, "r={r} m={m} oracle={oracle}");
        }
    }

    #[test]
    fn strictness_pair_properties() {
        let p = build_strictness_pair(1.0, 2.0, 5.0).unwrap();
        let x = Point::scalar(0.3);
        assert_eq!(p.f.eval(&x).unwrap(), -3.0);
        assert_eq!(p.g.eval(&x).unwrap(), -8.0);
        let grid = Grid::new(1, 1.0, 0.01).unwrap();
        let levels = LevelGrid::new(2.0, 0.01).unwrap();
        assert_eq!(grid_gauge(&p.f, &p.g, &grid, &levels).unwrap(), 0.0);
        assert_eq!(grid_sup_abs_diff(&p.f, &p.g, &grid).unwrap(), 5.0);
        // boundary level t = -M
        assert_eq!(crate::epi::pointwise_discrepancy(-3.0, -8.0, -2.0), 0.0);

        let z = build_strictness_pair(1.0, 2.0, 0.0).unwrap();
        assert_eq!(grid_sup_abs_diff(&z.f, &z.g, &grid).unwrap(), 0.0);
        assert!(build_strictness_pair(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn impossibility_pair_given_site() {
        let q = vec![Point::scalar(-0.5), Point::scalar(0.5)];
        let p = build_impossibility_pair(1.0, q, 10.0, BumpSite::Given(Point::scalar(0.0))).unwrap();
        assert_eq!(p.rho, 0.25);
        assert_eq!(p.g.eval(&Point::scalar(0.0)).unwrap(), 10.0);
        assert_eq!(p.g.eval(&Point::scalar(0.5)).unwrap(), 0.0);
        assert_eq!(p.g.eval(&Point::scalar(-0.5)).unwrap(), 0.0);
        assert_eq!(p.lipschitz(), 40.0);
    }

    #[test]
    fn impossibility_pair_auto_site() {
        let q = vec![Point::scalar(-0.5), Point::scalar(0.5)];
        let p = build_impossibility_pair(1.0, q, 10.0, BumpSite::Auto { search_step: 0.05 }).unwrap();
        // clearance 0.5 is attained at -1, 0 and 1; the smallest norm wins
        assert_eq!(p.y, Point::scalar(0.0));
        assert_eq!(p.rho, 0.25);

        let q2 = vec![Point::new(vec![0.0, 0.0]).unwrap()];
        let p2 = build_impossibility_pair(1.0, q2, 1.0, BumpSite::Auto { search_step: 0.5 }).unwrap();
        assert_eq!(p2.y.norm(), 1.0);
        assert_eq!(p2.rho, 0.5);
    }

    #[test]
    fn impossibility_pair_errors() {
        let q = vec![Point::scalar(0.0)];
        assert!(build_impossibility_pair(1.0, q.clone(), 1.0, BumpSite::Given(Point::scalar(0.0))).is_err());
        assert!(matches!(
            build_impossibility_pair(1.0, vec![Point::scalar(2.0)], 1.0, BumpSite::Given(Point::scalar(0.0))),
            Err(Error::QueryOutsideBall { .. })
        ));
        // every lattice node of step 1 on [-1, 1] is a query
        let dense = vec![Point::scalar(-1.0), Point::scalar(0.0), Point::scalar(1.0)];
        assert!(matches!(
            build_impossibility_pair(1.0, dense, 1.0, BumpSite::Auto { search_step: 1.0 }),
            Err(Error::NoFreePoint { .. })
        ));
        let zero = build_impossibility_pair(1.0, q, 0.0, BumpSite::Given(Point::scalar(0.5))).unwrap();
        assert_eq!(zero.g.eval(&Point::scalar(0.5)).unwrap(), 0.0);
    }

    #[test]
    fn log_spacing_and_slope() {
        let d = log_spaced(1e-5, 1e-2, 4);
        assert_eq!(d.len(), 4);
        assert!((d[1] - 1e-4).abs() < 1e-18);
        assert_eq!(d[3], 1e-2);
        let xs = [0.0, 1.0, 2.0];
        let ys = [1.0, 3.0, 5.0];
        assert_eq!(ols_slope(&xs, &ys), Some(2.0));
        assert_eq!(ols_slope(&xs[..1], &ys[..1]), None);
    }

    #[test]
    fn single_delta_sweep() {
        let t = sharpness_sweep(2.0, &[0.02], 1e-4).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!(t.slope.is_none());
        let r = &t.rows[0];
        assert!((r.dist - 0.02f64.sqrt()).abs() <= 1e-4);
        assert!(r.dist <= r.analytic);
        assert!(r.bound >= r.dist);
        assert_eq!(t.to_csv().lines().next(), Some(SWEEP_CSV_HEADER));
    }

    #[test]
    fn sweep_preconditions() {
        assert!(matches!(
            sharpness_sweep(2.0, &[1e-5, 1e-3], 1e-3),
            Err(Error::GridTooCoarse { .. })
        ));
        assert!(sharpness_sweep(2.0, &[1e-3, 1e-4], 1e-5).is_err());
        assert!(sharpness_sweep(2.0, &[], 1e-5).is_err());
        assert!(sharpness_sweep(2.0, &[-1e-3], 1e-5).is_err());
    }
}
