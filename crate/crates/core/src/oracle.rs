//! Brute-force lattice oracles.
//!
//! Every supremum computed here is a maximum over finitely many lattice
//! points, hence a lower bound on the true supremum. These numbers are
//! ground truth for tests, never certificates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::epi::{distance, norm, pointwise_discrepancy, positive, Point, TAU};
use crate::error::{Error, Result};
use crate::func::Func;

/// Upper limit on the number of lattice evaluations a single scan may do.
pub const MAX_LATTICE_POINTS: u64 = 100_000_000;

/// Symmetric 1-D lattice `{k·step : |k·step| < radius} ∪ {±radius}`.
///
/// Halving the step yields a superset, so refinements are nested.
fn axis(radius: f64, step: f64) -> Vec<f64> {
    let k_max = (radius / step).floor() as i64;
    let cutoff = radius - step * 1e-9;
    let mut v = Vec::with_capacity(2 * k_max as usize + 3);
    v.push(-radius);
    for k in -k_max..=k_max {
        let c = k as f64 * step;
        if c.abs() < cutoff {
            v.push(c);
        }
    }
    v.push(radius);
    v
}

fn check_cap(points: u128) -> Result<()> {
    if points > MAX_LATTICE_POINTS as u128 {
        Err(Error::GridCap {
            points,
            cap: MAX_LATTICE_POINTS,
        })
    } else {
        Ok(())
    }
}

/// Axis-aligned lattice over `[-radius, radius]ⁿ` restricted to the closed
/// ball of that radius. Always contains the origin and `±radius·e_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    radius: f64,
    step: f64,
    axis: Vec<f64>,
}

impl Grid {
    pub fn new(dim: usize, radius: f64, step: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        positive("radius", radius)?;
        positive("step", step)?;
        let per_axis = 2 * (radius / step).floor() as u128 + 3;
        check_cap(per_axis.saturating_pow(dim as u32))?;
        let axis = axis(radius, step);
        Ok(Grid {
            dim,
            radius,
            step,
            axis,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// The same lattice with half the step.
    pub fn refine(&self) -> Result<Grid> {
        Grid::new(self.dim, self.radius, self.step / 2.0)
    }

    /// Size of the enclosing cube lattice.
    fn cube_len(&self) -> u64 {
        (self.axis.len() as u64).pow(self.dim as u32)
    }

    /// Lattice point with the given cube index, or `None` if it falls
    /// outside the ball. Indices enumerate points in lexicographic order.
    fn point_at(&self, mut idx: u64) -> Option<Vec<f64>> {
        let n = self.axis.len() as u64;
        let mut x = vec![0.0; self.dim];
        for slot in x.iter_mut().rev() {
            *slot = self.axis[(idx % n) as usize];
            idx /= n;
        }
        if self.dim == 1 || norm(&x) <= self.radius {
            Some(x)
        } else {
            None
        }
    }

    pub fn par_points(&self) -> impl ParallelIterator<Item = Vec<f64>> + '_ {
        (0..self.cube_len())
            .into_par_iter()
            .filter_map(move |i| self.point_at(i))
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.cube_len()).filter_map(move |i| self.point_at(i))
    }

    pub fn len(&self) -> usize {
        if self.dim == 1 {
            self.axis.len()
        } else {
            self.par_points().count()
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Lattice over `[-level, level]` including both endpoints and zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelGrid {
    level: f64,
    step: f64,
    values: Vec<f64>,
}

impl LevelGrid {
    pub fn new(level: f64, step: f64) -> Result<Self> {
        positive("level", level)?;
        positive("level step", step)?;
        check_cap(2 * (level / step).floor() as u128 + 3)?;
        Ok(LevelGrid {
            level,
            step,
            values: axis(level, step),
        })
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn refine(&self) -> Result<LevelGrid> {
        LevelGrid::new(self.level, self.step / 2.0)
    }
}

fn max_reduce(a: f64, b: f64) -> Result<f64> {
    Ok(a.max(b))
}

/// `max_{x ∈ lattice} |f(x) - g(x)|`, a lower bound on `sup |f - g|`.
pub fn grid_sup_abs_diff(f: &Func, g: &Func, grid: &Grid) -> Result<f64> {
    f.check_covers(grid.radius())?;
    g.check_covers(grid.radius())?;
    grid.par_points()
        .map(|x| Ok((f.eval_inside(&x)? - g.eval_inside(&x)?).abs()))
        .try_reduce(|| 0.0, max_reduce)
}

/// Maximum of the gauge integrand over `lattice × level lattice`, a lower
/// bound on `G_{R,M}(f, g)`.
pub fn grid_gauge(f: &Func, g: &Func, grid: &Grid, levels: &LevelGrid) -> Result<f64> {
    f.check_covers(grid.radius())?;
    g.check_covers(grid.radius())?;
    check_cap(grid.cube_len() as u128 * levels.values.len() as u128)?;
    let ts = levels.values();
    grid.par_points()
        .map(|x| {
            let fa = f.eval_inside(&x)?;
            let fb = g.eval_inside(&x)?;
            Ok(ts
                .iter()
                .map(|&t| pointwise_discrepancy(fa, fb, t))
                .fold(0.0, f64::max))
        })
        .try_reduce(|| 0.0, max_reduce)
}

/// Lattice minimizers of a function.
#[derive(Debug, Clone, PartialEq)]
pub struct GridArgmin {
    pub value: f64,
    /// All lattice points within [`TAU`] of the minimum, in lexicographic
    /// order of coordinates.
    pub points: Vec<Point>,
}

impl GridArgmin {
    /// The tied minimizer farthest from `set` (first one on ties).
    pub fn farthest_from(&self, set: &ArgminSet) -> Result<(Point, f64)> {
        let mut best: Option<(Point, f64)> = None;
        for p in &self.points {
            let d = dist_to_set(p, set)?;
            if best.as_ref().is_none_or(|(_, bd)| d > *bd) {
                best = Some((p.clone(), d));
            }
        }
        Ok(best.expect("argmin is nonempty"))
    }
}

pub fn grid_argmin(f: &Func, grid: &Grid) -> Result<GridArgmin> {
    f.check_covers(grid.radius())?;
    let values: Vec<(Vec<f64>, f64)> = grid
        .par_points()
        .map(|x| {
            let v = f.eval_inside(&x)?;
            Ok((x, v))
        })
        .collect::<Result<_>>()?;
    let value = values
        .iter()
        .map(|(_, v)| *v)
        .fold(f64::INFINITY, f64::min);
    let mut points: Vec<Point> = values
        .into_iter()
        .filter(|(_, v)| *v <= value + TAU)
        .map(|(x, _)| Point::new(x))
        .collect::<Result<_>>()?;
    points.sort_by(|a, b| {
        a.coords()
            .partial_cmp(b.coords())
            .expect("lattice coordinates are finite")
    });
    Ok(GridArgmin { value, points })
}

/// Representation of a minimizer set `X★`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArgminSet {
    Points { points: Vec<Point> },
    Ball { center: Point, radius: f64 },
    /// A closed interval of the real line.
    Interval { lo: f64, hi: f64 },
}

impl ArgminSet {
    pub fn single(p: Point) -> Self {
        ArgminSet::Points { points: vec![p] }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            ArgminSet::Points { points } => {
                if points.is_empty() {
                    return Err(Error::EmptyArgminSet);
                }
                for p in points {
                    if p.dim() != dim {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            got: p.dim(),
                        });
                    }
                }
                Ok(())
            }
            ArgminSet::Ball { center, radius } => {
                if center.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: center.dim(),
                    });
                }
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(Error::UnsupportedSet(format!("ball radius {radius}")));
                }
                Ok(())
            }
            ArgminSet::Interval { lo, hi } => {
                if dim != 1 {
                    return Err(Error::UnsupportedSet(format!(
                        "interval in dimension {dim}"
                    )));
                }
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(Error::UnsupportedSet(format!("interval [{lo}, {hi}]")));
                }
                Ok(())
            }
        }
    }

    /// A point of the set.
    pub fn representative(&self) -> Result<Point> {
        match self {
            ArgminSet::Points { points } => points.first().cloned().ok_or(Error::EmptyArgminSet),
            ArgminSet::Ball { center, .. } => Ok(center.clone()),
            ArgminSet::Interval { lo, hi } => Point::new(vec![0.5 * (lo + hi)]),
        }
    }

    pub fn contains(&self, x: &Point, tol: f64) -> Result<bool> {
        Ok(dist_to_set(x, self)? <= tol)
    }
}

/// `dist(x, S) = inf_{y ∈ S} ‖x - y‖`, exact for the supported sets.
pub fn dist_to_set(x: &Point, set: &ArgminSet) -> Result<f64> {
    set.validate(x.dim())?;
    Ok(match set {
        ArgminSet::Points { points } => points
            .iter()
            .map(|p| distance(x.coords(), p.coords()))
            .fold(f64::INFINITY, f64::min),
        ArgminSet::Ball { center, radius } => (x.distance(center) - radius).max(0.0),
        ArgminSet::Interval { lo, hi } => {
            let v = x.coords()[0];
            (lo - v).max(v - hi).max(0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::FuncExpr;

    fn func(expr: FuncExpr, r: f64) -> Func {
        expr.build(1, r, "t").unwrap()
    }

    #[test]
    fn axis_contains_origin_and_endpoints() {
        let a = axis(1.0, 0.3);
        assert_eq!(a.first(), Some(&-1.0));
        assert_eq!(a.last(), Some(&1.0));
        assert!(a.contains(&0.0));
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        // integral ratio: no near-duplicates at the ends
        let b = axis(1.0, 0.25);
        assert_eq!(b, vec![-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn refined_axes_are_nested() {
        for &(r, h) in &[(1.0, 0.1), (2.0, 0.03), (0.7, 0.01)] {
            let coarse = axis(r, h);
            let fine = axis(r, h / 2.0);
            assert!(coarse.iter().all(|c| fine.contains(c)), "r={r} h={h}");
        }
    }

    #[test]
    fn ball_lattice_in_two_dimensions() {
        let g = Grid::new(2, 1.0, 0.5).unwrap();
        let pts: Vec<_> = g.points().collect();
        assert!(pts.iter().all(|p| norm(p) <= 1.0));
        assert!(pts.contains(&vec![0.0, 0.0]));
        assert!(pts.contains(&vec![1.0, 0.0]));
        assert!(pts.contains(&vec![0.0, -1.0]));
        assert!(!pts.contains(&vec![1.0, 1.0]));
        assert_eq!(g.len(), pts.len());
        assert_eq!(pts.len(), 13);
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            Grid::new(3, 1.0, 1e-3),
            Err(Error::GridCap { .. })
        ));
        let f = Func::constant(0.0, 1.0, "f");
        let grid = Grid::new(1, 1.0, 1e-4).unwrap();
        let levels = LevelGrid::new(1.0, 1e-5).unwrap();
        assert!(matches!(
            grid_gauge(&f, &f, &grid, &levels),
            Err(Error::GridCap { .. })
        ));
    }

    #[test]
    fn sup_abs_diff_examples() {
        let grid = Grid::new(1, 1.0, 0.01).unwrap();
        let q = func(
            FuncExpr::Quadratic {
                scale: 1.0,
                center: None,
            },
            1.0,
        );
        assert_eq!(grid_sup_abs_diff(&q, &q, &grid).unwrap(), 0.0);
        let zero = Func::constant(0.0, 1.0, "0");
        let bump = func(
            FuncExpr::Bump {
                amplitude: 10.0,
                center: vec![0.0],
                rho: 0.25,
            },
            1.0,
        );
        assert_eq!(grid_sup_abs_diff(&zero, &bump, &grid).unwrap(), 10.0);
    }

    #[test]
    fn gauge_of_constant_shift() {
        // (0.3 - t)_+ - (-t)_+ = 0.3 for every t ≤ 0
        let f = Func::constant(0.0, 1.0, "f");
        let g = Func::constant(0.3, 1.0, "g");
        let grid = Grid::new(1, 1.0, 0.1).unwrap();
        let levels = LevelGrid::new(1.0, 0.1).unwrap();
        assert_eq!(grid_gauge(&f, &g, &grid, &levels).unwrap(), 0.3);
        assert_eq!(grid_gauge(&f, &f, &grid, &levels).unwrap(), 0.0);
    }

    #[test]
    fn oracle_rejects_grids_beyond_domain() {
        let f = Func::constant(0.0, 0.5, "f");
        let grid = Grid::new(1, 1.0, 0.1).unwrap();
        assert!(matches!(
            grid_sup_abs_diff(&f, &f, &grid),
            Err(Error::OutsideDomain { .. })
        ));
        assert!(grid_argmin(&f, &grid).is_err());
    }

    #[test]
    fn argmin_on_lattice_vertex() {
        let f = func(
            FuncExpr::Quadratic {
                scale: 1.0,
                center: Some(vec![0.3]),
            },
            1.0,
        );
        let grid = Grid::new(1, 1.0, 0.01).unwrap();
        let am = grid_argmin(&f, &grid).unwrap();
        assert_eq!(am.points.len(), 1);
        assert!((am.points[0].coords()[0] - 0.3).abs() < 1e-12);
        assert!(am.value < 1e-24);
    }

    #[test]
    fn constant_function_ties_everywhere() {
        let f = Func::constant(2.0, 1.0, "c");
        let grid = Grid::new(2, 1.0, 0.25).unwrap();
        let am = grid_argmin(&f, &grid).unwrap();
        assert_eq!(am.points.len(), grid.len());
        assert!(am
            .points
            .windows(2)
            .all(|w| w[0].coords() < w[1].coords()));
    }

    #[test]
    fn distances_to_sets() {
        let x = Point::scalar(0.5);
        assert_eq!(
            dist_to_set(&x, &ArgminSet::single(Point::scalar(0.0))).unwrap(),
            0.5
        );
        let iv = ArgminSet::Interval { lo: -0.2, hi: 0.2 };
        assert!((dist_to_set(&x, &iv).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(dist_to_set(&Point::scalar(0.1), &iv).unwrap(), 0.0);
        let ball = ArgminSet::Ball {
            center: Point::new(vec![1.0, 0.0]).unwrap(),
            radius: 0.5,
        };
        assert_eq!(
            dist_to_set(&Point::new(vec![1.0, 2.0]).unwrap(), &ball).unwrap(),
            1.5
        );
        assert_eq!(
            dist_to_set(&Point::new(vec![1.2, 0.0]).unwrap(), &ball).unwrap(),
            0.0
        );
    }

    #[test]
    fn unsupported_and_empty_sets() {
        let x = Point::new(vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            dist_to_set(&x, &ArgminSet::Interval { lo: 0.0, hi: 1.0 }),
            Err(Error::UnsupportedSet(_))
        ));
        assert!(matches!(
            dist_to_set(&x, &ArgminSet::Points { points: vec![] }),
            Err(Error::EmptyArgminSet)
        ));
    }
}
