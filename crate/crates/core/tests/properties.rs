use epigauge::{
    aggregate_cover, build_sharpness_pair, build_strictness_pair, discrepancy_profile,
    displacement_bound, dist_to_set, envelope_width_bound, gauge_from_tolerance_field,
    gauge_from_value_bound, grid_argmin, grid_gauge, grid_sup_abs_diff, ArgminSet, Cover, Cylinder,
    EnvelopeCert, FuncExpr, Grid, GrowthCert, LevelGrid, LocalCert, Point, ToleranceField, TAU,
};
use proptest::prelude::*;

fn quad(scale: f64, c: f64) -> FuncExpr {
    FuncExpr::Quadratic {
        scale,
        center: Some(vec![c]),
    }
}

fn shifted(e: FuncExpr, by: f64) -> FuncExpr {
    FuncExpr::Sum {
        terms: vec![e, FuncExpr::Constant { value: by }],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn aggregation_tightens_and_brackets(
        scale in 0.1f64..3.0,
        c in -0.5f64..0.5,
        locals in prop::collection::vec((-1.0f64..1.0, 0.3f64..1.2, 0.0f64..0.5, 0.0f64..0.5), 1..6),
        xs in prop::collection::vec(-1.0f64..1.0, 20),
    ) {
        let truth = quad(scale, c).build(1, 4.0, "F").unwrap();
        let mut certs = vec![LocalCert::new(
            Point::scalar(0.0), 1.0,
            shifted(quad(scale, c), -0.6).build(1, 4.0, "lo").unwrap(),
            shifted(quad(scale, c), 0.6).build(1, 4.0, "up").unwrap(),
        ).unwrap()];
        for (center, radius, below, above) in locals {
            certs.push(LocalCert::new(
                Point::scalar(center), radius,
                shifted(quad(scale, c), -below).build(1, 4.0, "lo").unwrap(),
                shifted(quad(scale, c), above).build(1, 4.0, "up").unwrap(),
            ).unwrap());
        }
        let agg = aggregate_cover(Cover::new(certs).unwrap());
        for x in xs {
            let p = Point::scalar(x);
            let (lo, up) = agg.bounds(&p).unwrap();
            let fx = truth.eval(&p).unwrap();
            prop_assert!(lo <= fx && fx <= up);
            for i in agg.active(&p) {
                let cert = &agg.cover().certs()[i];
                prop_assert!(lo >= cert.lower().eval(&p).unwrap());
                prop_assert!(up <= cert.upper().eval(&p).unwrap());
            }
        }
        // the aggregated width never exceeds the widest local width
        let env = agg.into_envelope(1.0, 0.01).unwrap();
        let b = envelope_width_bound(&env, Cylinder::new(1.0, 1.0).unwrap(), 0.01).unwrap();
        prop_assert!(b.certified);
        prop_assert!(b.delta <= 1.2 + 1e-9);
    }

    #[test]
    fn oracle_gauge_below_value_gap_and_monotone(
        a in 0.1f64..3.0, ca in -0.5f64..0.5,
        b in 0.1f64..3.0, cb in -0.5f64..0.5,
        shift in -0.5f64..0.5,
        level in 0.2f64..2.0,
    ) {
        let f = quad(a, ca).build(1, 1.0, "f").unwrap();
        let g = shifted(quad(b, cb), shift).build(1, 1.0, "g").unwrap();
        let mut grid = Grid::new(1, 1.0, 0.1).unwrap();
        let mut levels = LevelGrid::new(level, 0.1).unwrap();
        let mut prev = (0.0, 0.0);
        for _ in 0..3 {
            let gg = grid_gauge(&f, &g, &grid, &levels).unwrap();
            let gs = grid_sup_abs_diff(&f, &g, &grid).unwrap();
            prop_assert!(gg <= gs);
            prop_assert!(gg >= prev.0 && gs >= prev.1);
            prev = (gg, gs);
            grid = grid.refine().unwrap();
            levels = levels.refine().unwrap();
        }
    }

    #[test]
    fn sharpness_membership_matches_closed_form(
        mu in 0.5f64..5.0,
        delta in 1e-4f64..0.1,
        x in -1.0f64..1.0,
    ) {
        let fam = build_sharpness_pair(mu, delta).unwrap();
        let e = fam.extreme_minimizer();
        prop_assume!((x.abs() - e).abs() > 1e-9);
        let g = fam.g.eval(&Point::scalar(x)).unwrap();
        prop_assert_eq!(g == 0.0, x.abs() <= e);
        let f = fam.f.eval(&Point::scalar(x)).unwrap();
        prop_assert!(0.0 <= f - g && f - g <= delta + TAU);
    }

    #[test]
    fn displacement_bound_is_monotone(
        d1 in 0.0f64..1.0, d2 in 0.0f64..1.0,
        m1 in 0.1f64..10.0, m2 in 0.1f64..10.0,
    ) {
        let cyl = Cylinder::new(1.0, 1.0).unwrap();
        let f = quad(1.0, 0.0).build(1, 1.0, "f").unwrap();
        let bound = |d: f64, m: f64| {
            let gauge = gauge_from_value_bound(d, cyl).unwrap();
            let growth = GrowthCert::new(m, 1.0, ArgminSet::single(Point::scalar(0.0)), 0.0, 1).unwrap();
            let origin = Point::scalar(0.0);
            displacement_bound(&gauge, &growth, &origin, &origin, &f, &f).unwrap().bound
        };
        let (dl, dh) = (d1.min(d2), d1.max(d2));
        let (ml, mh) = (m1.min(m2), m1.max(m2));
        prop_assert!(bound(dl, ml) <= bound(dh, ml));
        prop_assert!(bound(dl, mh) <= bound(dl, ml));
    }

    #[test]
    fn valid_certificates_are_sound(
        mu in 0.5f64..5.0,
        delta in 1e-4f64..0.05,
        level in 0.05f64..2.0,
    ) {
        let fam = build_sharpness_pair(mu, delta).unwrap();
        let cyl = Cylinder::new(1.0, level).unwrap();
        let gauge = fam.gauge_bound(cyl).unwrap();
        let growth = GrowthCert::new(mu, fam.f.domain_radius(), fam.target_argmin(), 0.0, 1).unwrap();
        let xstar = Point::scalar(0.0);
        let xtilde = Point::scalar(fam.extreme_minimizer());
        let cert = displacement_bound(&gauge, &growth, &xstar, &xtilde, &fam.f, &fam.g).unwrap();
        prop_assert!(cert.reverify());
        let dist = dist_to_set(&xtilde, growth.argmin_set()).unwrap();
        if cert.valid {
            prop_assert!(dist <= cert.bound + TAU);
            prop_assert!(cert.chain().holds());
        } else {
            prop_assert!(!cert.failures.is_empty());
        }
        // with a lattice minimizer the slack covers the discretization
        let grid = Grid::new(1, 1.0, 1e-3).unwrap();
        let am = grid_argmin(&fam.g, &grid).unwrap();
        let (xg, dg) = am.farthest_from(growth.argmin_set()).unwrap();
        let cert = displacement_bound(&gauge, &growth, &xstar, &xg, &fam.f, &fam.g)
            .unwrap()
            .with_grid_minimizer(1e-3);
        if cert.valid {
            prop_assert!(dg <= cert.bound_with_slack());
        }
    }

    #[test]
    fn tolerance_field_dominates_oracle(
        eta0 in 0.0f64..0.5,
        slope in 0.0f64..0.2,
        level in 0.5f64..2.0,
    ) {
        // g sits between f - eta0 and f, so eta0 bounds every discrepancy
        let cyl = Cylinder::new(1.0, level).unwrap();
        let f = quad(1.0, 0.1).build(1, 1.0, "f").unwrap();
        let g = FuncExpr::ClampShift { inner: Box::new(quad(1.0, 0.1)), delta: eta0 }
            .build(1, 1.0, "g").unwrap();
        let tf = ToleranceField::from_expr(FuncExpr::Constant { value: eta0 }, slope, cyl, 1).unwrap();
        let bound = gauge_from_tolerance_field(&tf, 0.05, 0.05).unwrap();
        let oracle = grid_gauge(&f, &g, &Grid::new(1, 1.0, 0.05).unwrap(), &LevelGrid::new(level, 0.05).unwrap()).unwrap();
        prop_assert!(oracle <= bound.delta + TAU);
    }
}

#[test]
fn strictness_discrepancy_vanishes_everywhere() {
    let pair = build_strictness_pair(1.0, 2.0, 5.0).unwrap();
    let ts: Vec<f64> = (0..=400).map(|k| -2.0 + k as f64 * 0.01).collect();
    for k in 0..=100 {
        let x = Point::scalar(-1.0 + k as f64 * 0.02);
        let profile = discrepancy_profile(&pair.f, &pair.g, &x, &ts).unwrap();
        assert!(profile.iter().all(|&d| d == 0.0));
        assert_eq!((pair.f.eval(&x).unwrap() - pair.g.eval(&x).unwrap()).abs(), 5.0);
    }
}

#[test]
fn envelope_certificate_on_two_dimensional_ball() {
    let base = FuncExpr::Quadratic {
        scale: 1.0,
        center: None,
    };
    let env = EnvelopeCert::new(
        2,
        1.0,
        shifted(base.clone(), -0.05).build(2, 1.0, "lo").unwrap(),
        shifted(base, 0.05).build(2, 1.0, "up").unwrap(),
        0.1,
    )
    .unwrap();
    let b = envelope_width_bound(&env, Cylinder::new(1.0, 1.0).unwrap(), 0.1).unwrap();
    assert!(b.certified);
    assert!((b.delta - 0.1).abs() < 1e-12);
}
