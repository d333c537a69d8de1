use std::f64::consts::TAU;

use proptest::prelude::*;
use rotkep::coords::Regime;
use rotkep::foliation::{
    crossing_count, disc_leaf, fixed_point_scan, fixed_points, foliation_report, return_map, return_map_defect,
    return_time, stack_window, DiscWindow, FixedPoint, RESONANCE_M_MAX,
};
use rotkep::stack::{ModelHamiltonian, StackParams};

fn reference_window() -> DiscWindow {
    DiscWindow::direct(-2.0, -0.1).unwrap()
}

#[test]
fn reference_window_frozen_values() {
    let w = reference_window();
    let (lo, hi) = w.y_range();
    assert!((lo - 1.8546376797184614).abs() < 1e-12);
    assert!((hi - 5f64.sqrt()).abs() < 1e-12);
    assert!((w.edge_radius() - 0.8198389811).abs() < 1e-9);
    // x2 slows down at most by 1/Λ₁³ on the window
    assert!((w.transversality_margin() - (1.0 - lo.powi(-3))).abs() < 1e-12);
    assert!((w.transversality_margin() - 0.8432445).abs() < 1e-7);
    assert!((return_time(lo) - 7.451202162520545).abs() < 1e-12);
    // independent: one turn of x2 at rate 1 − 1/y³
    assert!((return_time(lo) - TAU / (1.0 - lo.powi(-3))).abs() < 1e-12);
}

#[test]
fn single_fixed_point_on_reference_window() {
    let w = reference_window();
    let fp = fixed_points(&w, RESONANCE_M_MAX);
    assert_eq!(fp, vec![FixedPoint::Origin { y2: w.center }]);
    // brute-force grid scan (odd size, so the centre is a node) agrees
    let scan = fixed_point_scan(&w, 201, 1e-3).unwrap();
    assert_eq!(scan.len(), 1);
    assert!((scan[0] - w.center).abs() < 1e-9);
}

#[test]
fn synthetic_window_shows_resonant_circle() {
    let w = DiscWindow::synthetic(1.2, 1.3).unwrap();
    let fp = fixed_points(&w, RESONANCE_M_MAX);
    assert_eq!(fp.len(), 2);
    match fp[1] {
        FixedPoint::ResonantCircle { y2, m, k, l, .. } => {
            assert_eq!((m, k, l), (2, 1, 2));
            assert!((y2 - 2f64.cbrt()).abs() < 1e-12);
        }
        other => panic!("{other:?}"),
    }
    let scan = fixed_point_scan(&w, 201, 1e-2).unwrap();
    // the circle is a ring of grid points, possibly split over two clusters
    let near = |y: f64, t: f64| (y - t).abs() < 5e-3;
    assert!(scan.iter().all(|&y| near(y, w.center) || near(y, 2f64.cbrt())), "{scan:?}");
    assert!(scan.iter().any(|&y| near(y, w.center)) && scan.iter().any(|&y| near(y, 2f64.cbrt())));
}

#[test]
fn retrograde_window_frozen_values() {
    let w = DiscWindow::retrograde(-1.0, -1.1).unwrap();
    assert_eq!(w.regime, Regime::Retrograde);
    let (a, b) = w.y_range();
    assert!((a.max(b) + 0.5651977).abs() < 1e-6 || (a.min(b) + 0.6741999).abs() < 1e-6);
    assert!((w.center + 0.5651977).abs() < 1e-6);
    assert!((w.edge + 0.6741999).abs() < 1e-6);
    assert!((w.edge_radius() - 1.0716).abs() < 1e-4);
    assert_eq!(fixed_points(&w, RESONANCE_M_MAX).len(), 1);
}

#[test]
fn stack_window_follows_the_regime() {
    let lo = ModelHamiltonian::build(StackParams::reference()).unwrap();
    assert_eq!(stack_window(&lo).unwrap().regime, Regime::Direct);
    let up = ModelHamiltonian::build(StackParams::reference_upper()).unwrap();
    assert_eq!(stack_window(&up).unwrap().regime, Regime::Retrograde);
}

#[test]
fn crossing_counts_frozen() {
    for (k, l, n) in [(1, 9, 8), (1, 8, 7), (1, 7, 6)] {
        let c = crossing_count(-2.0, k, l, 0.0).unwrap();
        assert_eq!(c.exact, n);
        assert_eq!(c.integrated, Some(n));
        assert!(c.exact >= 2 && c.exact == l - k);
    }
    // T_{8,1} is the collision torus: exact count only
    let col = crossing_count(-2.0, 8, 1, 0.0).unwrap();
    assert_eq!(col.integrated, None);
    assert!(crossing_count(-2.0, 1, 1, 0.0).is_err());
}

#[test]
fn retrograde_crossings_add() {
    let c = crossing_count(-1.0, 4, 1, 0.0).unwrap();
    assert_eq!(c.exact, 5);
    assert_eq!(c.integrated, Some(5));
}

#[test]
fn disc_points_and_errors() {
    let w = reference_window();
    let d = disc_leaf(&w, 0.0).unwrap();
    assert!(d.margin > 0.1);
    let p = d.point(0.0, 0.0).unwrap();
    assert_eq!(p, [0.0, 0.0, 0.0, w.center]);
    assert!(return_map(&w, 0.0, 0.0, 1.4).is_err());
    assert!(return_map(&w, 5.0, 0.0, 2.0).is_err());
    assert!(return_map(&w, f64::NAN, 0.0, 2.0).is_err());
}

#[test]
fn foliation_reports() {
    for p in [StackParams::reference(), StackParams::reference_upper(), StackParams::reference_appendix()] {
        let m = ModelHamiltonian::build(p).unwrap();
        let r = foliation_report(&m, 4, 8).unwrap();
        assert!(r.rho_closed, "{:?}", p.regime);
        assert!(r.leaf_margin > 0.0);
        for l in &r.leaves {
            assert!(l.audit.ok(1e-7), "{:?} {:?}", p.regime, l.case);
        }
    }
}

fn disc_point(w: &DiscWindow, u: f64, th: f64) -> [f64; 3] {
    let rho = w.edge_radius() * u.sqrt();
    [rho * th.cos(), rho * th.sin(), w.height(rho).unwrap()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn closed_form_matches_integration_direct(u in 0.0f64..1.0, th in 0.0f64..TAU) {
        let w = reference_window();
        let p = disc_point(&w, u, th);
        prop_assert!(return_map_defect(&w, 0.0, p, 1e-12).unwrap() < 1e-8);
    }

    #[test]
    fn closed_form_matches_integration_retro(u in 0.0f64..1.0, th in 0.0f64..TAU) {
        let w = DiscWindow::retrograde(-1.0, -1.1).unwrap();
        let p = disc_point(&w, u, th);
        prop_assert!(return_map_defect(&w, 0.0, p, 1e-12).unwrap() < 1e-8);
    }

    #[test]
    fn return_map_is_a_rotation_on_each_circle(u in 0.0f64..1.0, th in 0.0f64..TAU) {
        let w = reference_window();
        let p = disc_point(&w, u, th);
        let r = return_map(&w, p[0], p[1], p[2]).unwrap();
        prop_assert_eq!(r.output[2], p[2]);
        prop_assert!((r.output[0].hypot(r.output[1]) - p[0].hypot(p[1])).abs() < 1e-14);
        prop_assert!(w.contains_y(r.output[2]));
    }
}
