use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use rotkep::contact::Contact;
use rotkep::leaf::{
    annulus_assign, annulus_leaf, annulus_leaf_with, annulus_point, leaf_audit, mirror_leaf, r_peak, solve_leaf,
    solve_leaf_with, LeafCase,
};
use rotkep::sampler::SigmaSampler;
use rotkep::stack::{ModelHamiltonian, StackParams};

fn lower() -> ModelHamiltonian {
    ModelHamiltonian::build(StackParams::reference()).unwrap()
}

fn appendix() -> ModelHamiltonian {
    ModelHamiltonian::build(StackParams::reference_appendix()).unwrap()
}

/// Reeb period of the binding orbit over (x2, center): π r² with
/// r² = 2(c − H̃₂).
fn binding_period(m: &ModelHamiltonian, x2: f64) -> f64 {
    PI * 2.0 * (m.level() - m.h2_value(x2, m.center()).unwrap())
}

#[test]
fn plane_energies_are_binding_periods() {
    let m = lower();
    let l1 = m.derived.lambda1;
    let p0 = solve_leaf(&m, LeafCase::PlaneX2_0, 0.5 * (l1 + 3.0)).unwrap();
    assert!((p0.energy - binding_period(&m, 0.0)).abs() < 1e-5);
    assert!((p0.energy - 6.0 * PI).abs() < 1e-5);
    assert!((p0.y2[0] - l1).abs() < 1e-6 && (p0.y2[p0.len() - 1] - 3.0).abs() < 1e-6);
    assert!(p0.y2.windows(2).all(|w| w[1] > w[0]));
    let plus = p0.asymptotes.iter().find(|a| a.end == "+inf").unwrap();
    assert_eq!((plus.orbit.as_str(), plus.sign), ("P3", 1));

    let p2 = solve_leaf(&m, LeafCase::PlaneX2_2pi, 0.5 * (3.0 + m.lambda_max(TAU).unwrap())).unwrap();
    assert!((p2.energy - 2.0 * PI).abs() < 1e-5);
    assert!(p2.masses.0.abs() < 1e-6);
}

#[test]
fn cylinder_connects_p3_to_p2() {
    let m = lower();
    let cyl = solve_leaf(&m, LeafCase::CylY2L3, PI).unwrap();
    assert!((cyl.masses.0 - 2.0 * PI).abs() < 1e-5);
    assert!((cyl.masses.1 - 6.0 * PI).abs() < 1e-5);
    assert!(cyl.y2.iter().all(|y| *y == 3.0));
    // r runs from √2 (over P2) to √6 (over P3)
    assert!((cyl.r[0] - 2f64.sqrt()).abs() < 1e-6);
    assert!((cyl.r[cyl.len() - 1] - 6f64.sqrt()).abs() < 1e-6);
    let orbits: Vec<_> = cyl.asymptotes.iter().map(|p| p.orbit.as_str()).collect();
    assert!(orbits.contains(&"P3") && orbits.contains(&"P2"));
}

#[test]
fn audits_pass_on_default_leaves() {
    let m = lower();
    let c = Contact::new(&m).unwrap();
    for (case, init) in [
        (LeafCase::PlaneX2_0, 2.4),
        (LeafCase::PlaneX2_2pi, 3.5),
        (LeafCase::PlaneX2_4pi, 2.4),
        (LeafCase::CylY2L3, PI),
        (LeafCase::CylY2L3Mirror, 3.0 * PI),
    ] {
        let leaf = solve_leaf(&m, case, init).unwrap();
        let a = leaf_audit(&c, &leaf).unwrap();
        assert!(a.ok(1e-7), "{}: {a:?}", case.as_str());
    }
}

#[test]
fn out_of_range_inits_rejected() {
    let m = lower();
    assert!(solve_leaf(&m, LeafCase::PlaneX2_0, 3.0).is_err());
    assert!(solve_leaf(&m, LeafCase::PlaneX2_0, 1.0).is_err());
    assert!(solve_leaf(&m, LeafCase::PlaneX2_0, 50.0).is_err());
    assert!(solve_leaf(&m, LeafCase::CylY2L3, 7.0).is_err());
    assert!(solve_leaf(&m, LeafCase::PlaneX2_0, f64::NAN).is_err());
    assert!(solve_leaf(&appendix(), LeafCase::PlaneX2_0, 2.4).is_err());
    assert!(annulus_leaf(&m, 0.0).is_err());
}

#[test]
fn case_names_round_trip() {
    for c in [
        LeafCase::PlaneX2_0,
        LeafCase::PlaneX2_2pi,
        LeafCase::PlaneX2_4pi,
        LeafCase::CylY2L3,
        LeafCase::CylY2L3Mirror,
        LeafCase::Annulus,
    ] {
        assert_eq!(LeafCase::parse(c.as_str()).unwrap(), c);
    }
    assert!(LeafCase::parse("plane").is_err());
}

#[test]
fn annulus_frozen_values() {
    let a = appendix();
    let leaf = annulus_leaf(&a, 0.0).unwrap();
    let l1 = a.derived.lambda1;
    let expect = TAU * (3.0 - l1) + 4.0 * PI;
    assert!((leaf.energy - expect).abs() < 1e-5);
    assert!((leaf.energy - 19.7628943165).abs() < 1e-8);
    assert!((leaf.masses.0 + 7.1965237).abs() < 1e-6);
    assert!((leaf.masses.1 - 4.0 * PI).abs() < 1e-6);
    let k = r_peak(&leaf).unwrap();
    assert!((leaf.r[k] - 2.0).abs() < 1e-12);
    assert_eq!(leaf.s[k], 0.0);
    assert!(leaf.x2.iter().all(|x| x.is_nan()));
    let audit = leaf_audit(&Contact::new(&a).unwrap(), &leaf).unwrap();
    assert!(audit.ok(1e-7), "{audit:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn plane_energy_independent_of_init(t in 0.05f64..0.95) {
        let m = lower();
        let l1 = m.derived.lambda1;
        let leaf = solve_leaf_with(&m, LeafCase::PlaneX2_0, l1 + t * (3.0 - l1), 1024).unwrap();
        prop_assert!((leaf.energy - 6.0 * PI).abs() < 1e-5);
    }

    #[test]
    fn cylinder_masses_independent_of_init(x in 0.3f64..(TAU - 0.3)) {
        let m = lower();
        let leaf = solve_leaf_with(&m, LeafCase::CylY2L3, x, 1024).unwrap();
        prop_assert!((leaf.masses.0 - 2.0 * PI).abs() < 1e-5);
        prop_assert!((leaf.masses.1 - 6.0 * PI).abs() < 1e-5);
    }

    #[test]
    fn mirror_is_an_involution(t in 0.05f64..0.95) {
        let m = lower();
        let l1 = m.derived.lambda1;
        let leaf = solve_leaf_with(&m, LeafCase::PlaneX2_0, l1 + t * (3.0 - l1), 512).unwrap();
        let once = mirror_leaf(&leaf);
        prop_assert_eq!(once.case, LeafCase::PlaneX2_4pi);
        prop_assert!(once.asymptotes.iter().any(|a| a.orbit == "P3'"));
        let twice = mirror_leaf(&once);
        prop_assert_eq!(twice.case, leaf.case);
        for k in 0..leaf.len() {
            prop_assert!((twice.x2[k] - leaf.x2[k]).abs() < 1e-12);
            prop_assert_eq!(twice.y2[k], leaf.y2[k]);
        }
    }

    #[test]
    fn annulus_energy_independent_of_theta(th in 0.0f64..TAU) {
        let a = appendix();
        let leaf = annulus_leaf_with(&a, th, a.center(), 1024).unwrap();
        prop_assert!((leaf.energy - 19.7628943165).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn annulus_coordinates_round_trip(seed in any::<u64>()) {
        let a = appendix();
        let leaf = annulus_leaf(&a, 0.0).unwrap();
        let p = SigmaSampler::new(&a).unwrap().samples(1, seed)[0];
        prop_assume!(p[3] > leaf.y2[0] && p[3] < leaf.y2[leaf.len() - 1] && p[0].hypot(p[2]) > 0.0);
        let at = annulus_assign(&a, &leaf, &p).unwrap();
        let q = annulus_point(&a, &leaf, &at).unwrap();
        prop_assert!((q[0] - p[0]).abs() < 1e-8 && (q[2] - p[2]).abs() < 1e-8 && (q[3] - p[3]).abs() < 1e-8);
        prop_assert!(rotkep::coords::wrap_pi(q[1] - p[1]).abs() < 1e-12);
    }
}
