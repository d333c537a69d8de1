use std::f64::consts::TAU;

use proptest::prelude::*;
use rotkep::catalog::{
    circular_orbits, el_range_report, gcd, hill_radii, tori_on_level, torus_energy, torus_on_level, CircularLabel,
    HillRadii,
};
use rotkep::phase::{eval_hamiltonian, eval_integrals};

/// Bisection on 2E(c − E)² + 1 over every sign change on a fine scan.
fn oracle_roots(c: f64) -> Vec<f64> {
    let p = |e: f64| 2.0 * e * (c - e) * (c - e) + 1.0;
    let (lo, hi) = (c - 2.0, -1e-9);
    let n = 20_000;
    let mut out = Vec::new();
    for i in 0..n {
        let mut a = lo + (hi - lo) * i as f64 / n as f64;
        let mut b = lo + (hi - lo) * (i + 1) as f64 / n as f64;
        if p(a) * p(b) > 0.0 {
            continue;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if p(a) * p(m) <= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        out.push(0.5 * (a + b));
    }
    out
}

#[test]
fn three_roots_at_reference_level() {
    let set = circular_orbits(-2.0).unwrap();
    let oracle = oracle_roots(-2.0);
    assert_eq!(set.roots.len(), 3);
    assert_eq!(oracle.len(), 3);
    for (o, e) in set.roots.iter().zip(&oracle) {
        assert!((o.energy - e).abs() < 1e-10, "{:?} vs {e}", o.label);
    }
    let get = |l| set.get(l).unwrap().energy;
    // frozen after the oracle agreed
    assert!((get(CircularLabel::RetroB) + 2.4516059629557763).abs() < 1e-13);
    assert!((get(CircularLabel::DirectB) + 1.4030317167626847).abs() < 1e-13);
    assert!((get(CircularLabel::DirectU) + 0.1453623202815386).abs() < 1e-13);
    let du = get(CircularLabel::DirectU);
    assert!(((du + 2.0) - (-2.0 * du).powf(-0.5)).abs() < 1e-8);
}

#[test]
fn single_retrograde_root_above_critical_value() {
    let set = circular_orbits(-1.0).unwrap();
    assert_eq!(set.roots.len(), 1);
    assert_eq!(set.roots[0].label, CircularLabel::RetroU);
    assert_eq!(oracle_roots(-1.0).len(), 1);
    assert!(circular_orbits(-1.5).is_err());
    assert!(circular_orbits(0.5).is_err());
}

#[test]
fn hill_radii_cases() {
    match hill_radii(-2.0).unwrap() {
        HillRadii::Split { inner, outer } => {
            for r in [inner, outer] {
                assert!((-1.0 / r - 0.5 * r * r + 2.0).abs() < 1e-13);
            }
            assert!(inner < 1.0 && 1.0 < outer);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(hill_radii(-1.5).unwrap(), HillRadii::Double { r: 1.0 });
    assert_eq!(hill_radii(-1.0).unwrap(), HillRadii::Connected);
}

#[test]
fn collision_torus_on_reference_level() {
    // E(8,1) = −2 = c, so L = 0
    let t = torus_on_level(-2.0, 8, 1).unwrap().unwrap();
    assert!(t.collision);
    assert!((t.e - 1.0).abs() < 1e-12);
    assert!(torus_on_level(-2.0, 1, 1).unwrap().is_none());
}

#[test]
fn tori_listing_matches_brute_force() {
    let c = -2.0;
    let got = tori_on_level(c, f64::NEG_INFINITY, 0.0, 6).unwrap();
    let mut expect = Vec::new();
    for l in 1..=6u64 {
        for k in 1..=24u64 {
            if gcd(k, l) != 1 {
                continue;
            }
            let e = -0.5 * (k as f64 / l as f64).powf(2.0 / 3.0);
            let ang = e - c;
            let e2 = 2.0 * e * ang * ang + 1.0;
            if e2 > -1e-13 && e2 <= 1.0 + 1e-13 {
                expect.push((k, l));
            }
        }
    }
    let mut got_kl: Vec<_> = got.iter().map(|t| (t.k, t.l)).collect();
    got_kl.sort();
    expect.sort();
    assert_eq!(got_kl, expect);
}

#[test]
fn energy_and_momentum_windows() {
    for c in [-2.0, -1.0] {
        let r = el_range_report(c, 400, 7).unwrap();
        assert!(r.ok(), "{c}: {r:?}");
    }
}

proptest! {
    #[test]
    fn roots_lie_on_their_level(c in -4.0f64..-0.05) {
        prop_assume!((c + 1.5f64).abs() > 1e-3);
        let set = circular_orbits(c).unwrap();
        prop_assert_eq!(set.roots.len(), if c < -1.5 { 3 } else { 1 });
        for w in set.roots.windows(2) {
            prop_assert!(w[0].energy < w[1].energy);
        }
        for o in &set.roots {
            let h = eval_hamiltonian(&o.state).unwrap();
            prop_assert!((h - c).abs() < 1e-9);
            let i = eval_integrals(&o.state).unwrap();
            prop_assert!(i.e.unwrap() < 1e-6);
            prop_assert_eq!(o.label.is_direct(), o.l > 0.0);
        }
    }

    #[test]
    fn torus_energy_resonance(k in 1u64..40, l in 1u64..40) {
        prop_assume!(gcd(k, l) == 1);
        let e = torus_energy(k, l).unwrap();
        // k Kepler periods fill l turns of the frame
        let period = TAU * (-2.0 * e).powf(-1.5);
        prop_assert!((k as f64 * period - TAU * l as f64).abs() < 1e-9 * l as f64);
    }
}
