use std::f64::consts::{PI, TAU};

use rotkep::contact::Contact;
use rotkep::cz::{annotate, cz_index, rotation_interval};
use rotkep::orbits::{
    binding_orbits, closing_defect, family_period, family_range, involution_check, reeb_period, torus_orbits,
    LoopFamily,
};
use rotkep::stack::{ModelHamiltonian, StackParams};

fn model(p: StackParams) -> ModelHamiltonian {
    ModelHamiltonian::build(p).unwrap()
}

fn indices(m: &ModelHamiltonian) -> Vec<(String, i64, bool)> {
    binding_orbits(m)
        .unwrap()
        .into_iter()
        .map(|mut o| {
            annotate(m, &mut o, 16).unwrap();
            (o.label, o.cz.unwrap(), o.degenerate.unwrap())
        })
        .collect()
}

#[test]
fn binding_indices_lower_and_upper() {
    for p in [StackParams::reference(), StackParams::reference_upper()] {
        let got = indices(&model(p));
        let expect = [("P3", 3), ("P2", 2), ("P3'", 3)];
        assert_eq!(got.len(), 3);
        for ((l, mu, deg), (el, emu)) in got.iter().zip(expect) {
            assert_eq!((l.as_str(), *mu, *deg), (el, emu, false));
        }
    }
}

#[test]
fn appendix_binding_indices_frozen() {
    // global (x1, y1)-frame values; these orbits are not contractible in Σ
    let got = indices(&model(StackParams::reference_appendix()));
    assert_eq!(got, vec![("Q1".to_string(), 3, false), ("Q2".to_string(), 1, false)]);
}

#[test]
fn reeb_periods_match_closed_forms() {
    let m = model(StackParams::reference());
    let c = Contact::new(&m).unwrap();
    for o in binding_orbits(&m).unwrap() {
        let num = reeb_period(&c, &o, 256).unwrap();
        assert!((num - o.period_reeb.unwrap()).abs() < 1e-8, "{}: {num}", o.label);
        assert!(closing_defect(&m, &o).unwrap() < 1e-9);
    }
    let periods: Vec<f64> = binding_orbits(&m).unwrap().iter().map(|o| o.period_reeb.unwrap()).collect();
    assert!((periods[0] - 6.0 * PI).abs() < 1e-12);
    assert!((periods[1] - 2.0 * PI).abs() < 1e-12);

    let a = model(StackParams::reference_appendix());
    let ca = Contact::new(&a).unwrap();
    for o in binding_orbits(&a).unwrap() {
        let num = reeb_period(&ca, &o, 256).unwrap();
        assert!((num - o.period_reeb.unwrap()).abs() < 1e-8, "{}: {num}", o.label);
    }
}

#[test]
fn p2_is_rho_symmetric() {
    let m = model(StackParams::reference());
    let os = binding_orbits(&m).unwrap();
    assert!(os[1].symmetric && !os[0].symmetric);
    let (d, fixed) = involution_check(&m, &os[1], 1e-8).unwrap();
    assert!(d < 1e-8);
    assert!(fixed >= 1);
}

#[test]
fn torus_orbits_have_index_at_least_three() {
    let m = model(StackParams::reference());
    for fam in [LoopFamily::Inner, LoopFamily::Outer] {
        let tori = torus_orbits(&m, fam, 4, 40).unwrap();
        assert_eq!(tori.len(), 4);
        for mut o in tori {
            let (p, q) = o.ratio.unwrap();
            let v = o.h2_level.unwrap();
            let dt = (family_period(&m, fam, v).unwrap() / TAU - p as f64 / q as f64).abs();
            assert!(dt < 1e-9 * p as f64, "{} {dt:e}", o.label);
            let cd = closing_defect(&m, &o).unwrap();
            assert!(cd < 1e-6, "{} {cd:e}", o.label);
            annotate(&m, &mut o, 16).unwrap();
            assert!(o.cz.unwrap() >= 3, "{} {:?}", o.label, o.cz);
            let mut img = o.rho_image();
            annotate(&m, &mut img, 16).unwrap();
            assert_eq!(img.cz, o.cz);
        }
    }
}

#[test]
fn family_ranges_are_nested_in_the_critical_values() {
    let m = model(StackParams::reference());
    let (a, b) = family_range(&m, LoopFamily::Inner, 0.0).unwrap();
    assert!((a + 5.0).abs() < 1e-12 && (b + 3.0).abs() < 1e-12);
    let (a, b) = family_range(&m, LoopFamily::Outer, 0.0).unwrap();
    assert!((a + 3.0).abs() < 1e-12 && (b + 2.0).abs() < 1e-12);
}

#[test]
fn index_reads_the_rotation_interval() {
    let m = model(StackParams::reference());
    let p2 = binding_orbits(&m).unwrap().remove(1);
    let iv = rotation_interval(&m, &p2, 16).unwrap();
    // the interval straddles 2π, which makes the index even
    assert!(iv.lo < TAU && TAU < iv.hi);
    assert_eq!(cz_index(&iv).value, 2);
}
