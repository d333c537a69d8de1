use std::f64::consts::TAU;

use proptest::prelude::*;
use rotkep::catalog::{circular_orbits, CircularLabel};
use rotkep::contact::{rho, Contact};
use rotkep::sampler::SigmaSampler;
use rotkep::stack::{ModelHamiltonian, StackKind, StackParams};
use rotkep::Error;

fn lower() -> ModelHamiltonian {
    ModelHamiltonian::build(StackParams::reference()).unwrap()
}

fn upper() -> ModelHamiltonian {
    ModelHamiltonian::build(StackParams::reference_upper()).unwrap()
}

fn appendix() -> ModelHamiltonian {
    ModelHamiltonian::build(StackParams::reference_appendix()).unwrap()
}

#[test]
fn derived_constants_from_the_circular_orbit() {
    let m = lower();
    let du = circular_orbits(-2.0).unwrap().get(CircularLabel::DirectU).unwrap().energy;
    assert!((m.derived.lambda1 - (-2.0 * du).powf(-0.5)).abs() < 1e-12);
    assert!((m.derived.lambda2 - 5f64.sqrt()).abs() < 1e-12);
    assert!(m.derived.b_bound > m.params.b);
    assert_eq!(m.center(), 3.0);
    assert_eq!(m.level(), -2.0);
}

#[test]
fn violated_inequalities_name_the_parameter() {
    let bad_b = StackParams { b: 10.0, ..StackParams::reference() };
    match ModelHamiltonian::build(bad_b) {
        Err(Error::Parameter { name, .. }) => assert!(name.contains('B') || name.contains('b'), "{name}"),
        other => panic!("{other:?}"),
    }
    let bad_eps = StackParams { eps2: 4.0, ..StackParams::reference() };
    assert!(matches!(ModelHamiltonian::build(bad_eps), Err(Error::Parameter { .. })));
    let bad_l3 = StackParams { lambda3: 2.0, ..StackParams::reference() };
    assert!(ModelHamiltonian::build(bad_l3).is_err());
    assert!(ModelHamiltonian::build_unchecked(bad_b).is_ok());
}

#[test]
fn three_critical_points_lower() {
    let m = lower();
    let rep = m.critical_points().unwrap();
    let expect = [(0.0, -5.0, 0u8), (TAU, -3.0, 1), (2.0 * TAU, -5.0, 0)];
    assert_eq!(rep.points.len(), 3);
    for (p, (x, v, i)) in rep.points.iter().zip(expect) {
        assert!((p.x2 - x).abs() < 1e-9 && (p.y2 - 3.0).abs() < 1e-9);
        assert!((p.value - v).abs() < 1e-9);
        assert_eq!(p.morse_index, i);
    }
    assert!(m.sign_certificates(128, 128, 0.1).unwrap().ok());
}

#[test]
fn three_critical_points_upper() {
    let m = upper();
    let rep = m.critical_points().unwrap();
    assert_eq!(rep.points.len(), 3);
    let idx: Vec<u8> = rep.points.iter().map(|p| p.morse_index).collect();
    assert_eq!(idx, [0, 1, 0]);
    for p in &rep.points {
        assert!((p.y2 - m.center()).abs() < 1e-9);
    }
    assert!(m.sign_certificates(128, 128, 0.1).unwrap().ok());
}

#[test]
fn sigma_avoids_the_kepler_singular_set() {
    let lo = SigmaSampler::new(&lower()).unwrap().samples(2000, 1);
    assert!(lo.iter().all(|p| p[3] > 1.0));
    let up = SigmaSampler::new(&upper()).unwrap().samples(2000, 1);
    assert!(up.iter().all(|p| p[3] < 0.0));
}

#[test]
fn transversality_positive_on_all_stacks() {
    for m in [lower(), upper(), appendix()] {
        let s = SigmaSampler::new(&m).unwrap();
        let scan = Contact::new(&m).unwrap().transversality_scan(&s, 3000, 2).unwrap();
        assert!(scan.min > 0.0, "{:?}: {}", m.kind(), scan.min);
    }
}

#[test]
fn no_liouville_field_for_plain_hamiltonian() {
    let m = ModelHamiltonian::build(StackParams { regime: StackKind::Plain, ..StackParams::reference() }).unwrap();
    assert!(Contact::new(&m).is_err());
}

fn sigma_point(m: &ModelHamiltonian, seed: u64) -> [f64; 4] {
    SigmaSampler::new(m).unwrap().samples(1, seed)[0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn samples_lie_on_the_level(seed in any::<u64>()) {
        for m in [lower(), upper(), appendix()] {
            let p = sigma_point(&m, seed);
            prop_assert!((m.value(&p).unwrap() - m.level()).abs() < 1e-9);
        }
    }

    #[test]
    fn rho_preserves_the_model(seed in any::<u64>()) {
        for m in [lower(), upper()] {
            let p = sigma_point(&m, seed);
            prop_assert!((m.value(&rho(&p)).unwrap() - m.value(&p).unwrap()).abs() < 1e-10);
            let back = rho(&rho(&p));
            prop_assert!((0..4).all(|k| (back[k] - p[k]).abs() < 1e-14));
        }
    }

    #[test]
    fn hamiltonian_field_is_symplectic_gradient(seed in any::<u64>()) {
        let m = lower();
        let p = sigma_point(&m, seed);
        let x = m.hamiltonian_field(&p).unwrap();
        let h = 1e-6;
        let d = |i: usize| {
            let (mut a, mut b) = (p, p);
            a[i] += h;
            b[i] -= h;
            (m.value(&a).unwrap() - m.value(&b).unwrap()) / (2.0 * h)
        };
        let expect = [d(2), d(3), -d(0), -d(1)];
        for k in 0..4 {
            prop_assert!((x[k] - expect[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn contact_form_identities(seed in any::<u64>()) {
        for m in [lower(), upper(), appendix()] {
            let c = Contact::new(&m).unwrap();
            let p = sigma_point(&m, seed);
            prop_assert!(c.field.liouville_defect(&p, 1e-4) < 1e-6);
            prop_assert!(c.lambda_xh(&p).unwrap() > 0.0);
            prop_assert!(c.reeb_kernel_defect(&p, 1e-5).unwrap() < 1e-5);
            if m.kind() != rotkep::stack::StackKind::Appendix {
                prop_assert!(c.anti_invariance_defect(&p) < 1e-12);
            }
        }
    }
}
