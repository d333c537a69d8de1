use proptest::prelude::*;
use rotkep::coords::{PoincareState, Regime};
use rotkep::io::{parse_poincare_csv, parse_state_csv, write_atomic, write_leaf_csv, write_poincare_csv, write_state_csv};
use rotkep::leaf::{solve_leaf_with, LeafCase};
use rotkep::phase::PhaseState;
use rotkep::scenario::{parse_scenario_json, parse_stack_params_json, ScenarioFile};
use rotkep::stack::{ModelHamiltonian, StackKind, StackParams};
use rotkep::Error;

fn finite() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL
}

#[test]
fn poincare_csv_checks_regime_sign() {
    let ok = parse_poincare_csv("x1,x2,y1,y2,regime\n0,1,0,2,direct\n0,1,0,-2,retrograde\n").unwrap();
    assert_eq!(ok[1].regime, Regime::Retrograde);
    assert!(parse_poincare_csv("x1,x2,y1,y2,regime\n0,1,0,-2,direct\n").is_err());
    assert!(parse_poincare_csv("x1,x2,y1,y2,regime\n0,1,0,2,sideways\n").is_err());
    // regime column optional
    assert_eq!(parse_poincare_csv("x1,x2,y1,y2\n0,1,0,2\n").unwrap()[0].regime, Regime::Direct);
}

#[test]
fn state_csv_comments_and_errors() {
    let s = parse_state_csv("# header comment\nq1,q2,p1,p2\n1,2,3,4\n# trailing\n").unwrap();
    assert_eq!(s.len(), 1);
    for bad in ["", "q1,q2,p1,p2\n1,2,3\n", "q1,q2,p1,p2\n1,x,3,4\n", "q1,q2,p1,p2\n1,inf,3,4\n"] {
        assert!(matches!(parse_state_csv(bad), Err(Error::Parse(_))) || parse_state_csv(bad).map(|v| v.is_empty()).unwrap_or(false), "{bad:?}");
    }
}

#[test]
fn leaf_csv_header_and_rows() {
    let m = ModelHamiltonian::build(StackParams::reference()).unwrap();
    let leaf = solve_leaf_with(&m, LeafCase::CylY2L3, 3.0, 64).unwrap();
    let mut buf = Vec::new();
    write_leaf_csv(&mut buf, &leaf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,a,x2,y2,r"));
    assert_eq!(lines.count(), 64);
    assert!(!text.contains('\r'));
}

#[test]
fn atomic_write_replaces_and_leaves_no_temp() {
    let dir = std::env::temp_dir().join(format!("rotkep-io-{}", std::process::id()));
    let path = dir.join("out.csv");
    write_atomic(&path, b"a\n").unwrap();
    write_atomic(&path, b"b\n").unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), b"b\n");
    let names: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 1);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn scenario_validation_names_the_inequality() {
    let err = parse_scenario_json(r#"{"B": 5}"#).unwrap_err();
    assert!(matches!(err, Error::Parameter { .. }), "{err}");
    let err = parse_scenario_json(r#"{"rtol": 0.5}"#).unwrap_err();
    assert!(err.to_string().contains("rtol"));
    assert!(parse_scenario_json(r#"{"c": "x"}"#).is_err());
    assert!(parse_scenario_json("[1,2]").is_err());
    let up = parse_scenario_json(r#"{"regime":"upper","nu3":-3,"D":-4,"c":-1,"e0":-1.1}"#).unwrap();
    assert_eq!(up.params.regime, StackKind::Upper);
}

#[test]
fn overlay_keeps_file_values_under_missing_flags() {
    let base: ScenarioFile = serde_json::from_str(r#"{"name":"x","c":-2.5,"E0":-0.05,"Lambda3":4,"B":-6,"seed":9}"#).unwrap();
    let top = ScenarioFile { seed: Some(1), ..Default::default() };
    let cfg = base.overlay(&top).resolve().unwrap();
    assert_eq!((cfg.name.as_str(), cfg.params.c, cfg.seed), ("x", -2.5, 1));
}

#[test]
fn stack_params_json_requires_every_field() {
    let full = serde_json::to_string(&StackParams::reference()).unwrap();
    assert_eq!(parse_stack_params_json(&full).unwrap().params, StackParams::reference());
    assert!(parse_stack_params_json(r#"{"regime":"lower"}"#).is_err());
    let bad = full.replace("-4.0", "9.0");
    assert!(parse_stack_params_json(&bad).is_err());
}

proptest! {
    #[test]
    fn state_csv_round_trip_is_exact(rows in prop::collection::vec((finite(), finite(), finite(), finite()), 0..20)) {
        let states: Vec<PhaseState> = rows.iter().map(|&(a, b, c, d)| PhaseState::new(a, b, c, d)).collect();
        let mut buf = Vec::new();
        write_state_csv(&mut buf, &states).unwrap();
        let back = parse_state_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(back.len(), states.len());
        for (x, y) in back.iter().zip(&states) {
            prop_assert_eq!(x.to_array().map(f64::to_bits), y.to_array().map(f64::to_bits));
        }
    }

    #[test]
    fn poincare_csv_round_trip_is_exact(rows in prop::collection::vec((finite(), finite(), finite(), 1e-3f64..10.0, any::<bool>()), 0..20)) {
        let states: Vec<PoincareState> = rows
            .iter()
            .map(|&(a, b, c, d, retro)| {
                if retro { PoincareState::new(a, b, c, -d, Regime::Retrograde) } else { PoincareState::new(a, b, c, d, Regime::Direct) }
            })
            .collect();
        let mut buf = Vec::new();
        write_poincare_csv(&mut buf, &states).unwrap();
        let back = parse_poincare_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(back, states);
    }

    #[test]
    fn parsers_never_panic(text in ".{0,200}") {
        let _ = parse_state_csv(&text);
        let _ = parse_poincare_csv(&text);
        let _ = parse_scenario_json(&text);
        let _ = parse_stack_params_json(&text);
    }

    #[test]
    fn scenario_values_survive_json(c in -3.0f64..-1.6, seed in any::<u64>()) {
        let text = format!(r#"{{"c": {c}, "seed": {seed}}}"#);
        let cfg = parse_scenario_json(&text);
        if let Ok(cfg) = cfg {
            prop_assert_eq!(cfg.params.c, c);
            prop_assert_eq!(cfg.seed, seed);
        }
    }
}
