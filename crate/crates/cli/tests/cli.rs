use std::process::{Command, Output};

fn rotkep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rotkep")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn circular_json_has_three_ordered_roots() {
    let o = rotkep(&["circular", "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let roots = v["roots"].as_array().unwrap();
    let e: Vec<f64> = roots.iter().map(|r| r["E"].as_f64().unwrap()).collect();
    assert_eq!(e.len(), 3);
    assert!(e[0] < e[1] && e[1] < -0.5 && -0.5 < e[2]);
}

#[test]
fn cylinder_csv_runs_from_root_two_to_root_six() {
    let o = rotkep(&["leaf", "--case", "cyl_y2_L3", "--nodes", "256"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,a,x2,y2,r"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|f| f.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 256);
    assert!((rows[0][4] - 2f64.sqrt()).abs() < 1e-6);
    assert!((rows[255][4] - 6f64.sqrt()).abs() < 1e-6);
}

#[test]
fn bad_parameters_exit_two_and_name_the_bound() {
    let o = rotkep(&["--c", "5", "circular"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`c`"));
    assert_eq!(rotkep(&["--scenario", "nowhere", "hill"]).status.code(), Some(2));
    assert_eq!(rotkep(&["cz", "--orbit", "Q1"]).status.code(), Some(2));
}

#[test]
fn failed_run_leaves_no_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = rotkep(&["--out", d, "leaf", "--case", "plane_x2_0", "--init", "50"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn out_directory_receives_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = rotkep(&["--out", dir.path().to_str().unwrap(), "cz"]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(dir.path().join("cz.csv")).unwrap();
    let labels: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(labels, ["P3", "P2", "P3'"]);
    assert!(text.lines().nth(2).unwrap().starts_with("P2,2,false"));
}

#[test]
fn transform_reads_a_state_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("s.csv");
    std::fs::write(&input, "q1,q2,p1,p2\n1,0,0,1\n0.8,0.1,-0.2,1.1\n").unwrap();
    let o = rotkep(&["transform", "--input", input.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 3);
    for row in text.lines().skip(1) {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[8], "direct");
        assert!(f[9].parse::<f64>().unwrap() < 1e-12);
    }
    std::fs::write(&input, "q1,q2,p1,p2\n1,0,0\n").unwrap();
    assert_eq!(rotkep(&["transform", "--input", input.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn scenario_file_and_flag_overlay() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("s.json");
    std::fs::write(&f, r#"{"c": -2.5, "E0": -0.05, "Lambda3": 4, "B": -6}"#).unwrap();
    let o = rotkep(&["--scenario", f.to_str().unwrap(), "hill", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["c"].as_f64(), Some(-2.5));
    let o = rotkep(&["--scenario", f.to_str().unwrap(), "--c", "-3", "hill", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["c"].as_f64(), Some(-3.0));
}

#[test]
fn quick_verify_on_the_upper_stack() {
    let o = rotkep(&["--scenario", "U", "verify", "--quick"]);
    let text = stdout(&o);
    assert!(o.status.success(), "{text}");
    assert!(text.lines().any(|l| l.starts_with("criterion  9 SKIP")));
    assert!(!text.contains(" FAIL "));
}
