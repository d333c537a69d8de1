//! Acceptance run on the built-in reference scenario. Runs with a custom
//! harness so each criterion prints exactly one line, pass or fail.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rotkep::scenario::parse_scenario_json;
use rotkep::verify::{self, Criterion, Sizes};

const SCENARIO_R: &str = include_str!("../../../scenarios/R.json");

fn timed(
    limit: Option<Duration>,
    f: impl FnOnce() -> rotkep::Result<Criterion>,
) -> (bool, String) {
    let t = Instant::now();
    let res = f();
    let dt = t.elapsed();
    match res {
        Ok(c) => {
            let in_time = limit.is_none_or(|l| dt <= l);
            let mut line = c.line();
            if c.pass && !in_time {
                line = line.replacen(" PASS ", " FAIL ", 1);
            }
            line.push_str(&format!(" elapsed={:.2}s", dt.as_secs_f64()));
            if let Some(l) = limit {
                line.push_str(&format!(" limit={}s", l.as_secs()));
            }
            (c.pass && in_time, line)
        }
        Err(e) => (false, format!("error: {e}")),
    }
}

fn verify_json() -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_rotkep"))
        .args(["verify", "--scenario", "R", "--seed", "0", "--json"])
        .output()
        .map_err(|e| e.to_string())?;
    if out.stdout.is_empty() {
        return Err(format!("no report, status {}", out.status));
    }
    Ok(out.stdout)
}

fn main() -> ExitCode {
    let cfg = parse_scenario_json(SCENARIO_R).expect("built-in scenario");
    let (model, appendix) = verify::scenario_models(&cfg).expect("scenario models");
    let appendix = appendix.expect("scenario R has an appendix stack");
    let seed = cfg.seed;
    let sizes = Sizes::default();
    let secs = |s| Some(Duration::from_secs(s));

    let mut results = vec![
        timed(secs(1), verify::criterion_1),
        timed(secs(120), || verify::criterion_2(seed, sizes.flow_states)),
        timed(secs(60), || verify::criterion_3(seed, sizes.symplectic_points)),
        timed(secs(1), verify::criterion_4),
        timed(secs(60), || verify::criterion_5(&model, seed)),
        timed(secs(60), || verify::criterion_6(&model, Some(&appendix), seed)),
        timed(secs(120), || verify::criterion_7(&model)),
        timed(None, || verify::criterion_8(&model)),
        timed(secs(60), || verify::criterion_9(&appendix, seed)),
        timed(secs(60), || verify::criterion_10(&model, seed, sizes.return_samples)),
    ];
    for (k, r) in results.iter_mut().enumerate() {
        if r.1.starts_with("error") {
            r.1 = format!("criterion {:>2} FAIL {}", k + 1, r.1);
        }
    }

    let det = match (verify_json(), verify_json()) {
        (Ok(a), Ok(b)) => {
            let same = a == b;
            let line = format!(
                "criterion 11 {} determinism: bytes={} identical={}",
                if same { "PASS" } else { "FAIL" },
                a.len(),
                same
            );
            (same, line)
        }
        (Err(e), _) | (_, Err(e)) => (false, format!("criterion 11 FAIL determinism: {e}")),
    };
    results.push(det);

    for (_, line) in &results {
        println!("{line}");
    }
    let failed = results.iter().filter(|r| !r.0).count();
    println!("acceptance: {} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
