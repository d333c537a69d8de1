use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use rotkep::catalog::{circular_orbits, hill_radii, tori_on_level, torus_on_level, CircularOrbit};
use rotkep::coords::{poincare_inverse, poincare_map, retrograde_inverse, retrograde_poincare, Regime};
use rotkep::cz::annotate;
use rotkep::foliation::{
    crossing_count, fixed_point_scan, fixed_points, foliation_report, return_map, stack_window, CrossingCount,
    FixedPoint, RESONANCE_M_MAX,
};
use rotkep::io::{fmt_f64, read_state_csv, write_atomic, write_leaf_csv};
use rotkep::leaf::{annulus_leaf_with, solve_leaf_with, LeafCase, LEAF_NODES};
use rotkep::orbits::binding_orbits;
use rotkep::scenario::{load_scenario_file, parse_scenario_file, ScenarioConfig, ScenarioFile};
use rotkep::stack::{ModelHamiltonian, StackKind};
use rotkep::verify::{self, Sizes};

const BUILTIN: [(&str, &str); 3] = [
    ("R", include_str!("../../../scenarios/R.json")),
    ("R-appendix", include_str!("../../../scenarios/R-appendix.json")),
    ("U", include_str!("../../../scenarios/U.json")),
];

#[derive(Parser)]
#[command(name = "rotkep", version, about = "Rotating Kepler problem: orbits, model stacks and foliation leaves")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// scenario JSON file, or one of the built-in names R, R-appendix, U
    #[arg(long, global = true)]
    scenario: Option<String>,
    /// energy level c (overrides the scenario)
    #[arg(long, global = true, allow_hyphen_values = true)]
    c: Option<f64>,
    /// Kepler energy E0 of the disc window (overrides the scenario)
    #[arg(long, global = true, allow_hyphen_values = true)]
    e0: Option<f64>,
    /// output directory; without it results go to stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON instead of CSV or text
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// circular orbits on the level c
    Circular,
    /// radii of the Hill region boundary on the level c
    Hill,
    /// T_{k,l} tori on the level c
    Torus {
        #[arg(long, requires = "l")]
        k: Option<u64>,
        #[arg(long, requires = "k")]
        l: Option<u64>,
        #[arg(long, default_value_t = 12)]
        max_l: u64,
    },
    /// Poincare coordinates and round-trip defect for states in a CSV
    Transform {
        #[arg(long)]
        input: PathBuf,
    },
    /// build the model stack, locate critical points, check sign certificates
    Stack {
        #[arg(long, default_value_t = 512)]
        grid: usize,
    },
    /// one holomorphic leaf as CSV
    Leaf {
        #[arg(long)]
        case: String,
        /// y2 value on the x2-line (planes), x2 value (cylinders)
        #[arg(long, allow_hyphen_values = true)]
        init: Option<f64>,
        /// angle of the annulus
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<f64>,
        #[arg(long, default_value_t = LEAF_NODES)]
        nodes: usize,
    },
    /// assemble the foliation report
    Foliation {
        #[arg(long, default_value_t = 8)]
        n_theta: usize,
        #[arg(long, default_value_t = 12)]
        max_l: u64,
    },
    /// fixed points and crossing table of the disc return map
    ReturnMap {
        #[arg(long, default_value_t = 12)]
        max_l: u64,
        /// also scan the return time for fixed heights on this many cells
        #[arg(long)]
        scan: Option<usize>,
        /// evaluate the map at one point (x1, y1, y2)
        #[arg(long, num_args = 3, allow_hyphen_values = true, value_names = ["X1", "Y1", "Y2"])]
        at: Option<Vec<f64>>,
    },
    /// Conley-Zehnder indices of the binding orbits
    Cz {
        /// labels to report; all binding orbits when empty
        #[arg(long, value_delimiter = ',')]
        orbit: Vec<String>,
    },
    /// run the acceptance checks
    Verify {
        /// smaller sample sizes
        #[arg(long)]
        quick: bool,
    },
}

/// Errors from bad configuration exit with this status.
const EXIT_CONFIG: u8 = 2;

struct Sink {
    dir: Option<PathBuf>,
    written: Vec<PathBuf>,
}

impl Sink {
    fn emit(&mut self, file: &str, body: &str) -> Result<()> {
        match &self.dir {
            Some(d) => {
                let p = d.join(file);
                write_atomic(&p, body.as_bytes()).with_context(|| format!("writing {}", p.display()))?;
                self.written.push(p);
            }
            None => print!("{body}"),
        }
        Ok(())
    }

    fn rollback(&self) {
        for p in &self.written {
            let _ = std::fs::remove_file(p);
        }
    }
}

fn scenario(g: &Global) -> Result<ScenarioConfig> {
    let name = g.scenario.as_deref().unwrap_or("R");
    let base = if Path::new(name).is_file() {
        load_scenario_file(Path::new(name))?
    } else if let Some((_, text)) = BUILTIN.iter().find(|(n, _)| *n == name) {
        parse_scenario_file(text)?
    } else {
        let detail = format!("`{name}` is neither a file nor a built-in name (R, R-appendix, U)");
        return Err(rotkep::Error::Parameter { name: "scenario", detail }.into());
    };
    let top = ScenarioFile { c: g.c, e0: g.e0, seed: g.seed, out: g.out.clone(), ..Default::default() };
    Ok(base.overlay(&top).resolve()?)
}

fn level(g: &Global) -> Result<f64> {
    match g.c {
        Some(c) => Ok(c),
        None => Ok(scenario(g)?.params.c),
    }
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn csv_line(fields: &[String]) -> String {
    fields.join(",") + "\n"
}

fn circular_csv(roots: &[CircularOrbit]) -> String {
    let mut s = csv_line(&["label", "E", "L", "q1", "q2", "p1", "p2"].map(String::from));
    for o in roots {
        let st = o.state.to_array();
        let mut f = vec![o.label.as_str().to_string(), fmt_f64(o.energy), fmt_f64(o.l)];
        f.extend(st.iter().map(|v| fmt_f64(*v)));
        s += &csv_line(&f);
    }
    s
}

/// Regime-appropriate model for a leaf case: annuli live on the appendix
/// stack, the others on the stack of the scenario (lower for appendix).
fn leaf_model(cfg: &ScenarioConfig, case: LeafCase) -> Result<ModelHamiltonian> {
    let kind = match (case, cfg.params.regime) {
        (LeafCase::Annulus, _) => StackKind::Appendix,
        (_, StackKind::Appendix | StackKind::Plain) => StackKind::Lower,
        (_, k) => k,
    };
    Ok(cfg.with_regime(kind)?)
}

fn default_init(model: &ModelHamiltonian, case: LeafCase) -> Result<f64> {
    let c0 = model.center();
    Ok(match case {
        LeafCase::PlaneX2_0 | LeafCase::PlaneX2_4pi => 0.5 * (model.derived.lambda1 + c0),
        LeafCase::PlaneX2_2pi => 0.5 * (c0 + model.lambda_max(std::f64::consts::TAU)?),
        LeafCase::CylY2L3 => std::f64::consts::PI,
        LeafCase::CylY2L3Mirror => 3.0 * std::f64::consts::PI,
        LeafCase::Annulus => 0.0,
    })
}

#[derive(Serialize)]
struct ReturnMapReport {
    regime: Regime,
    c: f64,
    y_range: (f64, f64),
    fixed_points: Vec<FixedPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scan: Option<Vec<f64>>,
    crossings: Vec<CrossingCount>,
    #[serde(skip_serializing_if = "Option::is_none")]
    at: Option<rotkep::foliation::ReturnMapResult>,
}

#[derive(Serialize)]
struct CzRow {
    label: String,
    cz: Option<i64>,
    degenerate: Option<bool>,
    period: f64,
    rotation: (f64, f64),
}

fn run(cli: &Cli, sink: &mut Sink) -> Result<bool> {
    let g = &cli.global;
    match &cli.cmd {
        Cmd::Circular => {
            let set = circular_orbits(level(g)?)?;
            let body = if g.json { json(&set)? } else { circular_csv(&set.roots) };
            sink.emit(if g.json { "circular.json" } else { "circular.csv" }, &body)?;
        }
        Cmd::Hill => {
            let c = level(g)?;
            #[derive(Serialize)]
            struct Out {
                c: f64,
                radii: rotkep::catalog::HillRadii,
            }
            sink.emit("hill.json", &json(&Out { c, radii: hill_radii(c)? })?)?;
        }
        Cmd::Torus { k, l, max_l } => {
            let c = level(g)?;
            let tori = match (k, l) {
                (Some(k), Some(l)) => torus_on_level(c, *k, *l)?.into_iter().collect(),
                _ => tori_on_level(c, f64::NEG_INFINITY, 0.0, *max_l)?,
            };
            let body = if g.json {
                json(&tori)?
            } else {
                let mut s = csv_line(&["k", "l", "E", "L", "e", "collision"].map(String::from));
                for t in &tori {
                    s += &csv_line(&[
                        t.k.to_string(),
                        t.l.to_string(),
                        fmt_f64(t.energy),
                        fmt_f64(t.ang),
                        fmt_f64(t.e),
                        t.collision.to_string(),
                    ]);
                }
                s
            };
            sink.emit(if g.json { "torus.json" } else { "torus.csv" }, &body)?;
        }
        Cmd::Transform { input } => {
            let file = std::fs::File::open(input).with_context(|| format!("opening {}", input.display()))?;
            let states = read_state_csv(file)?;
            let mut s = csv_line(
                &["q1", "q2", "p1", "p2", "x1", "x2", "y1", "y2", "regime", "roundtrip"].map(String::from),
            );
            for (i, st) in states.iter().enumerate() {
                let retro = st.angular_momentum() < 0.0;
                let ps = if retro { retrograde_poincare(st) } else { poincare_map(st) }
                    .with_context(|| format!("row {}", i + 1))?;
                let back = if retro { retrograde_inverse(&ps) } else { poincare_inverse(&ps) }?;
                let err = st.to_array().iter().zip(back.to_array()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                let mut f: Vec<String> = st.to_array().iter().chain(ps.to_array().iter()).map(|v| fmt_f64(*v)).collect();
                f.push(ps.regime.as_str().to_string());
                f.push(fmt_f64(err));
                s += &csv_line(&f);
            }
            sink.emit("transform.csv", &s)?;
        }
        Cmd::Stack { grid } => {
            let cfg = scenario(g)?;
            let model = cfg.model()?;
            let crit = model.critical_points()?;
            let signs = model.sign_certificates(*grid, *grid, 0.1)?;
            #[derive(Serialize)]
            struct Out<'a> {
                model: &'a ModelHamiltonian,
                critical_points: &'a rotkep::stack::CriticalPointReport,
                sign_certificates_ok: bool,
                sign_certificates: &'a rotkep::stack::SignReport,
            }
            let out = Out { model: &model, critical_points: &crit, sign_certificates_ok: signs.ok(), sign_certificates: &signs };
            let body = if g.json {
                json(&out)?
            } else {
                let mut s = String::new();
                writeln!(s, "regime {} level {}", model.kind().as_str(), fmt_f64(model.level()))?;
                for p in &crit.points {
                    writeln!(
                        s,
                        "critical ({}, {}) value {} index {}",
                        fmt_f64(p.x2),
                        fmt_f64(p.y2),
                        fmt_f64(p.value),
                        p.morse_index
                    )?;
                }
                writeln!(s, "sign certificates {} ({} violations)", if signs.ok() { "ok" } else { "FAILED" }, signs.violations.len())?;
                s
            };
            sink.emit(if g.json { "stack.json" } else { "stack.txt" }, &body)?;
            return Ok(signs.ok());
        }
        Cmd::Leaf { case, init, theta, nodes } => {
            let cfg = scenario(g)?;
            let case = LeafCase::parse(case)?;
            let model = leaf_model(&cfg, case)?;
            let leaf = if case == LeafCase::Annulus {
                let th = theta.or(*init).unwrap_or(0.0);
                annulus_leaf_with(&model, th, model.center(), *nodes)?
            } else {
                let v = match init {
                    Some(v) => *v,
                    None => default_init(&model, case)?,
                };
                solve_leaf_with(&model, case, v, *nodes)?
            };
            let body = if g.json {
                json(&leaf)?
            } else {
                let mut buf = Vec::new();
                write_leaf_csv(&mut buf, &leaf)?;
                String::from_utf8(buf)?
            };
            let name = format!("leaf_{}.{}", case.as_str(), if g.json { "json" } else { "csv" });
            sink.emit(&name, &body)?;
        }
        Cmd::Foliation { n_theta, max_l } => {
            let cfg = scenario(g)?;
            let report = foliation_report(&cfg.model()?, *n_theta, *max_l)?;
            sink.emit("foliation.json", &json(&report)?)?;
        }
        Cmd::ReturnMap { max_l, scan, at } => {
            let cfg = scenario(g)?;
            let model = leaf_model(&cfg, LeafCase::PlaneX2_0)?;
            let w = stack_window(&model)?;
            let (lo, hi) = w.y_range();
            let (e_a, e_b) = (-0.5 / (lo * lo), -0.5 / (hi * hi));
            let tori = tori_on_level(w.c, e_a.min(e_b), e_a.max(e_b), *max_l)?;
            let crossings = tori.iter().map(|t| crossing_count(w.c, t.k, t.l, 0.0)).collect::<rotkep::Result<_>>()?;
            let report = ReturnMapReport {
                regime: w.regime,
                c: w.c,
                y_range: w.y_range(),
                fixed_points: fixed_points(&w, RESONANCE_M_MAX),
                scan: scan.map(|n| fixed_point_scan(&w, n, 1e-12)).transpose()?,
                crossings,
                at: at.as_ref().map(|p| return_map(&w, p[0], p[1], p[2])).transpose()?,
            };
            let body = if g.json {
                json(&report)?
            } else {
                let mut s = csv_line(&["k", "l", "exact", "integrated", "period"].map(String::from));
                for c in &report.crossings {
                    s += &csv_line(&[
                        c.k.to_string(),
                        c.l.to_string(),
                        c.exact.to_string(),
                        c.integrated.map(|v| v.to_string()).unwrap_or_default(),
                        fmt_f64(c.period),
                    ]);
                }
                s
            };
            sink.emit(if g.json { "return_map.json" } else { "crossings.csv" }, &body)?;
        }
        Cmd::Cz { orbit } => {
            let cfg = scenario(g)?;
            let model = cfg.model()?;
            let mut rows = Vec::new();
            for mut o in binding_orbits(&model)? {
                if !orbit.is_empty() && !orbit.contains(&o.label) {
                    continue;
                }
                let iv = annotate(&model, &mut o, 16)?;
                rows.push(CzRow { label: o.label, cz: o.cz, degenerate: o.degenerate, period: o.period_h, rotation: (iv.lo, iv.hi) });
            }
            if let Some(missing) = orbit.iter().find(|n| !rows.iter().any(|r| &r.label == *n)) {
                let detail = format!("no binding orbit labelled `{missing}` on the {} stack", model.kind().as_str());
                return Err(rotkep::Error::Parameter { name: "orbit", detail }.into());
            }
            let body = if g.json {
                json(&rows)?
            } else {
                let mut s = csv_line(&["label", "cz", "degenerate", "period", "rot_lo", "rot_hi"].map(String::from));
                for r in &rows {
                    s += &csv_line(&[
                        r.label.clone(),
                        r.cz.map(|v| v.to_string()).unwrap_or_default(),
                        r.degenerate.map(|v| v.to_string()).unwrap_or_default(),
                        fmt_f64(r.period),
                        fmt_f64(r.rotation.0),
                        fmt_f64(r.rotation.1),
                    ]);
                }
                s
            };
            sink.emit(if g.json { "cz.json" } else { "cz.csv" }, &body)?;
        }
        Cmd::Verify { quick } => {
            let cfg = scenario(g)?;
            let sizes = if *quick {
                Sizes { flow_states: 50, symplectic_points: 100, return_samples: 100 }
            } else {
                Sizes::default()
            };
            let report = verify::run(&cfg, sizes)?;
            let body = if g.json {
                json(&report)?
            } else {
                let mut s = String::new();
                for c in &report.criteria {
                    writeln!(s, "{}", c.line())?;
                    for n in &c.notes {
                        writeln!(s, "    {n}")?;
                    }
                }
                writeln!(s, "{}", if report.all_pass { "all criteria pass" } else { "some criteria FAILED" })?;
                s
            };
            sink.emit(if g.json { "verify.json" } else { "verify.txt" }, &body)?;
            return Ok(report.all_pass);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut sink = Sink { dir: cli.global.out.clone(), written: Vec::new() };
    match run(&cli, &mut sink) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            sink.rollback();
            eprintln!("error: {e:#}");
            let config = e.chain().any(|c| {
                matches!(
                    c.downcast_ref::<rotkep::Error>(),
                    Some(rotkep::Error::Parameter { .. } | rotkep::Error::Parse(_))
                )
            });
            if config {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
