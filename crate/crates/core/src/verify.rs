//! The acceptance checks, one function per criterion. Each returns the
//! measured quantities next to its verdict so callers can print or assert
//! on them. Nothing time-dependent goes into a report.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::catalog::{circular_orbits, tori_on_level, CircularLabel};
use crate::contact::Contact;
use crate::coords::{poincare_inverse, symplecticity_defect, PoincareState, Regime, SymplecticMap};
use crate::cz::annotate;
use crate::error::{Error, Result};
use crate::foliation::{crossing_count, disc_leaf, fixed_points, return_map_defect, stack_window, FixedPoint, RESONANCE_M_MAX};
use crate::leaf::{annulus_assign, annulus_leaf, annulus_point, leaf_audit, mirror_leaf, r_peak, solve_leaf, LeafCase};
use crate::orbits::{binding_orbits, torus_orbits, LoopFamily};
use crate::phase::{eval_hamiltonian, flow, inertial_factorization_defect, maximize_effective_potential, PhaseState};
use crate::sampler::SigmaSampler;
use crate::scenario::ScenarioConfig;
use crate::stack::{ModelHamiltonian, StackKind};

#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    /// false when the scenario has nothing to check for this criterion
    pub applicable: bool,
    /// measured quantities, in a fixed order
    pub metrics: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

impl Criterion {
    fn new(id: u8, name: &'static str) -> Self {
        Self { id, name, pass: true, applicable: true, metrics: Vec::new(), notes: Vec::new() }
    }

    fn metric(&mut self, key: impl Into<String>, v: f64) {
        self.metrics.push((key.into(), v));
    }

    /// Records `ok` into the verdict, with a note when it fails.
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.pass = false;
            self.notes.push(format!("failed: {}", what.into()));
        }
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    /// One-line summary.
    pub fn line(&self) -> String {
        let verdict = match (self.applicable, self.pass) {
            (false, _) => "SKIP",
            (true, true) => "PASS",
            (true, false) => "FAIL",
        };
        let m: Vec<String> = self.metrics.iter().map(|(k, v)| format!("{k}={v:.6e}")).collect();
        format!("criterion {:>2} {verdict} {}: {}", self.id, self.name, m.join(" "))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub scenario: String,
    pub seed: u64,
    pub params: crate::stack::StackParams,
    pub criteria: Vec<Criterion>,
    pub all_pass: bool,
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// The mirrored stack of the scenario (appendix scenarios are checked on
/// the lower stack with the same constants) and its appendix companion.
pub fn scenario_models(cfg: &ScenarioConfig) -> Result<(ModelHamiltonian, Option<ModelHamiltonian>)> {
    match cfg.params.regime {
        StackKind::Upper => Ok((cfg.model()?, None)),
        StackKind::Plain => Err(Error::param("regime", "verify needs a stack regime")),
        _ => Ok((cfg.with_regime(StackKind::Lower)?, Some(cfg.with_regime(StackKind::Appendix)?))),
    }
}

/// Random elliptic state with semi-major axis Λ² and eccentricity in
/// `e_range`, built through the inverse Poincaré chart.
pub fn random_bound_state(rng: &mut ChaCha8Rng, e_range: (f64, f64)) -> Result<PhaseState> {
    let lam: f64 = rng.random_range(0.7..1.7);
    let e: f64 = rng.random_range(e_range.0..e_range.1);
    let x2: f64 = rng.random_range(0.0..TAU);
    let phi: f64 = rng.random_range(0.0..TAU);
    let rho = (2.0 * lam * (1.0 - (1.0 - e * e).sqrt())).sqrt();
    poincare_inverse(&PoincareState::new(rho * phi.cos(), x2, rho * phi.sin(), lam, Regime::Direct))
}

pub fn criterion_1() -> Result<Criterion> {
    let mut c = Criterion::new(1, "critical value");
    let (r, f) = maximize_effective_potential(0.5, 2.0)?;
    let h = eval_hamiltonian(&PhaseState::new(1.0, 0.0, 0.0, 1.0))?;
    c.metric("r_err", (r - 1.0).abs());
    c.metric("f_err", (f + 1.5).abs());
    c.metric("H_err", (h + 1.5).abs());
    c.check((r - 1.0).abs() < 1e-10 && (f + 1.5).abs() < 1e-10, "argmax (1, -1.5)");
    c.check((h + 1.5).abs() <= 4.0 * f64::EPSILON, "H(1,0,0,1) = -1.5");
    Ok(c)
}

pub fn criterion_2(seed: u64, n: usize) -> Result<Criterion> {
    let mut c = Criterion::new(2, "conservation and commutation");
    let mut r = rng(seed, 2);
    let mut drift: f64 = 0.0;
    let mut fact: f64 = 0.0;
    for _ in 0..n {
        let s = random_bound_state(&mut r, (0.0, 0.7))?;
        drift = drift.max(flow(&s, 50.0, 1e-10)?.report.max_defect);
        fact = fact.max(inertial_factorization_defect(&s, 50.0)?);
    }
    c.metric("states", n as f64);
    c.metric("max_drift", drift);
    c.metric("max_factorization_defect", fact);
    c.check(drift < 1e-7, "drift < 1e-7");
    c.check(fact < 1e-6, "factorization defect < 1e-6");
    Ok(c)
}

pub fn criterion_3(seed: u64, n: usize) -> Result<Criterion> {
    let mut c = Criterion::new(3, "symplecticity of the Poincare map");
    let mut r = rng(seed, 3);
    let mut worst: f64 = 0.0;
    let mut control_hits = 0usize;
    let mut done = 0usize;
    while done < n {
        let s = random_bound_state(&mut r, (0.1, 0.8))?;
        let d = match symplecticity_defect(SymplecticMap::Poincare, &s, 1e-6, 0.05) {
            Ok(d) => d,
            Err(Error::Domain(_)) => continue,
            Err(e) => return Err(e),
        };
        let ctrl = symplecticity_defect(SymplecticMap::DelaunayTrueAnomaly, &s, 1e-6, 0.05)?;
        worst = worst.max(d);
        control_hits += usize::from(ctrl > 1e-2);
        done += 1;
    }
    let frac = control_hits as f64 / n as f64;
    c.metric("points", n as f64);
    c.metric("max_defect", worst);
    c.metric("control_fraction", frac);
    c.check(worst < 1e-6, "defect < 1e-6");
    c.check(frac >= 0.9, "negative control above 1e-2 on at least 90%");
    Ok(c)
}

/// Plain bisection on p(E) = 2E(c − E)² + 1 over a sign-changing bracket.
fn bisect_oracle(c: f64, mut a: f64, mut b: f64) -> f64 {
    let p = |e: f64| 2.0 * e * (c - e) * (c - e) + 1.0;
    let fa = p(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (p(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

pub fn criterion_4() -> Result<Criterion> {
    let mut c = Criterion::new(4, "circular-orbit taxonomy at c = -2");
    let lvl = -2.0;
    let set = circular_orbits(lvl)?;
    let get = |l| set.get(l).map(|o| o.energy).ok_or_else(|| Error::Consistency("missing root".into()));
    let (rb, db, du) = (get(CircularLabel::RetroB)?, get(CircularLabel::DirectB)?, get(CircularLabel::DirectU)?);
    let oracle = [
        bisect_oracle(lvl, lvl - 1.0, lvl),
        bisect_oracle(lvl, lvl, lvl / 3.0),
        bisect_oracle(lvl, lvl / 3.0, 0.0),
    ];
    let err = [(rb - oracle[0]).abs(), (db - oracle[1]).abs(), (du - oracle[2]).abs()];
    let dual = ((du - lvl) - (-2.0 * du).powf(-0.5)).abs();
    c.metric("E_retro_b", rb);
    c.metric("E_direct_b", db);
    c.metric("E_direct_u", du);
    c.metric("max_oracle_err", err.iter().fold(0.0, |m, v| m.max(*v)));
    c.metric("dual_L_err", dual);
    c.check(set.roots.len() == 3, "three roots");
    c.check(err.iter().all(|e| *e < 1e-10), "oracle agreement 1e-10");
    c.check(rb < db && db < -0.5 && -0.5 < du, "ordering");
    c.check(dual < 1e-8, "dual L formula");
    Ok(c)
}

pub fn criterion_5(model: &ModelHamiltonian, seed: u64) -> Result<Criterion> {
    let mut c = Criterion::new(5, "model-stack lemmas");
    let rep = model.critical_points()?;
    let c0 = model.center();
    let b = model.params.b;
    let expect = [(0.0, b - 1.0, 0u8), (TAU, b + 1.0, 1), (2.0 * TAU, b - 1.0, 0)];
    c.metric("critical_points", rep.points.len() as f64);
    c.check(rep.points.len() == 3, "exactly three critical points");
    let mut worst: f64 = 0.0;
    for (p, &(x, v, idx)) in rep.points.iter().zip(&expect) {
        worst = worst.max((p.x2 - x).abs()).max((p.y2 - c0).abs()).max((p.value - v).abs());
        c.check(p.morse_index == idx, format!("Morse index {idx} at x2 = {x}"));
    }
    c.metric("location_value_err", worst);
    c.check(worst < 1e-9, "locations and values");
    let signs = model.sign_certificates(512, 512, 0.1)?;
    c.metric("sign_violations", signs.violations.len() as f64);
    c.check(signs.ok(), "sign certificates on 512x512");
    let sampler = SigmaSampler::new(model)?;
    let pts = sampler.samples(10_000, seed ^ 5);
    let (bad, extreme) = match model.kind() {
        StackKind::Upper => (
            pts.iter().filter(|p| !(p[3] < 0.0)).count(),
            pts.iter().map(|p| p[3]).fold(f64::NEG_INFINITY, f64::max),
        ),
        _ => (
            pts.iter().filter(|p| !(p[3] > 1.0)).count(),
            pts.iter().map(|p| p[3]).fold(f64::INFINITY, f64::min),
        ),
    };
    c.metric("sigma_y2_extreme", extreme);
    c.check(bad == 0, "every sample on the Kepler side of y2 = 1 (or y2 < 0)");
    Ok(c)
}

pub fn criterion_6(model: &ModelHamiltonian, appendix: Option<&ModelHamiltonian>, seed: u64) -> Result<Criterion> {
    let mut c = Criterion::new(6, "transversality of the Liouville field");
    let scan = Contact::new(model)?.transversality_scan(&SigmaSampler::new(model)?, 10_000, seed ^ 6)?;
    c.metric("min_dH_Y", scan.min);
    c.check(scan.min > 0.0, "stack scan positive");
    if let Some(a) = appendix {
        let s = Contact::new(a)?.transversality_scan(&SigmaSampler::new(a)?, 10_000, seed ^ 6)?;
        c.metric("min_dH_Y_appendix", s.min);
        c.check(s.min > 0.0, "appendix scan positive");
    }
    Ok(c)
}

pub fn criterion_7(model: &ModelHamiltonian) -> Result<Criterion> {
    let mut c = Criterion::new(7, "Conley-Zehnder indices");
    let mut binding = binding_orbits(model)?;
    for o in &mut binding {
        annotate(model, o, 16)?;
        c.metric(format!("mu_{}", o.label), o.cz.unwrap_or(-1) as f64);
        c.check(o.degenerate == Some(false), format!("{} non-degenerate", o.label));
    }
    let mu: Vec<i64> = binding.iter().map(|o| o.cz.unwrap_or(-1)).collect();
    c.check(mu == [3, 2, 3], "indices (P3, P2, P3') = (3, 2, 3)");
    let mut tori = torus_orbits(model, LoopFamily::Inner, 25, 40)?;
    tori.extend(torus_orbits(model, LoopFamily::Outer, 25, 40)?);
    let mut min_mu = i64::MAX;
    for o in &mut tori {
        annotate(model, o, 16)?;
        min_mu = min_mu.min(o.cz.unwrap_or(i64::MIN));
    }
    c.metric("torus_orbits", tori.len() as f64);
    c.metric("torus_min_mu", min_mu as f64);
    c.check(tori.len() == 50, "50 torus orbits");
    c.check(min_mu >= 3, "torus indices at least 3");
    let mut mismatches = 0;
    for o in tori.iter().take(20) {
        let mut img = o.rho_image();
        annotate(model, &mut img, 16)?;
        mismatches += usize::from(img.cz != o.cz);
    }
    c.metric("rho_pair_mismatches", mismatches as f64);
    c.check(mismatches == 0 && tori.len() >= 20, "equal indices on 20 rho pairs");
    Ok(c)
}

pub fn criterion_8(model: &ModelHamiltonian) -> Result<Criterion> {
    let mut c = Criterion::new(8, "plane and cylinder leaves");
    let contact = Contact::new(model)?;
    let level = model.level();
    let c0 = model.center();
    let l1 = model.derived.lambda1;
    let tau = |x: f64| -> Result<f64> { Ok(PI * 2.0 * (level - model.h2_value(x, c0)?)) };
    let (tau3, tau2) = (tau(0.0)?, tau(TAU)?);

    let plane0 = solve_leaf(model, LeafCase::PlaneX2_0, 0.5 * (l1 + c0))?;
    let n = plane0.len();
    let dir = (c0 - l1).signum();
    let rising = plane0.y2.windows(2).all(|w| (w[1] - w[0]) * dir > 0.0);
    let end_err = (plane0.y2[0] - l1).abs().max((plane0.y2[n - 1] - c0).abs());
    c.metric("plane0_end_err", end_err);
    c.metric("plane0_energy_err", (plane0.energy - tau3).abs());
    c.check(rising && end_err < 1e-6, "plane x2=0 monotone between its limits");
    c.check((plane0.energy - tau3).abs() < 1e-5, "plane x2=0 energy");

    let plane2 = solve_leaf(model, LeafCase::PlaneX2_2pi, 0.5 * (c0 + model.lambda_max(TAU)?))?;
    c.metric("plane2pi_energy_err", (plane2.energy - tau2).abs());
    c.metric("plane2pi_mass_minus", plane2.masses.0.abs());
    c.check((plane2.energy - tau2).abs() < 1e-5, "plane x2=2pi energy");
    c.check(plane2.masses.0.abs() < 1e-6, "removable end");

    let cyl = solve_leaf(model, LeafCase::CylY2L3, PI)?;
    let mass_err = (cyl.masses.0 - tau2).abs().max((cyl.masses.1 - tau3).abs());
    c.metric("cyl_mass_err", mass_err);
    c.check(mass_err < 1e-5, "cylinder masses");

    let mut audit: f64 = 0.0;
    let mut involution: f64 = 0.0;
    for leaf in [&plane0, &plane2, &cyl] {
        let a = leaf_audit(&contact, leaf)?;
        audit = audit.max(a.max_residual());
        c.check(a.monotone && a.transverse_min > 0.0, format!("{} audit shape", leaf.case.as_str()));
        let back = mirror_leaf(&mirror_leaf(leaf));
        for k in 0..leaf.len() {
            involution = involution.max((back.x2[k] - leaf.x2[k]).abs()).max((back.y2[k] - leaf.y2[k]).abs());
        }
        c.check(back.case == leaf.case && back.asymptotes == leaf.asymptotes, "mirror labels");
        let m = leaf_audit(&contact, &mirror_leaf(leaf))?;
        audit = audit.max(m.max_residual());
    }
    c.metric("max_audit_residual", audit);
    c.metric("mirror_involution_err", involution);
    c.check(audit < 1e-7, "audit residuals < 1e-7");
    c.check(involution < 1e-12, "mirror is an involution");
    Ok(c)
}

pub fn criterion_9(appendix: &ModelHamiltonian, seed: u64) -> Result<Criterion> {
    let mut c = Criterion::new(9, "appendix annulus");
    let leaf = annulus_leaf(appendix, 0.0)?;
    let c0 = appendix.center();
    let l1 = appendix.derived.lambda1;
    let r_top = (2.0 * (appendix.level() - appendix.params.b)).sqrt();
    let peak = r_peak(&leaf);
    c.check(peak.is_some(), "r unimodal");
    let k = peak.unwrap_or(0);
    c.metric("r_max_err", (leaf.r[k] - r_top).abs());
    c.metric("peak_y2_err", (leaf.y2[k] - c0).abs());
    c.check((leaf.r[k] - r_top).abs() < 1e-6, "r_max");
    // y₂(s₀) = Λ₃ within the cell either side of the peak node
    let lo = leaf.y2[k.saturating_sub(1)];
    let hi = leaf.y2[(k + 1).min(leaf.len() - 1)];
    c.check(lo <= c0 && c0 <= hi, "peak at y2 = Lambda3");
    let expect = TAU * (c0 - l1) + TAU * r_top;
    c.metric("energy_err", (leaf.energy - expect).abs());
    c.check((leaf.energy - expect).abs() < 1e-5, "energy = sum of binding Reeb periods");

    let l2 = appendix.derived.lambda2;
    let sampler = SigmaSampler::new(appendix)?;
    let mut worst: f64 = 0.0;
    let mut used = 0usize;
    let mut failed = 0usize;
    for p in sampler.samples(4000, seed ^ 9) {
        if !(p[3] > l1 && p[3] <= l2) || p[0].hypot(p[2]) == 0.0 {
            continue;
        }
        used += 1;
        match annulus_assign(appendix, &leaf, &p).and_then(|a| annulus_point(appendix, &leaf, &a)) {
            Ok(q) => {
                let d = crate::coords::wrap_pi(q[1] - p[1]).abs().max(
                    (q[0] - p[0]).abs().max((q[2] - p[2]).abs()).max((q[3] - p[3]).abs()),
                );
                worst = worst.max(d);
            }
            Err(_) => failed += 1,
        }
    }
    c.metric("kepler_samples", used as f64);
    c.metric("assignment_err", worst);
    c.check(used > 100, "enough Kepler-region samples");
    c.check(failed == 0 && worst < 1e-8, "each sample on one annulus");
    Ok(c)
}

pub fn criterion_10(model: &ModelHamiltonian, seed: u64, n_return: usize) -> Result<Criterion> {
    let mut c = Criterion::new(10, "disc foliation and return map");
    let window = stack_window(model)?;
    let disc = disc_leaf(&window, 0.0)?;
    c.metric("disc_margin", disc.margin);
    c.check(disc.margin > 0.1, "disc transverse with margin 0.1");
    let fp = fixed_points(&window, RESONANCE_M_MAX);
    c.metric("fixed_points", fp.len() as f64);
    c.check(
        fp.len() == 1 && matches!(fp[0], FixedPoint::Origin { y2 } if y2 == window.center),
        "single fixed point at the circular orbit",
    );
    let mut r = rng(seed, 10);
    let mut worst: f64 = 0.0;
    for _ in 0..n_return {
        let rho = window.edge_radius() * r.random::<f64>().sqrt();
        let th: f64 = r.random_range(0.0..TAU);
        let y = window.height(rho)?;
        worst = worst.max(return_map_defect(&window, 0.0, [rho * th.cos(), rho * th.sin(), y], 1e-12)?);
    }
    c.metric("return_samples", n_return as f64);
    c.metric("return_map_err", worst);
    c.check(worst < 1e-8, "closed form vs integration");
    let (ylo, yhi) = window.y_range();
    let (e_lo, e_hi) = (-0.5 / (ylo * ylo), -0.5 / (yhi * yhi));
    let (e_lo, e_hi) = (e_lo.min(e_hi), e_lo.max(e_hi));
    let tori = tori_on_level(window.c, e_lo, e_hi, 12)?;
    let mut min_count = u64::MAX;
    for t in &tori {
        let cc = crossing_count(window.c, t.k, t.l, 0.0)?;
        min_count = min_count.min(cc.exact);
        let expect = if window.regime == Regime::Retrograde { t.k + t.l } else { t.l.abs_diff(t.k) };
        c.check(cc.exact == expect, format!("T({},{}) count", t.k, t.l));
        c.check(cc.integrated.is_none_or(|v| v == cc.exact), format!("T({},{}) integration", t.k, t.l));
    }
    c.metric("tori", tori.len() as f64);
    if !tori.is_empty() {
        c.metric("min_crossings", min_count as f64);
        c.check(min_count >= 2, "at least two crossings");
    }
    Ok(c)
}

/// Sample sizes; the defaults are the acceptance sizes.
#[derive(Debug, Clone, Copy)]
pub struct Sizes {
    pub flow_states: usize,
    pub symplectic_points: usize,
    pub return_samples: usize,
}

impl Default for Sizes {
    fn default() -> Self {
        Self { flow_states: 1000, symplectic_points: 1000, return_samples: 1000 }
    }
}

pub fn run(cfg: &ScenarioConfig, sizes: Sizes) -> Result<VerifyReport> {
    let (model, appendix) = scenario_models(cfg)?;
    let seed = cfg.seed;
    let mut criteria = vec![
        criterion_1()?,
        criterion_2(seed, sizes.flow_states)?,
        criterion_3(seed, sizes.symplectic_points)?,
        criterion_4()?,
        criterion_5(&model, seed)?,
        criterion_6(&model, appendix.as_ref(), seed)?,
        criterion_7(&model)?,
        criterion_8(&model)?,
    ];
    let c9 = match &appendix {
        Some(a) => criterion_9(a, seed)?,
        None => {
            let mut c = Criterion::new(9, "appendix annulus");
            c.applicable = false;
            c.notes.push("no appendix stack for this regime".into());
            c
        }
    };
    criteria.push(c9);
    criteria.push(criterion_10(&model, seed, sizes.return_samples)?);
    let all_pass = criteria.iter().all(|c| c.pass);
    Ok(VerifyReport { scenario: cfg.name.clone(), seed, params: cfg.params, criteria, all_pass })
}
