//! Periodic orbits of the model Hamiltonians: the binding orbits on the
//! critical line, the boundary loop P₀, and orbits on the invariant tori
//! H̃₂ = v where the (x₂, y₂) loop period is a rational multiple of 2π.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::contact::{rho, Contact};
use crate::error::{Error, Result};
use crate::ode::{locate_in_step, Control, Dopri5};
use crate::roots::bracketed_secant;
use crate::stack::{ModelHamiltonian, StackKind};

pub const ORBIT_RTOL: f64 = 1e-12;
pub const ORBIT_ATOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrbitKind {
    /// r = |(x₁, y₁)| > 0 over a critical point of H̃₂
    Binding,
    /// (x₁, y₁) = 0, (x₂, y₂) on the level loop H̃₂ = level
    Boundary,
    /// both factors moving, on an invariant torus
    Torus,
    /// appendix orbits at the bottom and top of Σ
    Appendix,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitRecord {
    pub label: String,
    pub kind: OrbitKind,
    pub start: [f64; 4],
    #[serde(rename = "period_H")]
    pub period_h: f64,
    #[serde(rename = "period_Reeb")]
    pub period_reeb: Option<f64>,
    pub cz: Option<i64>,
    pub degenerate: Option<bool>,
    pub symmetric: bool,
    /// loop level v of H̃₂ for torus orbits
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h2_level: Option<f64>,
    /// T₂/2π = p/q for torus orbits
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<(u64, u64)>,
}

impl OrbitRecord {
    fn new(label: impl Into<String>, kind: OrbitKind, start: [f64; 4], period: f64) -> Self {
        Self {
            label: label.into(),
            kind,
            start,
            period_h: period,
            period_reeb: None,
            cz: None,
            degenerate: None,
            symmetric: false,
            h2_level: None,
            ratio: None,
        }
    }

    /// The orbit through ρ(start), i.e. t ↦ ρ(w(−t)).
    pub fn rho_image(&self) -> Self {
        let mut o = self.clone();
        o.start = rho(&self.start);
        o.label = format!("rho({})", self.label);
        o.cz = None;
        o.degenerate = None;
        o
    }
}

fn integrator() -> Dopri5 {
    Dopri5::new(ORBIT_RTOL, ORBIT_ATOL)
}

/// Uniform samples t = kT/n, k = 0..=n, of the orbit through `start`.
pub fn sample_orbit(model: &ModelHamiltonian, start: &[f64; 4], period: f64, n: usize) -> Result<Vec<[f64; 4]>> {
    let times: Vec<f64> = (0..=n).map(|k| period * k as f64 / n as f64).collect();
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let f = model.hamiltonian_field(&[y[0], y[1], y[2], y[3]])?;
        dy.copy_from_slice(&f);
        Ok(())
    };
    let out = integrator().solve_at(rhs, 0.0, start, &times)?;
    Ok(out.into_iter().map(|v| [v[0], v[1], v[2], v[3]]).collect())
}

/// Time for the planar (x₂, y₂) flow of H̃₂ to come back to `start`,
/// detected as the first crossing of x₂ = start.x₂ in the direction of
/// departure.
pub fn loop_period(model: &ModelHamiltonian, start: (f64, f64), t_max: f64) -> Result<f64> {
    let (xs, ys) = start;
    let j = model.h2_jet(xs, ys)?;
    let sigma = j.y.signum();
    if j.y.abs() < 1e-12 {
        return Err(Error::Degenerate("loop start has ẋ₂ = 0".into()));
    }
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let j = model.h2_jet(y[0], y[1])?;
        dy[0] = j.y;
        dy[1] = -j.x;
        Ok(())
    };
    let mut found = None;
    let g = |_t: f64, y: &[f64]| sigma * (y[0] - xs);
    integrator().solve(rhs, 0.0, &[xs, ys], t_max, |st| {
        let (a, b) = (g(st.t0, st.y0), g(st.t1, st.y1));
        if st.t0 > 0.0 && a < 0.0 && b >= 0.0 {
            let (t, _) = locate_in_step(st, g, 1e-14);
            found = Some(t);
            return Control::Stop;
        }
        Control::Continue
    })?;
    found.ok_or_else(|| Error::Integrator(format!("loop did not close before t = {t_max}")))
}

/// Radius of the (x₁, y₁) circle over the critical point (x₂, center).
pub fn binding_radius(model: &ModelHamiltonian, x2: f64) -> Result<f64> {
    let v = model.h2_value(x2, model.center())?;
    let r2 = 2.0 * (model.level() - v);
    if !(r2 > 0.0) {
        return Err(Error::Degenerate(format!("no binding orbit over x₂ = {x2}")));
    }
    Ok(r2.sqrt())
}

/// P₃, P₂, P₃′ for the stacks with the 4π mirror, Q₁, Q₂ for the appendix.
/// Reeb periods are filled in with the closed forms.
pub fn binding_orbits(model: &ModelHamiltonian) -> Result<Vec<OrbitRecord>> {
    let c0 = model.center();
    match model.kind() {
        StackKind::Lower | StackKind::Upper => {
            let mut out = Vec::new();
            for (label, x2) in [("P3", 0.0), ("P2", TAU), ("P3'", 2.0 * TAU)] {
                let r = binding_radius(model, x2)?;
                let mut o = OrbitRecord::new(label, OrbitKind::Binding, [0.0, x2, r, c0], TAU);
                o.period_reeb = Some(PI * r * r);
                o.symmetric = x2 == TAU;
                out.push(o);
            }
            Ok(out)
        }
        StackKind::Appendix => {
            let l1 = model.derived.lambda1;
            let top = model.lambda_max(0.0)?;
            let mut out = Vec::new();
            for (label, y) in [("Q1", l1), ("Q2", top)] {
                let slope = model.h2_jet(0.0, y)?.y;
                let mut o = OrbitRecord::new(label, OrbitKind::Appendix, [0.0, 0.0, 0.0, y], TAU / slope.abs());
                o.period_reeb = Some(TAU * (y - c0).abs());
                out.push(o);
            }
            Ok(out)
        }
        StackKind::Plain => Err(Error::param("regime", "no binding orbits for the plain Hamiltonian")),
    }
}

/// P₀: (x₁, y₁) = 0 and (x₂, y₂) running once around the boundary of the
/// shadow of Σ.
pub fn boundary_orbit(model: &ModelHamiltonian) -> Result<OrbitRecord> {
    if model.is_periodic() {
        return Err(Error::param("regime", "the boundary loop exists only for the mirrored stacks"));
    }
    let y = model.lambda_max(TAU)?;
    let period = loop_period(model, (TAU, y), 1e4)?;
    let mut o = OrbitRecord::new("P0", OrbitKind::Boundary, [0.0, TAU, 0.0, y], period);
    o.symmetric = true;
    Ok(o)
}

/// Which loops of H̃₂ a torus family lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopFamily {
    /// around the minimum at x₂ = 0
    Inner,
    /// around all three critical points
    Outer,
}

/// Loop levels v available to a family, with a relative margin away from
/// the critical values.
pub fn family_range(model: &ModelHamiltonian, fam: LoopFamily, margin: f64) -> Result<(f64, f64)> {
    let c0 = model.center();
    let vmin = model.h2_value(0.0, c0)?;
    let vsad = model.h2_value(TAU, c0)?;
    let top = model.level();
    let (a, b) = match fam {
        LoopFamily::Inner => (vmin, vsad.min(top)),
        LoopFamily::Outer => (vsad, top),
    };
    if !(b > a) {
        return Err(Error::Degenerate("empty loop family".into()));
    }
    let w = b - a;
    Ok((a + margin * w, b - margin * w))
}

/// Start of the loop at level v: on x₂ = 0 (inner) or x₂ = 2π (outer), on
/// the side of the critical line away from the Kepler region.
pub fn loop_start(model: &ModelHamiltonian, fam: LoopFamily, v: f64) -> Result<(f64, f64)> {
    let c0 = model.center();
    let x = match fam {
        LoopFamily::Inner => 0.0,
        LoopFamily::Outer => TAU,
    };
    let d2 = 2.0 * (v - model.h2_value(x, c0)?);
    if !(d2 > 0.0) {
        return Err(Error::Degenerate(format!("level {v} below the critical value")));
    }
    let dir = if model.kind() == StackKind::Upper { -1.0 } else { 1.0 };
    Ok((x, c0 + dir * d2.sqrt()))
}

/// T₂(v) for one family.
pub fn family_period(model: &ModelHamiltonian, fam: LoopFamily, v: f64) -> Result<f64> {
    let s = loop_start(model, fam, v)?;
    loop_period(model, s, 1e4)
}

/// The torus orbit with T₂(v) = 2πp/q, period 2πp.
pub fn torus_orbit(model: &ModelHamiltonian, fam: LoopFamily, v: f64, p: u64, q: u64) -> Result<OrbitRecord> {
    let (x, y) = loop_start(model, fam, v)?;
    let r = (2.0 * (model.level() - v)).max(0.0).sqrt();
    let tag = match fam {
        LoopFamily::Inner => "inner",
        LoopFamily::Outer => "outer",
    };
    let mut o = OrbitRecord::new(
        format!("T_{tag}_{p}/{q}"),
        OrbitKind::Torus,
        [0.0, x, r, y],
        TAU * p as f64,
    );
    o.h2_level = Some(v);
    o.ratio = Some((p, q));
    Ok(o)
}

/// Reduced fractions p/q in (lo, hi) with q ≤ q_max and p ≤ p_max, ordered by
/// q then p.
fn rationals_in(lo: f64, hi: f64, q_max: u64, p_max: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    for q in 1..=q_max {
        for p in 1..=p_max {
            let r = p as f64 / q as f64;
            if r > lo && r < hi && crate::catalog::gcd(p, q) == 1 {
                out.push((p, q));
            }
        }
    }
    out
}

/// Up to `n` torus orbits of one family, solving T₂(v) = 2πp/q by
/// bracketed secant on a tabulated grid of T₂.
pub fn torus_orbits(model: &ModelHamiltonian, fam: LoopFamily, n: usize, p_max: u64) -> Result<Vec<OrbitRecord>> {
    let (a, b) = family_range(model, fam, 1e-3)?;
    let m = 24;
    let mut grid = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let v = a + (b - a) * i as f64 / m as f64;
        grid.push((v, family_period(model, fam, v)? / TAU));
    }
    let lo = grid.iter().map(|g| g.1).fold(f64::INFINITY, f64::min);
    let hi = grid.iter().map(|g| g.1).fold(f64::NEG_INFINITY, f64::max);
    let mut out = Vec::new();
    for (p, q) in rationals_in(lo, hi, 8, p_max) {
        if out.len() >= n {
            break;
        }
        let target = p as f64 / q as f64;
        let Some(w) = grid.windows(2).find(|w| (w[0].1 - target) * (w[1].1 - target) <= 0.0) else {
            continue;
        };
        let v = bracketed_secant(
            |v| Ok(family_period(model, fam, v)? / TAU - target),
            w[0].0,
            w[1].0,
            1e-14,
            1e-13,
        )?;
        out.push(torus_orbit(model, fam, v, p, q)?);
    }
    Ok(out)
}

/// Closest approach of the orbit to ρ(start), measured at the crossings of
/// x₂ = 4π − start.x₂, plus the number of points of the orbit on
/// Fix(ρ) = {x₁ = 0, x₂ = 2π} over one period (|x₁| < `tol` at the crossing).
pub fn involution_check(model: &ModelHamiltonian, orbit: &OrbitRecord, tol: f64) -> Result<(f64, usize)> {
    let target = rho(&orbit.start);
    let s = orbit.start;
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let f = model.hamiltonian_field(&[y[0], y[1], y[2], y[3]])?;
        dy.copy_from_slice(&f);
        Ok(())
    };
    let dist = |y: &[f64]| {
        (0..4).map(|i| (y[i] - target[i]).powi(2)).sum::<f64>().sqrt()
    };
    let mut best = dist(&s);
    let mut fixed = usize::from(s[0].abs() < tol && (s[1] - TAU).abs() < tol);
    let g = |_t: f64, y: &[f64]| y[1] - target[1];
    let gf = |_t: f64, y: &[f64]| y[1] - TAU;
    let mut err = None;
    integrator().solve(rhs, 0.0, &s, orbit.period_h, |st| {
        let (a, b) = (g(st.t0, st.y0), g(st.t1, st.y1));
        if a * b < 0.0 || (b == 0.0 && a != 0.0) {
            let (_, y) = locate_in_step(st, g, 1e-14);
            best = best.min(dist(&y));
        }
        let (a, b) = (gf(st.t0, st.y0), gf(st.t1, st.y1));
        if (a * b < 0.0 || (b == 0.0 && a != 0.0)) && st.t1 < orbit.period_h * (1.0 - 1e-12) {
            let (_, y) = locate_in_step(st, gf, 1e-14);
            if y[0].abs() < tol {
                fixed += 1;
            }
        }
        if !best.is_finite() {
            err = Some(Error::Integrator("non-finite orbit state".into()));
            return Control::Stop;
        }
        Control::Continue
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok((best, fixed))
}

/// Reeb period ∮λ along the orbit, by the periodic trapezoid rule.
pub fn reeb_period(contact: &Contact, orbit: &OrbitRecord, n: usize) -> Result<f64> {
    let pts = sample_orbit(&contact.model, &orbit.start, orbit.period_h, n)?;
    contact.reeb_period(&pts, orbit.period_h)
}

/// Maximum of |w(T) − w(0)| over the orbit, a closing check.
pub fn closing_defect(model: &ModelHamiltonian, orbit: &OrbitRecord) -> Result<f64> {
    let pts = sample_orbit(model, &orbit.start, orbit.period_h, 1)?;
    let (a, b) = (pts[0], pts[1]);
    let mut d = [0.0; 4];
    for i in 0..4 {
        d[i] = b[i] - a[i];
    }
    if model.is_periodic() {
        d[1] = crate::coords::wrap_pi(d[1]);
    }
    Ok(d.iter().map(|v| v.abs()).fold(0.0, f64::max))
}
