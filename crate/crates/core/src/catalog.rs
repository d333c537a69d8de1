//! Circular orbits, Hill radii and T_{k,l}-tori on an energy level H = c.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coords::{poincare_map, retrograde_poincare, PoincareState};
use crate::error::{Error, Result};
use crate::phase::{eccentricity, PhaseState};
use crate::roots::bracketed_newton;

pub const CRITICAL_VALUE: f64 = -1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HillRadii {
    /// c < −3/2: the bounded and unbounded components are separated by the
    /// annulus r_b < |q| < r_u.
    Split { inner: f64, outer: f64 },
    /// c = −3/2
    Double { r: f64 },
    /// −3/2 < c < 0
    Connected,
}

/// Roots of −1/r − r²/2 = c, i.e. of r³ + 2cr + 2 = 0.
pub fn hill_radii(c: f64) -> Result<HillRadii> {
    if !(c < 0.0) {
        return Err(Error::param("c", format!("must be negative (got {c})")));
    }
    if (c - CRITICAL_VALUE).abs() < 1e-14 {
        return Ok(HillRadii::Double { r: 1.0 });
    }
    if c > CRITICAL_VALUE {
        return Ok(HillRadii::Connected);
    }
    let g = |r: f64| r * r * r + 2.0 * c * r + 2.0;
    let dg = |r: f64| 3.0 * r * r + 2.0 * c;
    let inner = bracketed_newton(g, dg, 0.0, 1.0, 1e-15)?;
    let outer = bracketed_newton(g, dg, 1.0, 1.0 + (-2.0 * c).sqrt(), 1e-15)?;
    Ok(HillRadii::Split { inner, outer })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CircularLabel {
    RetroB,
    DirectB,
    DirectU,
    RetroU,
}

impl CircularLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            CircularLabel::RetroB => "retro_b",
            CircularLabel::DirectB => "direct_b",
            CircularLabel::DirectU => "direct_u",
            CircularLabel::RetroU => "retro_u",
        }
    }

    pub fn is_direct(self) -> bool {
        matches!(self, CircularLabel::DirectB | CircularLabel::DirectU)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CircularOrbit {
    pub label: CircularLabel,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(skip)]
    pub state: PhaseState,
    #[serde(skip)]
    pub poincare: PoincareState,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircularOrbitSet {
    pub c: f64,
    pub roots: Vec<CircularOrbit>,
}

impl CircularOrbitSet {
    pub fn get(&self, label: CircularLabel) -> Option<&CircularOrbit> {
        self.roots.iter().find(|o| o.label == label)
    }
}

fn circular_cubic(c: f64) -> (impl Fn(f64) -> f64, impl Fn(f64) -> f64) {
    (
        move |e: f64| 2.0 * e * (c - e) * (c - e) + 1.0,
        move |e: f64| 2.0 * (c - e) * (c - e) - 4.0 * e * (c - e),
    )
}

/// Circular orbit on a given Kepler energy and sign: radius L², speed 1/|L|.
pub fn circular_state(l: f64) -> PhaseState {
    let r = l * l;
    PhaseState::new(r, 0.0, 0.0, l / r)
}

/// All circular orbits on the level H = c.
pub fn circular_orbits(c: f64) -> Result<CircularOrbitSet> {
    if !(c < 0.0) {
        return Err(Error::param("c", format!("must be negative (got {c})")));
    }
    if (c - CRITICAL_VALUE).abs() < 1e-14 {
        return Err(Error::param("c", "the critical value −3/2 is excluded"));
    }
    let (p, dp) = circular_cubic(c);
    // p(c − 1) = 2c − 1 < 0 < 1 = p(c)
    let mut found = vec![(bracketed_newton(&p, &dp, c - 1.0, c, 1e-15)?, false)];
    if c < CRITICAL_VALUE {
        // p has its local minimum 8c³/27 + 1 < 0 at c/3
        found.push((bracketed_newton(&p, &dp, c, c / 3.0, 1e-15)?, true));
        found.push((bracketed_newton(&p, &dp, c / 3.0, 0.0, 1e-15)?, true));
    }
    let split = c < CRITICAL_VALUE;
    let mut roots = Vec::new();
    for (i, &(energy, _)) in found.iter().enumerate() {
        let label = match (split, i) {
            (true, 0) => CircularLabel::RetroB,
            (true, 1) => CircularLabel::DirectB,
            (true, _) => CircularLabel::DirectU,
            (false, _) => CircularLabel::RetroU,
        };
        let l = energy - c;
        let state = circular_state(l);
        let poincare = if label.is_direct() {
            poincare_map(&state)?
        } else {
            retrograde_poincare(&state)?
        };
        roots.push(CircularOrbit { label, energy, l, state, poincare });
    }
    Ok(CircularOrbitSet { c, roots })
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Kepler energy of a T_{k,l}-torus, −½(k/l)^{2/3}.
pub fn torus_energy(k: u64, l: u64) -> Result<f64> {
    if k == 0 || l == 0 {
        return Err(Error::param("k,l", "must be positive"));
    }
    if gcd(k, l) != 1 {
        return Err(Error::param("k,l", format!("({k},{l}) are not coprime")));
    }
    Ok(-0.5 * (k as f64 / l as f64).powf(2.0 / 3.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TorusRecord {
    pub k: u64,
    pub l: u64,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "L")]
    pub ang: f64,
    pub e: f64,
    pub collision: bool,
}

/// The T_{k,l}-torus on the level c, if e² = 2EL² + 1 lies in [0, 1].
/// The collision torus e = 1 (L = 0) is reported as present.
pub fn torus_on_level(c: f64, k: u64, l: u64) -> Result<Option<TorusRecord>> {
    let energy = torus_energy(k, l)?;
    let ang = energy - c;
    let e2 = 2.0 * energy * ang * ang + 1.0;
    if !(e2 > -1e-13 && e2 <= 1.0 + 1e-13) {
        return Ok(None);
    }
    let e = eccentricity(energy, ang).unwrap_or(0.0).min(1.0);
    Ok(Some(TorusRecord {
        k,
        l,
        energy,
        ang,
        e,
        collision: ang.abs() < 1e-10,
    }))
}

/// Every coprime (k, l) with l ≤ `max_l` whose torus lies on the level c and
/// whose Kepler energy falls in `[e_lo, e_hi]`.
pub fn tori_on_level(c: f64, e_lo: f64, e_hi: f64, max_l: u64) -> Result<Vec<TorusRecord>> {
    let mut out = Vec::new();
    for l in 1..=max_l {
        for k in 1..=(4 * max_l) {
            if gcd(k, l) != 1 {
                continue;
            }
            let en = torus_energy(k, l)?;
            if en < e_lo {
                break;
            }
            if en > e_hi {
                continue;
            }
            if let Some(t) = torus_on_level(c, k, l)? {
                out.push(t);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogReport {
    pub c: f64,
    pub roots: Vec<CircularOrbit>,
    pub tori: Vec<TorusRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Bounded,
    Unbounded,
    Connected,
}

#[derive(Debug, Clone, Serialize)]
pub struct RangeWindow {
    pub component: Component,
    pub samples: usize,
    /// sampled states with E ≥ 0, outside the window's scope
    pub unbound: usize,
    pub e_min: f64,
    pub e_max: f64,
    pub l_min: f64,
    pub l_max: f64,
    /// [lo, hi] for E; `hi_open` marks a strict upper bound
    pub e_bounds: (f64, f64),
    pub l_bounds: (f64, f64),
    pub hi_open: bool,
    pub ok: bool,
    /// the circular witnesses attain the closed endpoints
    pub witnesses_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ElRangeReport {
    pub c: f64,
    pub windows: Vec<RangeWindow>,
}

impl ElRangeReport {
    pub fn ok(&self) -> bool {
        self.windows.iter().all(|w| w.ok && w.witnesses_ok)
    }
}

/// Random states on H = c with |q| in `[r_lo, r_hi]`.
fn sample_level(c: f64, r_lo: f64, r_hi: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<PhaseState> {
    let mut out = Vec::with_capacity(n);
    let mut guard = 0usize;
    while out.len() < n && guard < 200 * n {
        guard += 1;
        let r = rng.random_range(r_lo..r_hi);
        let th = rng.random_range(0.0..std::f64::consts::TAU);
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        // H = ½s² − s·r·sin(φ − θ) − 1/r along p = s(cos φ, sin φ)
        let m = r * (phi - th).sin();
        let disc = m * m + 2.0 * (c + 1.0 / r);
        if disc < 0.0 {
            continue;
        }
        let root = if rng.random_bool(0.5) { m + disc.sqrt() } else { m - disc.sqrt() };
        if root <= 0.0 {
            continue;
        }
        let (ts, tc) = th.sin_cos();
        let (ps, pc) = phi.sin_cos();
        out.push(PhaseState::new(r * tc, r * ts, root * pc, root * ps));
    }
    out
}

fn window(
    component: Component,
    states: &[PhaseState],
    e_bounds: (f64, f64),
    l_bounds: (f64, f64),
    hi_open: bool,
    witnesses: &[(f64, f64)],
) -> RangeWindow {
    let tol = 1e-9;
    let (mut e_min, mut e_max, mut l_min, mut l_max) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    let mut unbound = 0;
    let mut ok = true;
    for s in states {
        let e = s.kepler_energy_unchecked();
        let l = s.angular_momentum();
        if e >= 0.0 {
            unbound += 1;
            continue;
        }
        e_min = e_min.min(e);
        e_max = e_max.max(e);
        l_min = l_min.min(l);
        l_max = l_max.max(l);
        let inside = |v: f64, (lo, hi): (f64, f64)| {
            v >= lo - tol && if hi_open { v < hi + tol } else { v <= hi + tol }
        };
        ok &= inside(e, e_bounds) && inside(l, l_bounds);
    }
    let witnesses_ok = witnesses.iter().all(|&(e, l)| {
        (e - e_bounds.0).abs() < 1e-12 && (l - l_bounds.0).abs() < 1e-12
            || (!hi_open && (e - e_bounds.1).abs() < 1e-12 && (l - l_bounds.1).abs() < 1e-12)
    });
    RangeWindow {
        component,
        samples: states.len(),
        unbound,
        e_min,
        e_max,
        l_min,
        l_max,
        e_bounds,
        l_bounds,
        hi_open,
        ok,
        witnesses_ok,
    }
}

/// Samples `samples` states on each component of H = c and checks the
/// Kepler energy and angular momentum against the windows cut out by the
/// circular orbits.
pub fn el_range_report(c: f64, samples: usize, seed: u64) -> Result<ElRangeReport> {
    let set = circular_orbits(c)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut windows = Vec::new();
    let get = |lab| set.get(lab).copied().ok_or_else(|| Error::Consistency("missing root".into()));
    match hill_radii(c)? {
        HillRadii::Split { inner, outer } => {
            let rb = get(CircularLabel::RetroB)?;
            let db = get(CircularLabel::DirectB)?;
            let du = get(CircularLabel::DirectU)?;
            let st = sample_level(c, 1e-3, inner, samples, &mut rng);
            windows.push(window(
                Component::Bounded,
                &st,
                (rb.energy, db.energy),
                (rb.l, db.l),
                false,
                &[(rb.energy, rb.l), (db.energy, db.l)],
            ));
            let st = sample_level(c, outer, outer + 20.0, samples, &mut rng);
            windows.push(window(
                Component::Unbounded,
                &st,
                (du.energy, 0.0),
                (du.l, -c),
                true,
                &[(du.energy, du.l)],
            ));
        }
        HillRadii::Connected => {
            let ru = get(CircularLabel::RetroU)?;
            let st = sample_level(c, 1e-3, 20.0, samples, &mut rng);
            windows.push(window(
                Component::Connected,
                &st,
                (ru.energy, 0.0),
                (ru.l, -c),
                true,
                &[(ru.energy, ru.l)],
            ));
        }
        HillRadii::Double { .. } => unreachable!("rejected by circular_orbits"),
    }
    Ok(ElRangeReport { c, windows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gcd_basics() {
        assert_eq!(gcd(12, 18), 6);
        assert_eq!(gcd(7, 9), 1);
        assert!(torus_energy(2, 4).is_err());
    }
}
