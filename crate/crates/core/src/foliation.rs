//! Gradient-line discs in Poincaré variables, the closed-form first return
//! map to such a disc, its fixed points, torus crossing counts, and the
//! assembled foliation report.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::catalog::{circular_orbits, torus_on_level, CircularLabel, CRITICAL_VALUE};
use crate::contact::Contact;
use crate::coords::{poincare_inverse, poincare_map, retrograde_inverse, retrograde_poincare, wrap_pi, PoincareState, Regime};
use crate::cz::annotate;
use crate::error::{Error, Result};
use crate::leaf::{annulus_leaf, leaf_audit, mirror_leaf, solve_leaf, Leaf, LeafAudit, LeafCase, Puncture};
use crate::orbits::{binding_orbits, OrbitRecord};
use crate::phase::{propagate, PhaseState};
use crate::roots::bisect;
use crate::stack::{ModelHamiltonian, StackKind};

/// |y³/(y³ − 1) − m| below this counts as resonant.
pub const RESONANCE_TOL: f64 = 1e-9;
/// Largest resonance order m searched for.
pub const RESONANCE_M_MAX: u64 = 1_000_000;

/// A window [lo, hi] of y₂ on which the disc {x₂ = base} is a section of
/// the flow of H = ½(x₁² + y₁²) − 1/(2y₂²) − y₂ (direct chart) or of
/// H = −(½(x₁² + y₁²) + 1/(2y₂²) + y₂) (retrograde chart, y₂ < 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscWindow {
    pub regime: Regime,
    pub c: f64,
    /// y₂ at the centre of the disc (the circular orbit)
    pub center: f64,
    /// y₂ on the boundary circle
    pub edge: f64,
    pub synthetic: bool,
}

fn kepler_y(energy: f64) -> f64 {
    1.0 / (-2.0 * energy).sqrt()
}

impl DiscWindow {
    /// Σ_direct^u cut at Kepler energy E0: y₂ ∈ [Λ₁, Λ₂].
    pub fn direct(c: f64, e0: f64) -> Result<Self> {
        if !(c < CRITICAL_VALUE) {
            return Err(Error::param("c", format!("direct window needs c < −3/2 (got {c})")));
        }
        let circ = circular_orbits(c)?;
        let eu = circ
            .get(CircularLabel::DirectU)
            .ok_or_else(|| Error::Consistency("no direct_u circular orbit".into()))?
            .energy;
        if !(e0 > eu && e0 < 0.0) {
            return Err(Error::param("E0", format!("must lie in ({eu}, 0) (got {e0})")));
        }
        Ok(Self { regime: Regime::Direct, c, center: kepler_y(eu), edge: kepler_y(e0), synthetic: false })
    }

    /// Σ_retro^u cut at Kepler energy E0: y₂ ∈ [ν₂, ν₁] with y₂ < 0.
    pub fn retrograde(c: f64, e0: f64) -> Result<Self> {
        if !(c > CRITICAL_VALUE && c < 0.0) {
            return Err(Error::param("c", format!("retrograde window needs −3/2 < c < 0 (got {c})")));
        }
        let circ = circular_orbits(c)?;
        let eu = circ
            .get(CircularLabel::RetroU)
            .ok_or_else(|| Error::Consistency("no retro_u circular orbit".into()))?
            .energy;
        if !(e0 > eu && e0 < c) {
            return Err(Error::param("E0", format!("must lie in ({eu}, {c}) (got {e0})")));
        }
        Ok(Self { regime: Regime::Retrograde, c, center: -kepler_y(eu), edge: -kepler_y(e0), synthetic: false })
    }

    /// A direct window [lo, hi] ⊂ (1, ∞) on the level that puts the
    /// circular orbit at y₂ = lo. Used to exercise resonant circles.
    pub fn synthetic(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 1.0 && hi > lo && hi.is_finite()) {
            return Err(Error::param("window", format!("need 1 < lo < hi (got [{lo}, {hi}])")));
        }
        let c = -1.0 / (2.0 * lo * lo) - lo;
        Ok(Self { regime: Regime::Direct, c, center: lo, edge: hi, synthetic: true })
    }

    pub fn y_range(&self) -> (f64, f64) {
        (self.center.min(self.edge), self.center.max(self.edge))
    }

    pub fn contains_y(&self, y: f64) -> bool {
        let (lo, hi) = self.y_range();
        y >= lo - 1e-12 && y <= hi + 1e-12
    }

    /// Radius of the disc slice at height y₂.
    pub fn radius(&self, y: f64) -> f64 {
        let k = 1.0 / (2.0 * y * y) + y;
        let r2 = match self.regime {
            Regime::Retrograde => 2.0 * (-self.c - k),
            _ => 2.0 * (self.c + k),
        };
        r2.max(0.0).sqrt()
    }

    pub fn edge_radius(&self) -> f64 {
        self.radius(self.edge)
    }

    /// ẋ₂ = 1/y₂³ − 1.
    pub fn x2_rate(y: f64) -> f64 {
        1.0 / (y * y * y) - 1.0
    }

    /// Sense of rotation of (x₁, y₁): −1 direct, +1 retrograde.
    pub fn rotation_sign(&self) -> f64 {
        match self.regime {
            Regime::Retrograde => 1.0,
            _ => -1.0,
        }
    }

    /// min |ẋ₂| over the window; attained at the end closest to y₂ = 1.
    pub fn transversality_margin(&self) -> f64 {
        Self::x2_rate(self.center).abs().min(Self::x2_rate(self.edge).abs())
    }

    /// y₂ on the disc over a point at distance ρ from the centre.
    pub fn height(&self, rho: f64) -> Result<f64> {
        let r_edge = self.edge_radius();
        if !(rho >= 0.0 && rho <= r_edge * (1.0 + 1e-12)) {
            return Err(Error::Domain(format!("radius {rho} outside the disc of radius {r_edge}")));
        }
        if rho == 0.0 {
            return Ok(self.center);
        }
        if rho >= r_edge {
            return Ok(self.edge);
        }
        bisect(|y| self.radius(y) - rho, self.center, self.edge, 1e-15)
    }
}

/// The disc {x₂ = base} ∩ Σ over the window.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiscLeaf {
    pub window: DiscWindow,
    pub x2_base: f64,
    pub y_range: (f64, f64),
    pub center_radius: f64,
    pub edge_radius: f64,
    /// min |ẋ₂| over the disc
    pub margin: f64,
}

impl DiscLeaf {
    /// Point of the disc at polar coordinates (ρ, θ) in the (x₁, y₁)-plane.
    pub fn point(&self, rho: f64, theta: f64) -> Result<[f64; 4]> {
        let y = self.window.height(rho)?;
        Ok([rho * theta.cos(), self.x2_base, rho * theta.sin(), y])
    }

    /// Rows (x₂, ρ/ρ_edge, x₁, y₁, y₂) on an n_r × n_θ polar grid.
    pub fn samples(&self, n_r: usize, n_theta: usize) -> Result<Vec<[f64; 5]>> {
        let mut out = Vec::with_capacity(n_r * n_theta);
        for i in 0..n_r {
            let s = if n_r > 1 { i as f64 / (n_r - 1) as f64 } else { 0.0 };
            for j in 0..n_theta {
                let th = TAU * j as f64 / n_theta as f64;
                let p = self.point(s * self.edge_radius, th)?;
                out.push([self.x2_base, s, p[0], p[2], p[3]]);
            }
        }
        Ok(out)
    }
}

pub fn disc_leaf(window: &DiscWindow, x2_base: f64) -> Result<DiscLeaf> {
    if !x2_base.is_finite() {
        return Err(Error::param("x2_base", "must be finite"));
    }
    let margin = window.transversality_margin();
    if !(margin > 0.0) {
        return Err(Error::Transversality {
            point: [0.0, x2_base, 0.0, window.center],
            value: margin,
        });
    }
    Ok(DiscLeaf {
        window: *window,
        x2_base,
        y_range: window.y_range(),
        center_radius: window.radius(window.center),
        edge_radius: window.edge_radius(),
        margin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReturnMapResult {
    pub input: [f64; 3],
    pub t_ret: f64,
    pub output: [f64; 3],
    /// signed rotation of (x₁, y₁), reduced to (−π, π]
    pub angle: f64,
}

/// T_ret = 2π y³/(y³ − 1), the time for x₂ to come back to its start.
pub fn return_time(y: f64) -> f64 {
    let y3 = y * y * y;
    TAU * y3 / (y3 - 1.0)
}

/// Closed-form first return of (x₁, y₁, y₂) to the disc.
pub fn return_map(window: &DiscWindow, x1: f64, y1: f64, y2: f64) -> Result<ReturnMapResult> {
    if ![x1, y1, y2].iter().all(|v| v.is_finite()) {
        return Err(Error::param("point", "non-finite coordinate"));
    }
    if !window.contains_y(y2) {
        let (lo, hi) = window.y_range();
        return Err(Error::Domain(format!("y₂ = {y2} outside the window [{lo}, {hi}]")));
    }
    let r = x1.hypot(y1);
    let rmax = window.radius(y2);
    if r * r > rmax * rmax + 1e-12 {
        return Err(Error::Domain(format!("(x₁, y₁) at radius {r} outside the disc of radius {rmax}")));
    }
    let t = return_time(y2);
    let angle = window.rotation_sign() * t;
    let (s, c) = angle.sin_cos();
    Ok(ReturnMapResult {
        input: [x1, y1, y2],
        t_ret: t,
        output: [c * x1 - s * y1, s * x1 + c * y1, y2],
        angle: wrap_pi(angle),
    })
}

/// Integrates the rotating Kepler flow for T_ret from the Cartesian
/// preimage of the disc point and maps the end point back; returns the max
/// coordinate difference to the closed form (x₂ compared mod 2π).
pub fn return_map_defect(window: &DiscWindow, x2_base: f64, point: [f64; 3], rtol: f64) -> Result<f64> {
    let rm = return_map(window, point[0], point[1], point[2])?;
    let ps = PoincareState::new(point[0], x2_base, point[1], point[2], window.regime);
    let (state, back): (PhaseState, fn(&PhaseState) -> Result<PoincareState>) = match window.regime {
        Regime::Retrograde => (retrograde_inverse(&ps)?, retrograde_poincare),
        _ => (poincare_inverse(&ps)?, poincare_map),
    };
    let end = back(&propagate(&state, rm.t_ret, rtol, rtol * 1e-2)?)?;
    let d = [
        end.x1 - rm.output[0],
        wrap_pi(end.x2 - x2_base),
        end.y1 - rm.output[1],
        end.y2 - rm.output[2],
    ];
    Ok(d.iter().fold(0.0, |m, v| m.max(v.abs())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FixedPoint {
    /// the centre of the disc, on the circular orbit
    Origin { y2: f64 },
    /// a whole circle of fixed points where T_ret = 2πm
    ResonantCircle { y2: f64, m: u64, k: u64, l: u64, radius: f64 },
}

impl FixedPoint {
    pub fn y2(&self) -> f64 {
        match *self {
            FixedPoint::Origin { y2 } | FixedPoint::ResonantCircle { y2, .. } => y2,
        }
    }
}

/// Fixed points of the return map: the origin always, plus every resonant
/// circle y₂³/(y₂³ − 1) = m with m ≤ `m_max` inside the window.
pub fn fixed_points(window: &DiscWindow, m_max: u64) -> Vec<FixedPoint> {
    let mut out = vec![FixedPoint::Origin { y2: window.center }];
    if window.regime == Regime::Retrograde {
        // y₂ < 0 gives 0 < y³/(y³ − 1) < 1, never an integer
        return out;
    }
    let (lo, hi) = window.y_range();
    let ratio = |y: f64| {
        let y3 = y * y * y;
        y3 / (y3 - 1.0)
    };
    // the ratio decreases in y on (1, ∞)
    let m_lo = (ratio(hi) - RESONANCE_TOL).ceil().max(2.0) as u64;
    let m_hi = (ratio(lo) + RESONANCE_TOL).floor().min(m_max as f64) as u64;
    for m in m_lo..=m_hi {
        let mf = m as f64;
        let y = (mf / (mf - 1.0)).cbrt();
        if (ratio(y) - mf).abs() < RESONANCE_TOL && window.contains_y(y) {
            out.push(FixedPoint::ResonantCircle {
                y2: y,
                m,
                k: m - 1,
                l: m,
                radius: window.radius(y),
            });
        }
    }
    out
}

/// Fixed points found empirically: the return map is evaluated on an
/// n × n Cartesian grid over the disc and points moving less than `tol`
/// are grouped by y₂ (one entry per cluster of width ~4 grid cells).
pub fn fixed_point_scan(window: &DiscWindow, n: usize, tol: f64) -> Result<Vec<f64>> {
    let r = window.edge_radius();
    let mut ys: Vec<f64> = Vec::new();
    let n = n.max(2);
    let (lo, hi) = window.y_range();
    let cluster = 4.0 * (hi - lo) / n as f64;
    for i in 0..n {
        for j in 0..n {
            let x1 = -r + 2.0 * r * i as f64 / (n - 1) as f64;
            let y1 = -r + 2.0 * r * j as f64 / (n - 1) as f64;
            let rho = x1.hypot(y1);
            if rho > r {
                continue;
            }
            let y2 = window.height(rho)?;
            let m = return_map(window, x1, y1, y2)?;
            let d = (m.output[0] - x1).hypot(m.output[1] - y1);
            if d < tol && !ys.iter().any(|&v| (v - y2).abs() < cluster) {
                ys.push(y2);
            }
        }
    }
    ys.sort_by(f64::total_cmp);
    Ok(ys)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossingCount {
    pub k: u64,
    pub l: u64,
    /// |Δx₂|/2π per orbit period from the closed form
    pub exact: u64,
    /// crossings counted along the integrated Cartesian orbit, if run
    pub integrated: Option<u64>,
    pub period: f64,
}

/// Crossings of one closed T_{k,l} orbit with the disc {x₂ = base}.
pub fn crossing_count(c: f64, k: u64, l: u64, x2_base: f64) -> Result<CrossingCount> {
    let rec = torus_on_level(c, k, l)?
        .ok_or_else(|| Error::param("k,l", format!("no T_({k},{l}) torus on the level c = {c}")))?;
    let period = TAU * l as f64;
    let direct = rec.ang > 0.0;
    let y = if direct { kepler_y(rec.energy) } else { -kepler_y(rec.energy) };
    let dx = period * DiscWindow::x2_rate(y);
    let exact = (dx.abs() / TAU).round() as u64;
    if rec.collision {
        return Ok(CrossingCount { k, l, exact, integrated: None, period });
    }
    Ok(CrossingCount { k, l, exact, integrated: Some(integrated_crossings(c, y, x2_base, period)?), period })
}

fn integrated_crossings(c: f64, y: f64, x2_base: f64, period: f64) -> Result<u64> {
    let (regime, r2) = if y > 0.0 {
        (Regime::Direct, 2.0 * (c + 1.0 / (2.0 * y * y) + y))
    } else {
        (Regime::Retrograde, 2.0 * (-c - 1.0 / (2.0 * y * y) - y))
    };
    let r = r2.max(0.0).sqrt();
    // start half a step off the disc so no crossing sits on a sample
    let x0 = x2_base + 0.25;
    let ps = PoincareState::new(r, x0, 0.0, y, regime);
    let (mut state, back): (PhaseState, fn(&PhaseState) -> Result<PoincareState>) = match regime {
        Regime::Retrograde => (retrograde_inverse(&ps)?, retrograde_poincare),
        _ => (poincare_inverse(&ps)?, poincare_map),
    };
    let steps = ((period / 0.1).ceil() as usize).max(16);
    let dt = period / steps as f64;
    let mut unwrapped = x0 - x2_base;
    let mut prev = back(&state)?.x2;
    let mut count = 0_u64;
    for _ in 0..steps {
        state = propagate(&state, dt, 1e-12, 1e-14)?;
        let x = back(&state)?.x2;
        let next = unwrapped + wrap_pi(x - prev);
        count += ((unwrapped / TAU).floor() - (next / TAU).floor()).abs() as u64;
        unwrapped = next;
        prev = x;
    }
    Ok(count)
}

#[derive(Debug, Clone, Serialize)]
pub struct BindingEntry {
    pub label: String,
    pub cz: i64,
    pub degenerate: bool,
    pub period_h: f64,
    pub period_reeb: Option<f64>,
    pub symmetric: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LeafEntry {
    pub case: LeafCase,
    pub init: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub energy: f64,
    pub masses: (f64, f64),
    pub asymptotes: Vec<Puncture>,
    pub audit: LeafAudit,
    /// min distance of the leaf's (x₂, y₂) shadow to a binding orbit's
    pub binding_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossingRow {
    pub k: u64,
    pub l: u64,
    pub count: u64,
    pub integrated: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FoliationReport {
    pub regime: StackKind,
    pub binding: Vec<BindingEntry>,
    pub leaves: Vec<LeafEntry>,
    /// every leaf's ρ-image is in the inventory
    pub rho_closed: bool,
    pub leaf_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disc: Option<DiscLeaf>,
    pub fixed_points: Vec<FixedPoint>,
    pub crossings: Vec<CrossingRow>,
}

fn same_leaf(a: &LeafEntry, b: &LeafEntry) -> bool {
    let theta = match (a.theta, b.theta) {
        (Some(x), Some(y)) => wrap_pi(x - y).abs() < 1e-9,
        (None, None) => true,
        _ => false,
    };
    a.case == b.case && (a.init - b.init).abs() < 1e-9 && theta
}

/// Inventory key of the ρ-image. For annuli ρ∘w_θ(s, t) = w_{π−θ}(s, −t).
fn mirror_entry(e: &LeafEntry) -> LeafEntry {
    let init = match e.case {
        LeafCase::CylY2L3 | LeafCase::CylY2L3Mirror => 2.0 * TAU - e.init,
        _ => e.init,
    };
    let theta = e.theta.map(|t| (std::f64::consts::PI - t).rem_euclid(TAU));
    LeafEntry { case: e.case.mirror(), init, theta, ..e.clone() }
}

/// Puts together binding data, leaf audits and the disc section.
pub fn assemble_report(
    contact: &Contact,
    leaves: &[Leaf],
    orbits: &[OrbitRecord],
    disc: Option<&DiscLeaf>,
    crossings: &[CrossingCount],
) -> Result<FoliationReport> {
    let model = &contact.model;
    let mut binding = Vec::with_capacity(orbits.len());
    for o in orbits {
        let (Some(cz), Some(degenerate)) = (o.cz, o.degenerate) else {
            return Err(Error::Consistency(format!("incomplete report: orbit {} has no CZ index", o.label)));
        };
        binding.push(BindingEntry {
            label: o.label.clone(),
            cz,
            degenerate,
            period_h: o.period_h,
            period_reeb: o.period_reeb,
            symmetric: o.symmetric,
        });
    }
    let shadows: Vec<(f64, f64)> = orbits.iter().map(|o| (o.start[1], o.start[3])).collect();
    let mut entries = Vec::with_capacity(leaves.len());
    for leaf in leaves {
        let audit = leaf_audit(contact, leaf)?;
        let mut gap = f64::INFINITY;
        if leaf.case != LeafCase::Annulus {
            for k in 1..leaf.len() - 1 {
                for &(x, y) in &shadows {
                    gap = gap.min((leaf.x2[k] - x).hypot(leaf.y2[k] - y));
                }
            }
        } else {
            // the annulus shadow is the segment x₁ = y₁ = 0 removed: r > 0 inside
            for k in 1..leaf.len() - 1 {
                gap = gap.min(leaf.r[k]);
            }
        }
        entries.push(LeafEntry {
            case: leaf.case,
            init: leaf.init,
            theta: leaf.theta,
            energy: leaf.energy,
            masses: leaf.masses,
            asymptotes: leaf.asymptotes.clone(),
            audit,
            binding_gap: gap,
        });
    }
    let rho_closed = entries.iter().all(|e| {
        let img = mirror_entry(e);
        entries.iter().any(|f| same_leaf(f, &img))
    });
    let leaf_margin = entries.iter().map(|e| e.audit.transverse_min).fold(f64::INFINITY, f64::min);
    let fixed = disc.map(|d| fixed_points(&d.window, RESONANCE_M_MAX)).unwrap_or_default();
    Ok(FoliationReport {
        regime: model.kind(),
        binding,
        leaves: entries,
        rho_closed,
        leaf_margin,
        disc: disc.copied(),
        fixed_points: fixed,
        crossings: crossings
            .iter()
            .map(|c| CrossingRow { k: c.k, l: c.l, count: c.exact, integrated: c.integrated })
            .collect(),
    })
}

/// Default leaf inventory: for the mirrored stacks a plane on each side of
/// Λ₃ over x₂ = 0, 2π, 4π and the cylinder pair; for the appendix stack
/// annuli at `n_theta` equally spaced angles.
pub fn default_leaves(model: &ModelHamiltonian, n_theta: usize) -> Result<Vec<Leaf>> {
    match model.kind() {
        StackKind::Appendix => (0..n_theta.max(1))
            .map(|j| annulus_leaf(model, TAU * j as f64 / n_theta.max(1) as f64))
            .collect(),
        StackKind::Lower | StackKind::Upper => {
            let c0 = model.center();
            let l1 = model.derived.lambda1;
            let mut out = Vec::new();
            for x2 in [0.0, TAU] {
                let case = if x2 == 0.0 { LeafCase::PlaneX2_0 } else { LeafCase::PlaneX2_2pi };
                let top = model.lambda_max(x2)?;
                for init in [0.5 * (l1 + c0), 0.5 * (c0 + top)] {
                    let leaf = solve_leaf(model, case, init)?;
                    if case == LeafCase::PlaneX2_0 {
                        out.push(mirror_leaf(&leaf));
                    }
                    out.push(leaf);
                }
            }
            let cyl = solve_leaf(model, LeafCase::CylY2L3, 0.5 * TAU)?;
            out.push(mirror_leaf(&cyl));
            out.push(cyl);
            Ok(out)
        }
        StackKind::Plain => Err(Error::param("regime", "no leaves for the plain Hamiltonian")),
    }
}

/// Disc window matching the stack's own (c, E0).
pub fn stack_window(model: &ModelHamiltonian) -> Result<DiscWindow> {
    let p = model.params;
    match model.kind() {
        StackKind::Upper => DiscWindow::retrograde(p.c, p.e0),
        _ => DiscWindow::direct(p.c, p.e0),
    }
}

/// Everything in one go: binding orbits with CZ indices, the default leaves,
/// the disc at x₂ = 0 and crossing counts for the tori in the window.
pub fn foliation_report(model: &ModelHamiltonian, n_theta: usize, max_l: u64) -> Result<FoliationReport> {
    let contact = Contact::new(model)?;
    let mut orbits = binding_orbits(model)?;
    for o in &mut orbits {
        annotate(model, o, 16)?;
    }
    let leaves = default_leaves(model, n_theta)?;
    let window = stack_window(model)?;
    let disc = disc_leaf(&window, 0.0)?;
    let mut crossings = Vec::new();
    if window.regime == Regime::Direct {
        let (lo, hi) = window.y_range();
        for t in crate::catalog::tori_on_level(window.c, -0.5 / (lo * lo), -0.5 / (hi * hi), max_l)? {
            crossings.push(crossing_count(window.c, t.k, t.l, 0.0)?);
        }
    }
    assemble_report(&contact, &leaves, &orbits, Some(&disc), &crossings)
}
