//! Explicit finite-energy leaves. With the axisymmetric Ansatz
//! u(s, t) = (r sin 2πt, x₂(s), r cos 2πt, y₂(s)) on one of the lines
//! x₂ ≡ 0, 2π, 4π or y₂ ≡ Λ₃, the Cauchy-Riemann system reduces to a scalar
//! ODE q̇ = −2πr²K_q/(K_q² + r²) with r² = 2(c − K). The appendix annulus
//! w_θ(s, t) = (r cos θ, 2πt, r sin θ, y₂(s)) gives ẏ₂ = 2πr²/(r² + Ĥ₂′²).

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::contact::Contact;
use crate::cz::frame;
use crate::error::{Error, Result};
use crate::ode::{locate_in_step, Control, Dopri5};
use crate::stack::{ModelHamiltonian, StackKind};

/// Default number of output nodes.
pub const LEAF_NODES: usize = 4096;
/// Integration stops this close to the limiting equilibrium.
pub const EQUILIBRIUM_GAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafCase {
    PlaneX2_0,
    PlaneX2_2pi,
    PlaneX2_4pi,
    CylY2L3,
    CylY2L3Mirror,
    Annulus,
}

impl LeafCase {
    pub fn as_str(self) -> &'static str {
        match self {
            LeafCase::PlaneX2_0 => "plane_x2_0",
            LeafCase::PlaneX2_2pi => "plane_x2_2pi",
            LeafCase::PlaneX2_4pi => "plane_x2_4pi",
            LeafCase::CylY2L3 => "cyl_y2_L3",
            LeafCase::CylY2L3Mirror => "cyl_y2_L3_mirror",
            LeafCase::Annulus => "annulus",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "plane_x2_0" => LeafCase::PlaneX2_0,
            "plane_x2_2pi" => LeafCase::PlaneX2_2pi,
            "plane_x2_4pi" => LeafCase::PlaneX2_4pi,
            "cyl_y2_L3" => LeafCase::CylY2L3,
            "cyl_y2_L3_mirror" => LeafCase::CylY2L3Mirror,
            "annulus" => LeafCase::Annulus,
            other => return Err(Error::Parse(format!("unknown leaf case `{other}`"))),
        })
    }

    pub fn mirror(self) -> Self {
        match self {
            LeafCase::PlaneX2_0 => LeafCase::PlaneX2_4pi,
            LeafCase::PlaneX2_4pi => LeafCase::PlaneX2_0,
            LeafCase::CylY2L3 => LeafCase::CylY2L3Mirror,
            LeafCase::CylY2L3Mirror => LeafCase::CylY2L3,
            c => c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Puncture {
    /// "+inf" or "-inf" in s
    pub end: &'static str,
    /// binding orbit label, or "removable"
    pub orbit: String,
    /// +1 if the ℝ-coordinate tends to +∞ there
    pub sign: i8,
}

#[derive(Debug, Clone, Serialize)]
pub struct Leaf {
    pub case: LeafCase,
    pub init: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub level: f64,
    #[serde(skip)]
    pub s: Vec<f64>,
    #[serde(skip)]
    pub a: Vec<f64>,
    #[serde(skip)]
    pub x2: Vec<f64>,
    #[serde(skip)]
    pub y2: Vec<f64>,
    #[serde(skip)]
    pub r: Vec<f64>,
    pub asymptotes: Vec<Puncture>,
    pub energy: f64,
    /// ∮ u*λ over {s} × S¹ in the limits s → −∞ and s → +∞
    pub masses: (f64, f64),
}

impl Leaf {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

/// Which coordinate moves and where the other one sits.
#[derive(Debug, Clone, Copy)]
enum Moving {
    /// y₂ moves at fixed x₂
    Y { x2: f64 },
    /// x₂ moves at fixed y₂
    X { y2: f64 },
}

fn check_model(model: &ModelHamiltonian, want: &[StackKind]) -> Result<()> {
    if want.contains(&model.kind()) {
        Ok(())
    } else {
        Err(Error::param("regime", format!("leaf needs one of {want:?}, got {:?}", model.kind())))
    }
}

/// Right-hand side of the reduced ODE for the moving coordinate, plus
/// r² and ∂K along it.
fn reduced(model: &ModelHamiltonian, mv: Moving, q: f64) -> Result<(f64, f64, f64)> {
    let c = model.level();
    let (x, y) = match mv {
        Moving::Y { x2 } => (x2, q),
        Moving::X { y2 } => (q, y2),
    };
    let j = model.h2_jet(x, y)?;
    let r2 = (2.0 * (c - j.v)).max(0.0);
    let kq = match mv {
        Moving::Y { .. } => j.y,
        Moving::X { .. } => j.x,
    };
    let den = kq * kq + r2;
    let rate = if den > 0.0 { -TAU * r2 * kq / den } else { 0.0 };
    Ok((rate, r2, kq))
}

fn annulus_rate(model: &ModelHamiltonian, y: f64) -> Result<(f64, f64, f64)> {
    let j = model.h2_jet(0.0, y)?;
    let r2 = (2.0 * (model.level() - j.v)).max(0.0);
    let den = r2 + j.y * j.y;
    Ok((if den > 0.0 { TAU * r2 / den } else { 0.0 }, r2, j.y))
}

struct Profile {
    s: Vec<f64>,
    q: Vec<f64>,
    a: Vec<f64>,
}

/// Integrates q̇ = f(q), ȧ = g(q) from s = 0 in both directions until q is
/// within the gap of the respective limit, then resamples on `n` uniform
/// nodes.
fn profile<F, G>(f: F, g: G, q0: f64, lim_minus: f64, lim_plus: f64, n: usize) -> Result<Profile>
where
    F: Fn(f64) -> Result<f64>,
    G: Fn(f64) -> Result<f64>,
{
    let rhs = |_s: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = f(y[0])?;
        dy[1] = g(y[0])?;
        Ok(())
    };
    let solver = Dopri5::new(1e-12, 1e-14);
    let mut ends = [0.0; 2];
    for (k, (lim, dir)) in [(lim_minus, -1.0), (lim_plus, 1.0)].into_iter().enumerate() {
        let gap = |_s: f64, y: &[f64]| (y[0] - lim).abs() - EQUILIBRIUM_GAP;
        let mut hit = None;
        solver.solve(rhs, 0.0, &[q0, 0.0], dir * 1e3, |st| {
            if gap(st.t1, st.y1) <= 0.0 {
                hit = Some(locate_in_step(st, gap, 1e-12).0);
                return Control::Stop;
            }
            Control::Continue
        })?;
        ends[k] = hit.ok_or_else(|| {
            Error::Integrator(format!("leaf profile did not approach {lim} within |s| < 1000"))
        })?;
    }
    let n = n.max(8);
    let (s0, s1) = (ends[0], ends[1]);
    // uniform spacing, shifted so that s = 0 is a node
    let h = (s1 - s0) / (n - 1) as f64;
    let k0 = (-s0 / h).round();
    let grid: Vec<f64> = (0..n).map(|i| (i as f64 - k0) * h).collect();
    let split = grid.partition_point(|&s| s < 0.0);
    let back: Vec<f64> = grid[..split].iter().rev().copied().collect();
    let fwd: Vec<f64> = grid[split..].to_vec();
    let mut out_q = Vec::with_capacity(n);
    let mut out_a = Vec::with_capacity(n);
    if !back.is_empty() {
        let vals = solver.solve_at(rhs, 0.0, &[q0, 0.0], &back)?;
        for v in vals.iter().rev() {
            out_q.push(v[0]);
            out_a.push(v[1]);
        }
    }
    if !fwd.is_empty() {
        for v in solver.solve_at(rhs, 0.0, &[q0, 0.0], &fwd)? {
            out_q.push(v[0]);
            out_a.push(v[1]);
        }
    }
    Ok(Profile { s: grid, q: out_q, a: out_a })
}

/// Aitken Δ² limit of a sequence sampled at three equally spaced nodes near
/// the end of the grid; falls back to the last value when the differences
/// are not geometric.
fn tail_limit(v: &[f64], from_end: bool) -> f64 {
    let n = v.len();
    let stride = (n / 64).max(1);
    let pick = |k: usize| if from_end { v[n - 1 - k * stride] } else { v[k * stride] };
    let (x0, x1, x2) = (pick(2), pick(1), pick(0));
    let d1 = x1 - x0;
    let d2 = x2 - x1;
    let den = d2 - d1;
    if den.abs() < 1e-300 || d1 == 0.0 || !(d2 / d1 > 0.0 && d2 / d1 < 1.0) {
        return x2;
    }
    x2 - d2 * d2 / den
}

fn strictly_between(v: f64, a: f64, b: f64) -> bool {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    v > lo && v < hi
}

/// Solves one of the plane or cylinder cases on the lower (or upper) stack.
pub fn solve_leaf(model: &ModelHamiltonian, case: LeafCase, init: f64) -> Result<Leaf> {
    solve_leaf_with(model, case, init, LEAF_NODES)
}

pub fn solve_leaf_with(model: &ModelHamiltonian, case: LeafCase, init: f64, n: usize) -> Result<Leaf> {
    check_model(model, &[StackKind::Lower, StackKind::Upper])?;
    if !init.is_finite() {
        return Err(Error::param("init", "must be finite"));
    }
    match case {
        LeafCase::PlaneX2_4pi => return Ok(mirror_leaf(&solve_leaf_with(model, LeafCase::PlaneX2_0, init, n)?)),
        LeafCase::CylY2L3Mirror => {
            if !strictly_between(init, TAU, 2.0 * TAU) {
                return Err(Error::param("init", format!("x₂(0) must lie in (2π, 4π) (got {init})")));
            }
            return Ok(mirror_leaf(&solve_leaf_with(model, LeafCase::CylY2L3, 2.0 * TAU - init, n)?));
        }
        LeafCase::Annulus => {
            return Err(Error::param("case", "use annulus_leaf for the appendix annuli"));
        }
        _ => {}
    }
    let c0 = model.center();
    let l1 = model.derived.lambda1;
    let level = model.level();
    let (mv, lim_minus, lim_plus, binding_plus, binding_minus) = match case {
        LeafCase::PlaneX2_0 | LeafCase::PlaneX2_2pi => {
            let x2 = if case == LeafCase::PlaneX2_0 { 0.0 } else { TAU };
            let top = model.lambda_max(x2)?;
            let label = if x2 == 0.0 { "P3" } else { "P2" };
            if strictly_between(init, l1, c0) {
                (Moving::Y { x2 }, l1, c0, label, None)
            } else if strictly_between(init, c0, top) {
                (Moving::Y { x2 }, top, c0, label, None)
            } else {
                return Err(Error::param(
                    "init",
                    format!("y₂(0) must lie strictly inside ({l1}, {c0}) or ({c0}, {top}) (got {init})"),
                ));
            }
        }
        LeafCase::CylY2L3 => {
            if !strictly_between(init, 0.0, TAU) {
                return Err(Error::param("init", format!("x₂(0) must lie in (0, 2π) (got {init})")));
            }
            (Moving::X { y2: c0 }, TAU, 0.0, "P3", Some("P2"))
        }
        _ => unreachable!(),
    };
    let p = profile(
        |q| Ok(reduced(model, mv, q)?.0),
        |q| Ok(PI * reduced(model, mv, q)?.1),
        init,
        lim_minus,
        lim_plus,
        n,
    )?;
    let mut r = Vec::with_capacity(p.q.len());
    let (mut x2, mut y2) = (Vec::with_capacity(p.q.len()), Vec::with_capacity(p.q.len()));
    for &q in &p.q {
        let (_, r2, _) = reduced(model, mv, q)?;
        r.push(r2.sqrt());
        match mv {
            Moving::Y { x2: x } => {
                x2.push(x);
                y2.push(q);
            }
            Moving::X { y2: y } => {
                x2.push(q);
                y2.push(y);
            }
        }
    }
    let mass: Vec<f64> = r.iter().map(|v| PI * v * v).collect();
    let m_minus = tail_limit(&mass, false);
    let m_plus = tail_limit(&mass, true);
    let minus = match binding_minus {
        Some(lbl) => Puncture { end: "-inf", orbit: lbl.to_string(), sign: -1 },
        None => Puncture { end: "-inf", orbit: "removable".to_string(), sign: -1 },
    };
    let plus = Puncture { end: "+inf", orbit: binding_plus.to_string(), sign: 1 };
    Ok(Leaf {
        case,
        init,
        theta: None,
        level,
        s: p.s,
        a: p.a,
        x2,
        y2,
        r,
        asymptotes: vec![minus, plus],
        energy: m_plus,
        masses: (m_minus, m_plus),
    })
}

/// The ρ-image: x₂ ↦ 4π − x₂ with a(s, t) ↦ a(s, −t) (a is t-free here).
pub fn mirror_leaf(leaf: &Leaf) -> Leaf {
    let swap = |o: &str| match o {
        "P3" => "P3'".to_string(),
        "P3'" => "P3".to_string(),
        other => other.to_string(),
    };
    let mut out = leaf.clone();
    out.case = leaf.case.mirror();
    if matches!(leaf.case, LeafCase::CylY2L3 | LeafCase::CylY2L3Mirror) {
        out.init = 2.0 * TAU - leaf.init;
    }
    out.x2 = leaf.x2.iter().map(|x| 2.0 * TAU - x).collect();
    out.asymptotes = leaf
        .asymptotes
        .iter()
        .map(|p| Puncture { end: p.end, orbit: swap(&p.orbit), sign: p.sign })
        .collect();
    out
}

/// Appendix annulus w_θ from Q₁ (s → −∞) to Q₂ (s → +∞), normalised by
/// y₂(0) = Λ₃ so that s₀ = 0.
pub fn annulus_leaf(model: &ModelHamiltonian, theta: f64) -> Result<Leaf> {
    annulus_leaf_with(model, theta, model.center(), LEAF_NODES)
}

pub fn annulus_leaf_with(model: &ModelHamiltonian, theta: f64, y0: f64, n: usize) -> Result<Leaf> {
    check_model(model, &[StackKind::Appendix])?;
    let l1 = model.derived.lambda1;
    let top = model.lambda_max(0.0)?;
    if !strictly_between(y0, l1, top) {
        return Err(Error::param("init", format!("y₂(0) must lie in ({l1}, {top}) (got {y0})")));
    }
    let c0 = model.center();
    let p = profile(
        |y| Ok(annulus_rate(model, y)?.0),
        |y| Ok(TAU * (y - c0)),
        y0,
        l1,
        top,
        n,
    )?;
    let mut r = Vec::with_capacity(p.q.len());
    for &y in &p.q {
        r.push(annulus_rate(model, y)?.1.sqrt());
    }
    let mass: Vec<f64> = p.q.iter().map(|y| TAU * (y - c0)).collect();
    let m_minus = tail_limit(&mass, false);
    let m_plus = tail_limit(&mass, true);
    Ok(Leaf {
        case: LeafCase::Annulus,
        init: y0,
        theta: Some(theta.rem_euclid(TAU)),
        level: model.level(),
        x2: vec![f64::NAN; p.q.len()],
        y2: p.q,
        s: p.s,
        a: p.a,
        r,
        asymptotes: vec![
            Puncture { end: "-inf", orbit: "Q1".into(), sign: 1 },
            Puncture { end: "+inf", orbit: "Q2".into(), sign: 1 },
        ],
        energy: m_plus - m_minus,
        masses: (m_minus, m_plus),
    })
}

/// The annulus through a point of the Kepler region y₂ ∈ (Λ₁, Λ₂] of the
/// appendix Σ: θ from atan2(y₁, x₁), t from x₂, and s from y₂ by inverting
/// the monotone profile of `leaf`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AnnulusCoords {
    pub theta: f64,
    pub s: f64,
    pub t: f64,
}

pub fn annulus_assign(model: &ModelHamiltonian, leaf: &Leaf, p: &[f64; 4]) -> Result<AnnulusCoords> {
    if leaf.case != LeafCase::Annulus {
        return Err(Error::param("leaf", "annulus_assign needs an annulus leaf"));
    }
    let r = p[0].hypot(p[2]);
    if r == 0.0 {
        return Err(Error::Degenerate("point lies on the binding orbit Q1".into()));
    }
    let y = p[3];
    let n = leaf.y2.len();
    if !(y > leaf.y2[0] && y < leaf.y2[n - 1]) {
        return Err(Error::Domain(format!("y₂ = {y} outside the resolved annulus profile")));
    }
    // bracket on the grid, then Newton on the ODE from the nearest node
    let k = leaf.y2.partition_point(|&v| v < y).clamp(1, n - 1);
    let (sa, sb) = (leaf.s[k - 1], leaf.s[k]);
    let c0 = model.center();
    let rhs = |_s: f64, v: &[f64], dv: &mut [f64]| {
        dv[0] = annulus_rate(model, v[0])?.0;
        dv[1] = TAU * (v[0] - c0);
        Ok(())
    };
    let solver = Dopri5::new(1e-13, 1e-15);
    let mut s = sa;
    let mut ys = leaf.y2[k - 1];
    for _ in 0..40 {
        let rate = annulus_rate(model, ys)?.0;
        if rate <= 0.0 {
            break;
        }
        let ds = (y - ys) / rate;
        if ds.abs() < 1e-15 * (1.0 + s.abs()) {
            break;
        }
        let s_new = (s + ds).clamp(sa - (sb - sa), sb + (sb - sa));
        let out = solver.solve(rhs, s, &[ys, 0.0], s_new, |_| Control::Continue)?;
        s = s_new;
        ys = out.y[0];
    }
    Ok(AnnulusCoords {
        theta: p[2].atan2(p[0]).rem_euclid(TAU),
        s,
        t: (p[1] / TAU).rem_euclid(1.0),
    })
}

/// Point of the annulus w_θ(s, t) recomputed from its coordinates.
pub fn annulus_point(model: &ModelHamiltonian, leaf: &Leaf, at: &AnnulusCoords) -> Result<[f64; 4]> {
    let c0 = model.center();
    let rhs = |_s: f64, v: &[f64], dv: &mut [f64]| {
        dv[0] = annulus_rate(model, v[0])?.0;
        dv[1] = TAU * (v[0] - c0);
        Ok(())
    };
    let n = leaf.s.len();
    let k = leaf.s.partition_point(|&v| v < at.s).clamp(0, n - 1);
    let out = Dopri5::new(1e-13, 1e-15).solve(rhs, leaf.s[k], &[leaf.y2[k], 0.0], at.s, |_| Control::Continue)?;
    let y = out.y[0];
    let r = annulus_rate(model, y)?.1.sqrt();
    Ok([r * at.theta.cos(), TAU * at.t, r * at.theta.sin(), y])
}

#[derive(Debug, Clone, Serialize)]
pub struct LeafAudit {
    /// max |½r² + K − c| over the nodes
    pub energy_relation: f64,
    /// max |λ(u_s)| on the (s, t) grid
    pub lambda_us: f64,
    /// max |λ(u_t) − a′(s)|
    pub lambda_ut: f64,
    /// max relative difference between a(s) and the Simpson integral of a′
    pub a_quadrature: f64,
    /// max |πu_s + Jπu_t| / (|πu_s| + |πu_t|)
    pub cauchy_riemann: f64,
    /// min of Δ₁□₂ − Δ₂□₁ (positive for a valid leaf); planes and cylinders only
    pub det_min: Option<f64>,
    /// max relative error of Δ₁□₂ − Δ₂□₁ = r²(r² + |∇K|²)/(2k)
    pub det_identity: Option<f64>,
    /// min of vol(u_s, u_t, X_H)/(|u_s||u_t||X_H|) on the interior grid
    pub transverse_min: f64,
    pub monotone: bool,
    pub nodes: usize,
}

impl LeafAudit {
    pub fn max_residual(&self) -> f64 {
        [
            self.energy_relation,
            self.lambda_us,
            self.lambda_ut,
            self.a_quadrature,
            self.cauchy_riemann,
            self.det_identity.unwrap_or(0.0),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn ok(&self, tol: f64) -> bool {
        self.monotone && self.det_min.is_none_or(|d| d > 0.0) && self.transverse_min > 0.0 && self.max_residual() < tol
    }
}

fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Normalised 3-volume spanned by a, b, c in ℝ⁴: the product of the
/// Gram-Schmidt residual norms over the product of the norms.
fn volume3(a: &[f64; 4], b: &[f64; 4], c: &[f64; 4]) -> f64 {
    let norm = |v: &[f64; 4]| dot(v, v).sqrt();
    let (na, nb, nc) = (norm(a), norm(b), norm(c));
    if na == 0.0 || nb == 0.0 || nc == 0.0 {
        return 0.0;
    }
    let e1 = a.map(|v| v / na);
    let mut b1 = *b;
    let pb = dot(&b1, &e1);
    b1.iter_mut().zip(&e1).for_each(|(x, e)| *x -= pb * e);
    let nb1 = norm(&b1);
    if nb1 == 0.0 {
        return 0.0;
    }
    let e2 = b1.map(|v| v / nb1);
    let mut c1 = *c;
    for e in [&e1, &e2] {
        let pc = dot(&c1, e);
        c1.iter_mut().zip(e).for_each(|(x, e)| *x -= pc * e);
    }
    nb1 * norm(&c1) / (nb * nc)
}

/// Residual checks of a leaf against the holomorphic curve equations.
pub fn leaf_audit(contact: &Contact, leaf: &Leaf) -> Result<LeafAudit> {
    let model = &contact.model;
    let n = leaf.len();
    if n < 8 {
        return Err(Error::Degenerate("leaf has fewer than eight nodes".into()));
    }
    let span = leaf.s[n - 1] - leaf.s[0];
    if !(span > 0.0) {
        return Err(Error::Degenerate("zero-width leaf".into()));
    }
    let annulus = leaf.case == LeafCase::Annulus;
    let moving_x = matches!(leaf.case, LeafCase::CylY2L3 | LeafCase::CylY2L3Mirror);
    let mirrored = matches!(leaf.case, LeafCase::PlaneX2_4pi | LeafCase::CylY2L3Mirror);
    let c0 = model.center();
    let level = model.level();

    let q: &[f64] = if moving_x { &leaf.x2 } else { &leaf.y2 };
    let dir = (q[n - 1] - q[0]).signum();
    let mut monotone = dir != 0.0;
    for w in q.windows(2) {
        if (w[1] - w[0]) * dir < 0.0 {
            monotone = false;
        }
    }
    if !annulus && q.windows(2).filter(|w| w[1] == w[0]).count() > n / 4 {
        monotone = false;
    }

    let mut energy_relation: f64 = 0.0;
    let x_at = |k: usize| if annulus { 0.0 } else { leaf.x2[k] };
    for k in 0..n {
        let v = model.h2_value(x_at(k), leaf.y2[k])?;
        energy_relation = energy_relation.max((0.5 * leaf.r[k] * leaf.r[k] + v - level).abs());
    }

    // a′ from the ODE vs a by Simpson over pairs of cells
    let aprime = |k: usize| -> f64 {
        if annulus {
            TAU * (leaf.y2[k] - c0)
        } else {
            PI * leaf.r[k] * leaf.r[k]
        }
    };
    let h = span / (n - 1) as f64;
    let mut a_quadrature: f64 = 0.0;
    let scale = leaf.a.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let mut k = 0;
    while k + 2 < n {
        let simpson = h / 3.0 * (aprime(k) + 4.0 * aprime(k + 1) + aprime(k + 2));
        let diff = leaf.a[k + 2] - leaf.a[k];
        a_quadrature = a_quadrature.max((simpson - diff).abs() / scale);
        k += 2;
    }

    // Cauchy-Riemann on a coarse grid away from the degenerate ends
    let mut lambda_us: f64 = 0.0;
    let mut lambda_ut: f64 = 0.0;
    let mut cr: f64 = 0.0;
    let mut det_min = f64::INFINITY;
    let mut det_identity: f64 = 0.0;
    let mut transverse_min = f64::INFINITY;
    let ns = 64;
    let nt = 16;
    let rmax = leaf.r.iter().fold(0.0_f64, |m, v| m.max(*v));
    for i in 1..ns {
        let k = i * (n - 1) / ns;
        let r = leaf.r[k];
        if r < 1e-3 * rmax.max(1e-300) {
            continue;
        }
        let (x2, y2) = (x_at(k), leaf.y2[k]);
        // the ODE in the unmirrored chart
        let (xs, sgn) = if mirrored { (2.0 * TAU - x2, -1.0) } else { (x2, 1.0) };
        let j = model.h2_jet(xs, y2)?;
        let (xd, yd) = if annulus {
            (0.0, annulus_rate(model, y2)?.0)
        } else if moving_x {
            (sgn * reduced(model, Moving::X { y2 }, xs)?.0, 0.0)
        } else {
            (0.0, reduced(model, Moving::Y { x2: xs }, y2)?.0)
        };
        let rd = -(sgn * j.x * xd + j.y * yd) / r;
        for it in 0..nt {
            let t = it as f64 / nt as f64;
            let (p, us, ut) = if annulus {
                let th = leaf.theta.unwrap_or(0.0);
                let (s, c) = th.sin_cos();
                (
                    [r * c, TAU * t, r * s, y2],
                    [rd * c, 0.0, rd * s, yd],
                    [0.0, TAU, 0.0, 0.0],
                )
            } else {
                let (s, c) = (TAU * t).sin_cos();
                (
                    [r * s, x2, r * c, y2],
                    [rd * s, xd, rd * c, yd],
                    [TAU * r * c, 0.0, -TAU * r * s, 0.0],
                )
            };
            let fr = frame(contact, &p)?;
            let reeb = contact.reeb(&p)?;
            let l_us = contact.lambda(&p, &us);
            let l_ut = contact.lambda(&p, &ut);
            lambda_us = lambda_us.max(l_us.abs());
            lambda_ut = lambda_ut.max((l_ut - aprime(k)).abs());
            let pus: [f64; 4] = std::array::from_fn(|c| us[c] - l_us * reeb[c]);
            let put: [f64; 4] = std::array::from_fn(|c| ut[c] - l_ut * reeb[c]);
            // coordinates of πu_t in (X̄₁, X̄₂)
            let (b1, b2) = (&fr.bar[0], &fr.bar[1]);
            let g = [[dot(b1, b1), dot(b1, b2)], [dot(b1, b2), dot(b2, b2)]];
            let rhs = [dot(b1, &put), dot(b2, &put)];
            let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
            let al = (rhs[0] * g[1][1] - rhs[1] * g[0][1]) / det;
            let be = (rhs[1] * g[0][0] - rhs[0] * g[1][0]) / det;
            let jput: [f64; 4] = std::array::from_fn(|c| al * b2[c] - be * b1[c]);
            let num: f64 = (0..4).map(|c| (pus[c] + jput[c]).powi(2)).sum::<f64>().sqrt();
            let den = dot(&pus, &pus).sqrt() + dot(&put, &put).sqrt();
            cr = cr.max(num / den);

            let xh = model.hamiltonian_field(&p)?;
            transverse_min = transverse_min.min(volume3(&us, &ut, &xh));

            if !annulus {
                let (sq1, sq2) = (b1[1], b1[3]);
                let (tr1, tr2) = (b2[1], b2[3]);
                let d = tr1 * sq2 - tr2 * sq1;
                det_min = det_min.min(d);
                let kk = contact.lambda_xh(&p)?;
                let grad = model.eval(&p)?.grad;
                let expect = r * r * (r * r + grad[1] * grad[1] + grad[3] * grad[3]) / (2.0 * kk);
                det_identity = det_identity.max((d - expect).abs() / expect.abs());
            }
        }
    }
    Ok(LeafAudit {
        energy_relation,
        lambda_us,
        lambda_ut,
        a_quadrature,
        cauchy_riemann: cr,
        det_min: (!annulus).then_some(det_min),
        det_identity: (!annulus).then_some(det_identity),
        transverse_min,
        monotone,
        nodes: n,
    })
}

/// The sign switch of ṙ on the grid: the index k with r increasing up to
/// node k and decreasing after it.
pub fn r_peak(leaf: &Leaf) -> Option<usize> {
    let n = leaf.r.len();
    let k = (0..n).max_by(|&i, &j| leaf.r[i].total_cmp(&leaf.r[j]))?;
    let up = leaf.r[..=k].windows(2).all(|w| w[1] >= w[0]);
    let down = leaf.r[k..].windows(2).all(|w| w[1] <= w[0]);
    (up && down).then_some(k)
}
