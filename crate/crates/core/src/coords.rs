//! Orbital-element charts on the bounded direct (and retrograde) region:
//! Kepler elements, Delaunay variables and Poincaré variables.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::{PhaseState, COLLISION_FLOOR};

/// Eccentricities below this are treated as circular by [`kepler_map`].
pub const CIRCULAR_EPS: f64 = 1e-13;

/// Wraps an angle into [0, 2π).
pub fn wrap_tau(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Wraps an angle difference into (−π, π].
pub fn wrap_pi(x: f64) -> f64 {
    let r = wrap_tau(x + PI) - PI;
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeplerElements {
    pub alpha: f64,
    pub beta: f64,
    pub a: f64,
    pub e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelaunayState {
    pub l: f64,
    pub k: f64,
    #[serde(rename = "L")]
    pub big_l: f64,
    #[serde(rename = "K")]
    pub big_k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Direct,
    Retrograde,
    /// x2 read modulo 4π (the doubled cylinder of the model Hamiltonians)
    #[serde(rename = "modified-4pi")]
    Modified4Pi,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Direct => "direct",
            Regime::Retrograde => "retrograde",
            Regime::Modified4Pi => "modified-4pi",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "direct" => Ok(Regime::Direct),
            "retrograde" => Ok(Regime::Retrograde),
            "modified-4pi" => Ok(Regime::Modified4Pi),
            other => Err(Error::Parse(format!("unknown regime `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareState {
    pub x1: f64,
    pub x2: f64,
    pub y1: f64,
    pub y2: f64,
    pub regime: Regime,
}

impl PoincareState {
    pub fn new(x1: f64, x2: f64, y1: f64, y2: f64, regime: Regime) -> Self {
        Self { x1, x2, y1, y2, regime }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x1, self.x2, self.y1, self.y2]
    }

    /// Relabels x2 modulo 4π.
    pub fn to_modified(&self) -> Self {
        let x2 = self.x2.rem_euclid(2.0 * TAU);
        Self { x2, regime: Regime::Modified4Pi, ..*self }
    }
}

struct Raw {
    r: f64,
    energy: f64,
    l: f64,
    ex: f64,
    ey: f64,
}

fn raw(s: &PhaseState) -> Result<Raw> {
    let r = s.radius();
    if !(r >= COLLISION_FLOOR) {
        return Err(Error::Collision { radius: r, floor: COLLISION_FLOOR });
    }
    let energy = 0.5 * (s.p1 * s.p1 + s.p2 * s.p2) - 1.0 / r;
    let l = s.angular_momentum();
    Ok(Raw {
        r,
        energy,
        l,
        ex: s.p2 * l - s.q1 / r,
        ey: -s.p1 * l - s.q2 / r,
    })
}

fn check_direct(w: &Raw) -> Result<()> {
    if !(w.energy < 0.0) {
        return Err(Error::Domain(format!("E < 0 violated (E = {})", w.energy)));
    }
    if !(w.l > 0.0) {
        return Err(Error::Domain(format!("L > 0 violated (L = {})", w.l)));
    }
    let e = w.ex.hypot(w.ey);
    if !(e < 1.0) {
        return Err(Error::Domain(format!("e < 1 violated (e = {e})")));
    }
    Ok(())
}

pub fn kepler_map(s: &PhaseState) -> Result<KeplerElements> {
    let w = raw(s)?;
    check_direct(&w)?;
    let alpha = wrap_tau(s.q2.atan2(s.q1));
    let e = w.ex.hypot(w.ey);
    let beta = if e < CIRCULAR_EPS {
        alpha
    } else {
        wrap_tau(w.ey.atan2(w.ex))
    };
    Ok(KeplerElements {
        alpha,
        beta,
        a: -0.5 / w.energy,
        e: if e < CIRCULAR_EPS { 0.0 } else { e },
    })
}

/// Mean anomaly from the true anomaly through the eccentric anomaly.
pub fn mean_anomaly(nu: f64, e: f64) -> f64 {
    let (s, c) = (0.5 * nu).sin_cos();
    let ecc = 2.0 * ((1.0 - e).sqrt() * s).atan2((1.0 + e).sqrt() * c);
    ecc - e * ecc.sin()
}

/// Delaunay variables (l, k, L, K) = (β, mean anomaly, √(a(1−e²)), √a).
/// Circular elements are rejected unless `allow_circular` is set, in which
/// case l = α and k = 0.
pub fn delaunay_map(el: &KeplerElements, allow_circular: bool) -> Result<DelaunayState> {
    if !(el.e >= 0.0 && el.e < 1.0) || !(el.a > 0.0) {
        return Err(Error::Domain(format!("elements out of range: a = {}, e = {}", el.a, el.e)));
    }
    if el.e == 0.0 && !allow_circular {
        return Err(Error::Domain(
            "argument of perihelion undefined for a circular orbit".into(),
        ));
    }
    let big_k = el.a.sqrt();
    Ok(DelaunayState {
        l: el.beta,
        k: wrap_tau(mean_anomaly(el.alpha - el.beta, el.e)),
        big_l: big_k * (1.0 - el.e * el.e).sqrt(),
        big_k,
    })
}

/// Poincaré variables (η, λ, ξ, Λ) of a direct bound state, including the
/// circular closure e = 0.
pub fn poincare_map(s: &PhaseState) -> Result<PoincareState> {
    let w = raw(s)?;
    check_direct(&w)?;
    Ok(poincare_raw(s, &w, Regime::Direct))
}

fn poincare_raw(s: &PhaseState, w: &Raw, regime: Regime) -> PoincareState {
    let a = -0.5 / w.energy;
    let big_k = a.sqrt();
    let sr = w.l / big_k;
    // e sin E and e cos E
    let es = (s.q1 * s.p1 + s.q2 * s.p2) / big_k;
    let ec = 1.0 - w.r / a;
    let alpha = s.q2.atan2(s.q1);
    // mean longitude = α − (ν − E) − e sin E, written without β so that it
    // stays smooth through e = 0
    let nu_minus_ecc = 2.0 * (es / (1.0 + sr)).atan2(1.0 - ec / (1.0 + sr));
    let lam = wrap_tau(alpha - nu_minus_ecc - es);
    let f = (2.0 * big_k / (1.0 + sr)).sqrt();
    PoincareState::new(-f * w.ey, lam, f * w.ex, big_k, regime)
}

/// Inverse of [`poincare_map`] on its image.
pub fn poincare_inverse(ps: &PoincareState) -> Result<PhaseState> {
    let big_k = ps.y2;
    if !(big_k > 0.0) {
        return Err(Error::Domain(format!("Λ > 0 violated (Λ = {big_k})")));
    }
    let rho2 = ps.x1 * ps.x1 + ps.y1 * ps.y1;
    let g = big_k - 0.5 * rho2;
    if !(g > 0.0) {
        let e = (1.0 - (g / big_k).powi(2)).max(0.0).sqrt();
        return Err(Error::Domain(format!(
            "not in the image: reconstructed e = {e} (angular momentum {g} ≤ 0)"
        )));
    }
    let sr = g / big_k;
    let f = (2.0 * big_k / (1.0 + sr)).sqrt();
    let k = ps.y1 / f;
    let h = -ps.x1 / f;
    let lam = ps.x2;
    // λ = F − k sin F + h cos F
    let mut fa = lam;
    for _ in 0..100 {
        let (sf, cf) = fa.sin_cos();
        let res = fa - k * sf + h * cf - lam;
        let d = 1.0 - k * cf - h * sf;
        let step = res / d;
        fa -= step;
        if step.abs() < 1e-16 * (1.0 + fa.abs()) {
            break;
        }
    }
    let a = big_k * big_k;
    let b = 1.0 / (1.0 + sr);
    let (sf, cf) = fa.sin_cos();
    let x = a * ((1.0 - h * h * b) * cf + h * k * b * sf - k);
    let y = a * ((1.0 - k * k * b) * sf + h * k * b * cf - h);
    let r = a * (1.0 - k * cf - h * sf);
    let nf = big_k / r; // n a² / r with n = a^{-3/2}
    let vx = nf * (h * k * b * cf - (1.0 - h * h * b) * sf);
    let vy = nf * ((1.0 - k * k * b) * cf - h * k * b * sf);
    Ok(PhaseState::new(x, y, vx, vy))
}

/// Retrograde Poincaré variables φ(𝒫(q, −p)) with φ(η,λ,ξ,Λ) = (η,λ,−ξ,−Λ).
pub fn retrograde_poincare(s: &PhaseState) -> Result<PoincareState> {
    let flipped = PhaseState::new(s.q1, s.q2, -s.p1, -s.p2);
    let w = raw(&flipped)?;
    if w.l <= 0.0 {
        return Err(Error::Domain(format!(
            "retrograde chart needs L < 0 (L = {})",
            -w.l
        )));
    }
    check_direct(&w)?;
    let p = poincare_raw(&flipped, &w, Regime::Retrograde);
    Ok(PoincareState::new(p.x1, p.x2, -p.y1, -p.y2, Regime::Retrograde))
}

pub fn retrograde_inverse(ps: &PoincareState) -> Result<PhaseState> {
    let d = poincare_inverse(&PoincareState::new(ps.x1, ps.x2, -ps.y1, -ps.y2, Regime::Direct))?;
    Ok(PhaseState::new(d.q1, d.q2, -d.p1, -d.p2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymplecticMap {
    Identity,
    /// Δ∘𝒦 into (l, k, L, K) with k the mean anomaly
    KeplerDelaunay,
    /// Δ∘𝒦 with k read as the true anomaly α − β; not symplectic
    DelaunayTrueAnomaly,
    Poincare,
    RetrogradePoincare,
}

impl SymplecticMap {
    fn eval(self, s: &PhaseState) -> Result<[f64; 4]> {
        match self {
            SymplecticMap::Identity => Ok(s.to_array()),
            SymplecticMap::KeplerDelaunay => {
                let d = delaunay_map(&kepler_map(s)?, false)?;
                Ok([d.l, d.k, d.big_l, d.big_k])
            }
            SymplecticMap::DelaunayTrueAnomaly => {
                let el = kepler_map(s)?;
                let d = delaunay_map(&el, false)?;
                Ok([d.l, wrap_tau(el.alpha - el.beta), d.big_l, d.big_k])
            }
            SymplecticMap::Poincare => Ok(poincare_map(s)?.to_array()),
            SymplecticMap::RetrogradePoincare => Ok(retrograde_poincare(s)?.to_array()),
        }
    }

    fn angle_slots(self) -> [bool; 4] {
        match self {
            SymplecticMap::Identity => [false; 4],
            SymplecticMap::KeplerDelaunay | SymplecticMap::DelaunayTrueAnomaly => {
                [true, true, false, false]
            }
            SymplecticMap::Poincare | SymplecticMap::RetrogradePoincare => {
                [false, true, false, false]
            }
        }
    }

    fn check_margin(self, s: &PhaseState, delta: f64) -> Result<()> {
        if self == SymplecticMap::Identity {
            return Ok(());
        }
        let w = raw(s)?;
        let e = w.ex.hypot(w.ey);
        let l = match self {
            SymplecticMap::RetrogradePoincare => -w.l,
            _ => w.l,
        };
        let needs_ellipse = matches!(
            self,
            SymplecticMap::KeplerDelaunay | SymplecticMap::DelaunayTrueAnomaly
        );
        if !(w.energy < 0.0) || l < delta || e > 1.0 - delta || (needs_ellipse && e < delta) {
            return Err(Error::Domain(format!(
                "within {delta} of a boundary stratum (e = {e}, L = {})",
                w.l
            )));
        }
        Ok(())
    }
}

/// Standard symplectic matrix in (x₁, x₂, y₁, y₂) ordering for Σ dyᵢ∧dxᵢ.
pub fn omega_matrix() -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m[(0, 2)] = -1.0;
    m[(1, 3)] = -1.0;
    m[(2, 0)] = 1.0;
    m[(3, 1)] = 1.0;
    m
}

/// max |JᵀΩJ − Ω| for a central-difference Jacobian J with step `h`.
pub fn symplecticity_defect(map: SymplecticMap, at: &PhaseState, h: f64, delta: f64) -> Result<f64> {
    map.check_margin(at, delta)?;
    let angles = map.angle_slots();
    let base = at.to_array();
    let mut jac = Matrix4::zeros();
    for j in 0..4 {
        let mut xp = base;
        let mut xm = base;
        xp[j] += h;
        xm[j] -= h;
        let fp = map.eval(&PhaseState::from_array(xp))?;
        let fm = map.eval(&PhaseState::from_array(xm))?;
        for i in 0..4 {
            let d = if angles[i] { wrap_pi(fp[i] - fm[i]) } else { fp[i] - fm[i] };
            jac[(i, j)] = d / (2.0 * h);
        }
    }
    let om = omega_matrix();
    let diff = jac.transpose() * om * jac - om;
    Ok(diff.amax())
}

/// ω(a, b) for the standard form Σ dyᵢ∧dxᵢ.
pub fn omega(a: &Vector4<f64>, b: &Vector4<f64>) -> f64 {
    a[2] * b[0] - a[0] * b[2] + a[3] * b[1] - a[1] * b[3]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_longitude_matches_naive_formula() {
        let s = PhaseState::new(1.3, -0.4, 0.35, 0.7);
        let el = kepler_map(&s).unwrap();
        let d = delaunay_map(&el, false).unwrap();
        let p = poincare_map(&s).unwrap();
        assert!(wrap_pi(p.x2 - (d.l + d.k)).abs() < 1e-13);
        let f = (2.0 * (d.big_k - d.big_l)).sqrt();
        assert!((p.y1 - f * el.beta.cos()).abs() < 1e-13);
        assert!((p.x1 + f * el.beta.sin()).abs() < 1e-13);
    }

    #[test]
    fn wrap_ranges() {
        assert_eq!(wrap_tau(-1e-300), 0.0);
        assert!((wrap_pi(3.0 * PI) - PI).abs() < 1e-15);
        assert!((wrap_pi(-PI) - PI).abs() < 1e-15);
    }
}
