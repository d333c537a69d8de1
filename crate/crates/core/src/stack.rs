//! Modified Hamiltonians H̃ = H₁(x₁, y₁) + H̃₂(x₂, y₂) on the doubled
//! cylinder, with H₁ = ½(x₁² + y₁²) and H₂(y) = −1/(2y²) − y.
//!
//! Lower stack (c < −3/2):
//!   F = ½(y − Λ₃)² − cos(x/2) + B,  K = H₂ + f(y)(F − H₂),
//!   G = ½x² + ½(y − Λ₃)²,            K̃ = G + g(x)(K − G),
//! and H̃₂ is K̃ for x ≤ 2π, mirrored about x = 2π beyond.
//! Upper stack (−3/2 < c < 0, y < 0, level −c): the same with −H₂ in place
//! of H₂, (ν₃, D) in place of (Λ₃, B) and f decreasing.
//! Appendix stack: Ĥ₂ = H₂ + f(y)(½(y − Λ₃)² + B − H₂), free of x₂.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::bump::Step;
use crate::catalog::{circular_orbits, CircularLabel, CRITICAL_VALUE};
use crate::error::{Error, Result};
use crate::roots::bracketed_newton;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StackKind {
    /// the unmodified H₂
    Plain,
    Lower,
    Upper,
    Appendix,
}

impl StackKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StackKind::Plain => "plain",
            StackKind::Lower => "lower",
            StackKind::Upper => "upper",
            StackKind::Appendix => "appendix",
        }
    }
}

/// Stack parameters. For the upper stack `lambda3` holds ν₃ and `b` holds D.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackParams {
    pub regime: StackKind,
    pub c: f64,
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(rename = "Lambda3", alias = "nu3")]
    pub lambda3: f64,
    pub eps0: f64,
    #[serde(default = "default_eps")]
    pub eps1: f64,
    #[serde(default = "default_eps")]
    pub eps2: f64,
    #[serde(rename = "B", alias = "D")]
    pub b: f64,
}

fn default_eps() -> f64 {
    0.2
}

impl StackParams {
    /// The reference lower-energy fixture.
    pub fn reference() -> Self {
        Self {
            regime: StackKind::Lower,
            c: -2.0,
            e0: -0.1,
            lambda3: 3.0,
            eps0: 0.3,
            eps1: 0.2,
            eps2: 0.2,
            b: -4.0,
        }
    }

    pub fn reference_appendix() -> Self {
        Self { regime: StackKind::Appendix, ..Self::reference() }
    }

    /// The reference fixture above the critical value.
    pub fn reference_upper() -> Self {
        Self {
            regime: StackKind::Upper,
            c: -1.0,
            e0: -1.1,
            lambda3: -3.0,
            eps0: 0.2,
            eps1: 0.2,
            eps2: 0.2,
            b: -4.0,
        }
    }
}

/// Constants derived from the parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Derived {
    /// Kepler energy of the core circular orbit
    pub e_circ: f64,
    /// Λ₁ (or ν₁): the y₂ value of the core circular orbit
    pub lambda1: f64,
    /// Λ₂ (or ν₂): the y₂ value at Kepler energy E0
    pub lambda2: f64,
    pub lambda3: f64,
    /// strict upper bound on B (or D)
    pub b_bound: f64,
    /// the energy level of Σ for this stack
    pub level: f64,
}

/// Value, gradient and Hessian of a function of (x₂, y₂).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub v: f64,
    pub x: f64,
    pub y: f64,
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Jet2 {
    pub fn grad(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    pub fn hessian(&self) -> Matrix2<f64> {
        Matrix2::new(self.xx, self.xy, self.xy, self.yy)
    }

    /// a + w(b − a) with w = (w, w', w'') along x or along y.
    fn blend(a: &Jet2, b: &Jet2, w: (f64, f64, f64), along_x: bool) -> Jet2 {
        let d = Jet2 {
            v: b.v - a.v,
            x: b.x - a.x,
            y: b.y - a.y,
            xx: b.xx - a.xx,
            xy: b.xy - a.xy,
            yy: b.yy - a.yy,
        };
        let (s, s1, s2) = w;
        let mut out = Jet2 {
            v: a.v + s * d.v,
            x: a.x + s * d.x,
            y: a.y + s * d.y,
            xx: a.xx + s * d.xx,
            xy: a.xy + s * d.xy,
            yy: a.yy + s * d.yy,
        };
        if along_x {
            out.x += s1 * d.v;
            out.xx += 2.0 * s1 * d.x + s2 * d.v;
            out.xy += s1 * d.y;
        } else {
            out.y += s1 * d.v;
            out.yy += 2.0 * s1 * d.y + s2 * d.v;
            out.xy += s1 * d.x;
        }
        out
    }
}

/// Value and derivatives of the full H̃ on (x₁, x₂, y₁, y₂).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eval4 {
    pub value: f64,
    pub grad: [f64; 4],
    pub hess: [[f64; 4]; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelHamiltonian {
    pub params: StackParams,
    pub derived: Derived,
    /// the y-step f
    pub f: Step,
    /// the x-step g
    pub g: Step,
}

fn h2(y: f64) -> (f64, f64, f64) {
    let y2 = y * y;
    (-0.5 / y2 - y, 1.0 / (y2 * y) - 1.0, -3.0 / (y2 * y2))
}

/// Right-hand side of the bound on B: the splice term at Λ₂ + ε₀ minus 1.
pub fn b_bound(lambda2: f64, lambda3: f64, eps0: f64) -> f64 {
    let y = lambda2 + eps0;
    h2(y).0 - 0.5 * (y - lambda3).powi(2) - 1.0
}

/// The corresponding bound on D for the upper stack.
pub fn d_bound(nu2: f64, nu3: f64, eps0: f64) -> f64 {
    let y = nu2 - eps0;
    (-h2(y).0 - 0.5 * (y - nu3).powi(2) - 1.0).min(0.0)
}

fn derive(p: &StackParams) -> Result<Derived> {
    let fin = [p.c, p.e0, p.lambda3, p.eps0, p.eps1, p.eps2, p.b];
    if fin.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("params", "all parameters must be finite"));
    }
    match p.regime {
        StackKind::Lower | StackKind::Appendix | StackKind::Plain => {
            if !(p.c < CRITICAL_VALUE) {
                return Err(Error::param("c", format!("must be below −3/2 (got {})", p.c)));
            }
            let set = circular_orbits(p.c)?;
            let du = set
                .get(CircularLabel::DirectU)
                .ok_or_else(|| Error::Consistency("no direct_u circular orbit".into()))?;
            let lambda1 = (-0.5 / du.energy).sqrt();
            if !(p.e0 > du.energy && p.e0 < 0.0) {
                return Err(Error::param(
                    "E0",
                    format!("must lie in ({}, 0) (got {})", du.energy, p.e0),
                ));
            }
            let lambda2 = (-0.5 / p.e0).sqrt();
            let bb = b_bound(lambda2, p.lambda3, p.eps0);
            if p.regime != StackKind::Plain {
                if !(p.lambda3 > lambda2) {
                    return Err(Error::param(
                        "Lambda3",
                        format!("must exceed Λ₂ = {lambda2} (got {})", p.lambda3),
                    ));
                }
                if !(p.eps0 > 0.0 && p.eps0 < 0.5 * (p.lambda3 - lambda2)) {
                    return Err(Error::param(
                        "eps0",
                        format!("must lie in (0, {}) (got {})", 0.5 * (p.lambda3 - lambda2), p.eps0),
                    ));
                }
                if !(p.b < bb) {
                    return Err(Error::param(
                        "B",
                        format!("fails the bound B < {bb} by Δ = {}", p.b - bb),
                    ));
                }
            }
            Ok(Derived {
                e_circ: du.energy,
                lambda1,
                lambda2,
                lambda3: p.lambda3,
                b_bound: bb,
                level: p.c,
            })
        }
        StackKind::Upper => {
            if !(p.c > CRITICAL_VALUE && p.c < 0.0) {
                return Err(Error::param(
                    "c",
                    format!("must lie in (−3/2, 0) (got {})", p.c),
                ));
            }
            let set = circular_orbits(p.c)?;
            let ru = set
                .get(CircularLabel::RetroU)
                .ok_or_else(|| Error::Consistency("no retro_u circular orbit".into()))?;
            let nu1 = -(-0.5 / ru.energy).sqrt();
            if !(p.e0 > ru.energy && p.e0 < p.c) {
                return Err(Error::param(
                    "E0",
                    format!("must lie in ({}, {}) (got {})", ru.energy, p.c, p.e0),
                ));
            }
            let nu2 = -(-0.5 / p.e0).sqrt();
            if !(p.lambda3 < nu2) {
                return Err(Error::param(
                    "nu3",
                    format!("must be below ν₂ = {nu2} (got {})", p.lambda3),
                ));
            }
            if !(p.eps0 > 0.0 && p.eps0 < 0.5 * (nu2 - p.lambda3)) {
                return Err(Error::param(
                    "eps0",
                    format!("must lie in (0, {}) (got {})", 0.5 * (nu2 - p.lambda3), p.eps0),
                ));
            }
            let db = d_bound(nu2, p.lambda3, p.eps0);
            if !(p.b < db) {
                return Err(Error::param(
                    "D",
                    format!("fails the bound D < {db} by Δ = {}", p.b - db),
                ));
            }
            Ok(Derived {
                e_circ: ru.energy,
                lambda1: nu1,
                lambda2: nu2,
                lambda3: p.lambda3,
                b_bound: db,
                level: -p.c,
            })
        }
    }
}

impl ModelHamiltonian {
    /// Validates every parameter inequality and builds the evaluator.
    pub fn build(params: StackParams) -> Result<Self> {
        if params.regime != StackKind::Plain
            && !(params.eps1 > 0.0 && params.eps2 > 0.0 && params.eps2 < PI)
        {
            return Err(Error::param("eps1/eps2", "need eps1 > 0 and 0 < eps2 < π"));
        }
        let derived = derive(&params)?;
        Ok(Self::assemble(params, derived))
    }

    /// Builds without the B (or D) bound check, for negative controls.
    /// The remaining inequalities are still enforced.
    pub fn build_unchecked(params: StackParams) -> Result<Self> {
        let mut p = params;
        p.b = f64::MIN;
        let mut derived = derive(&p)?;
        derived.b_bound = match params.regime {
            StackKind::Upper => d_bound(derived.lambda2, params.lambda3, params.eps0),
            _ => b_bound(derived.lambda2, params.lambda3, params.eps0),
        };
        Ok(Self::assemble(params, derived))
    }

    fn assemble(params: StackParams, derived: Derived) -> Self {
        let l2 = derived.lambda2;
        let e = params.eps0;
        let f = match params.regime {
            StackKind::Upper => Step::down(l2 - 2.0 * e, l2 - e),
            _ => Step::up(l2 + e, l2 + 2.0 * e),
        };
        let g = Step::up(-2.0 * params.eps1, -params.eps1);
        Self { params, derived, f, g }
    }

    pub fn kind(&self) -> StackKind {
        self.params.regime
    }

    pub fn level(&self) -> f64 {
        self.derived.level
    }

    /// y₂ of the critical line (Λ₃ or ν₃).
    pub fn center(&self) -> f64 {
        self.params.lambda3
    }

    /// Whether x₂ is periodic mod 2π (appendix and plain) rather than a
    /// coordinate on the line with the 4π mirror.
    pub fn is_periodic(&self) -> bool {
        matches!(self.kind(), StackKind::Appendix | StackKind::Plain)
    }

    fn check_y(&self, y: f64) -> Result<()> {
        let ok = match self.kind() {
            StackKind::Upper => y < 0.0,
            _ => y > 0.0,
        };
        if ok && y.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!("y2 = {y} outside the stack's half-line")))
        }
    }

    /// A(y): H₂, or −H₂ for the upper stack.
    fn base(&self, y: f64) -> Jet2 {
        let (v, d1, d2) = h2(y);
        let s = if self.kind() == StackKind::Upper { -1.0 } else { 1.0 };
        Jet2 { v: s * v, y: s * d1, yy: s * d2, ..Jet2::default() }
    }

    /// F, U or V: ½(y − center)² − cos(x/2) + B, without the cosine for the
    /// appendix.
    fn target(&self, x: f64, y: f64) -> Jet2 {
        let dy = y - self.center();
        let mut j = Jet2 { v: 0.5 * dy * dy + self.params.b, y: dy, yy: 1.0, ..Jet2::default() };
        if self.kind() != StackKind::Appendix {
            let (s, c) = (0.5 * x).sin_cos();
            j.v -= c;
            j.x = 0.5 * s;
            j.xx = 0.25 * c;
        }
        j
    }

    /// K (or V) before the x-splice.
    pub fn k_jet(&self, x: f64, y: f64) -> Result<Jet2> {
        self.check_y(y)?;
        let a = self.base(y);
        if self.kind() == StackKind::Plain {
            return Ok(a);
        }
        let w = self.f.eval(y);
        if w.0 == 0.0 && w.1 == 0.0 {
            return Ok(a);
        }
        let b = self.target(x, y);
        Ok(Jet2::blend(&a, &b, w, false))
    }

    /// H̃₂ with value, gradient and Hessian.
    pub fn h2_jet(&self, x: f64, y: f64) -> Result<Jet2> {
        if self.is_periodic() {
            return self.k_jet(x, y);
        }
        let mirrored = x > TAU;
        let xm = if mirrored { 2.0 * TAU - x } else { x };
        let k = self.k_jet(xm, y)?;
        let w = self.g.eval(xm);
        let mut j = if w.0 == 1.0 && w.1 == 0.0 {
            k
        } else {
            let dy = y - self.center();
            let gj = Jet2 {
                v: 0.5 * xm * xm + 0.5 * dy * dy,
                x: xm,
                y: dy,
                xx: 1.0,
                xy: 0.0,
                yy: 1.0,
            };
            Jet2::blend(&gj, &k, w, true)
        };
        if mirrored {
            j.x = -j.x;
            j.xy = -j.xy;
        }
        Ok(j)
    }

    pub fn h2_value(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.h2_jet(x, y)?.v)
    }

    /// Full H̃ at (x₁, x₂, y₁, y₂).
    pub fn eval(&self, p: &[f64; 4]) -> Result<Eval4> {
        let j = self.h2_jet(p[1], p[3])?;
        let mut hess = [[0.0; 4]; 4];
        hess[0][0] = 1.0;
        hess[2][2] = 1.0;
        hess[1][1] = j.xx;
        hess[1][3] = j.xy;
        hess[3][1] = j.xy;
        hess[3][3] = j.yy;
        Ok(Eval4 {
            value: 0.5 * (p[0] * p[0] + p[2] * p[2]) + j.v,
            grad: [p[0], j.x, p[2], j.y],
            hess,
        })
    }

    pub fn value(&self, p: &[f64; 4]) -> Result<f64> {
        Ok(0.5 * (p[0] * p[0] + p[2] * p[2]) + self.h2_value(p[1], p[3])?)
    }

    /// X_H = (H_{y₁}, H_{y₂}, −H_{x₁}, −H_{x₂}).
    pub fn hamiltonian_field(&self, p: &[f64; 4]) -> Result<[f64; 4]> {
        let j = self.h2_jet(p[1], p[3])?;
        Ok([p[2], j.y, -p[0], -j.x])
    }

    /// Largest y₂ on Σ above x₂ (lower/appendix), or smallest for the
    /// upper stack: the root beyond the critical line of K(x₂, ·) = level.
    pub fn lambda_max(&self, x2: f64) -> Result<f64> {
        let level = self.level();
        let x = if self.is_periodic() { x2 } else { x2.rem_euclid(2.0 * TAU) };
        let upper = self.kind() == StackKind::Upper;
        let c0 = self.center();
        let dir = if upper { -1.0 } else { 1.0 };
        let k = |y: f64| self.k_jet(x, y).map(|j| j.v - level).unwrap_or(f64::NAN);
        let kd = |y: f64| self.k_jet(x, y).map(|j| j.y).unwrap_or(f64::NAN);
        let mut far = c0 + dir;
        let mut n = 0;
        while k(far) <= 0.0 {
            far = c0 + (far - c0) * 2.0;
            n += 1;
            if n > 60 {
                return Err(Error::Root("K never reaches the level".into()));
            }
        }
        if !(k(c0) < 0.0) {
            return Err(Error::Root(format!("level not above K at the critical line (x₂ = {x2})")));
        }
        bracketed_newton(k, kd, c0, far, 1e-15)
    }

    /// The involution ρ(x₁, x₂, y₁, y₂) = (−x₁, 4π − x₂, y₁, y₂).
    pub fn rho(p: &[f64; 4]) -> [f64; 4] {
        [-p[0], 2.0 * TAU - p[1], p[2], p[3]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Minimum,
    Saddle,
    Maximum,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub x2: f64,
    pub y2: f64,
    pub value: f64,
    pub morse_index: u8,
    pub class: Classification,
}

/// A line {y₂ = const} of critical points (only where H̃₂ is locally free
/// of x₂).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalLine {
    pub y2: f64,
    pub value: f64,
    pub x2_min: f64,
    pub x2_max: f64,
    pub on_level: bool,
    /// whether the line lies in the region y₂ ≥ Λ₁ (or ≤ ν₁) swept by Σ
    pub meets_sigma_window: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalPointReport {
    pub points: Vec<CriticalPoint>,
    pub lines: Vec<CriticalLine>,
    pub seeds: usize,
    pub converged: usize,
    /// [x_lo, x_hi, y_lo, y_hi] of the seeded box
    pub search_box: [f64; 4],
}

fn classify(h: &Matrix2<f64>) -> (u8, Classification) {
    let ev = h.symmetric_eigen().eigenvalues;
    let tol = 1e-8;
    if ev.iter().any(|e| e.abs() <= tol) {
        let idx = ev.iter().filter(|e| **e < -tol).count() as u8;
        return (idx, Classification::Degenerate);
    }
    let idx = ev.iter().filter(|e| **e < 0.0).count() as u8;
    let class = match idx {
        0 => Classification::Minimum,
        1 => Classification::Saddle,
        _ => Classification::Maximum,
    };
    (idx, class)
}

impl ModelHamiltonian {
    /// How far below x₂ = 0 (and beyond 4π) the component Σ can reach: the
    /// ε₁ splice plus the disc ½x₂² ≤ level where only G (or W) is left.
    pub fn x2_margin(&self) -> f64 {
        3.0 * self.params.eps1 + (2.0 * self.level()).max(0.0).sqrt()
    }

    fn search_box(&self) -> [f64; 4] {
        let m = self.x2_margin();
        match self.kind() {
            StackKind::Upper => [-m, 2.0 * TAU + m, self.center() - 3.0, -0.3],
            StackKind::Appendix | StackKind::Plain => [0.0, TAU, 0.5, self.center().max(1.0) + 3.0],
            StackKind::Lower => [-m, 2.0 * TAU + m, 0.5, self.center() + 3.0],
        }
    }

    /// Grid-seeded Newton search for zeros of ∇H̃₂ in the standard box.
    pub fn critical_points(&self) -> Result<CriticalPointReport> {
        self.critical_points_in(self.search_box(), 48, 32)
    }

    pub fn critical_points_in(&self, bx: [f64; 4], nx: usize, ny: usize) -> Result<CriticalPointReport> {
        let mut pts: Vec<CriticalPoint> = Vec::new();
        let mut line_pts: Vec<(f64, f64, f64)> = Vec::new();
        let mut converged = 0;
        for i in 0..nx {
            for j in 0..ny {
                let x0 = bx[0] + (bx[1] - bx[0]) * (i as f64 + 0.5) / nx as f64;
                let y0 = bx[2] + (bx[3] - bx[2]) * (j as f64 + 0.5) / ny as f64;
                let Some((x, y)) = self.newton_crit(x0, y0, &bx) else {
                    continue;
                };
                converged += 1;
                let jet = self.h2_jet(x, y)?;
                let (idx, class) = classify(&jet.hessian());
                if class == Classification::Degenerate {
                    line_pts.push((x, y, jet.v));
                    continue;
                }
                if !pts.iter().any(|p| (p.x2 - x).abs() < 1e-6 && (p.y2 - y).abs() < 1e-6) {
                    pts.push(CriticalPoint { x2: x, y2: y, value: jet.v, morse_index: idx, class });
                }
            }
        }
        pts.sort_by(|a, b| a.x2.total_cmp(&b.x2).then(a.y2.total_cmp(&b.y2)));
        let mut lines: Vec<CriticalLine> = Vec::new();
        for (x, y, v) in line_pts {
            if let Some(l) = lines.iter_mut().find(|l| (l.y2 - y).abs() < 1e-6) {
                l.x2_min = l.x2_min.min(x);
                l.x2_max = l.x2_max.max(x);
            } else {
                let meets = match self.kind() {
                    StackKind::Upper => y <= self.derived.lambda1,
                    _ => y >= self.derived.lambda1,
                };
                lines.push(CriticalLine {
                    y2: y,
                    value: v,
                    x2_min: x,
                    x2_max: x,
                    on_level: (v - self.level()).abs() < 1e-9,
                    meets_sigma_window: meets,
                });
            }
        }
        Ok(CriticalPointReport {
            points: pts,
            lines,
            seeds: nx * ny,
            converged,
            search_box: bx,
        })
    }

    fn newton_crit(&self, mut x: f64, mut y: f64, bx: &[f64; 4]) -> Option<(f64, f64)> {
        let periodic = self.is_periodic();
        for _ in 0..80 {
            let j = self.h2_jet(x, y).ok()?;
            let g = j.grad();
            if g.amax() < 1e-13 {
                return Some((x, y));
            }
            // pseudo-inverse so that Newton also settles onto critical lines
            let svd = j.hessian().svd(true, true);
            let step = svd.solve(&g, 1e-10).ok()?;
            let scale = (1.0f64).min(0.5 / step.amax().max(1e-300));
            x -= scale * step[0];
            y -= scale * step[1];
            if periodic {
                x = x.rem_euclid(TAU);
            }
            let margin = 0.5;
            if x < bx[0] - margin || x > bx[1] + margin || y < bx[2] - margin || y > bx[3] + margin {
                return None;
            }
            if self.check_y(y).is_err() {
                return None;
            }
        }
        let j = self.h2_jet(x, y).ok()?;
        (j.grad().amax() < 1e-10).then_some((x, y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignViolation {
    pub x2: f64,
    pub y2: f64,
    pub dy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SignReport {
    pub grid: (usize, usize),
    pub checked: usize,
    pub violations: Vec<SignViolation>,
    /// max |∂_{y₂}H̃₂| along the critical line y₂ = center
    pub center_row_max: f64,
    pub y_range: (f64, f64),
}

impl SignReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty() && self.center_row_max < 1e-10
    }
}

impl ModelHamiltonian {
    /// Checks sign(∂_{y₂}H̃₂) = sign(y₂ − center) on an `nx`×`ny` grid over
    /// the x₂ window and the y₂ range from `margin` inside Λ₁ (or ν₁) out to
    /// one unit beyond the farthest point of Σ.
    pub fn sign_certificates(&self, nx: usize, ny: usize, margin: f64) -> Result<SignReport> {
        let c0 = self.center();
        let (xa, xb) = if self.is_periodic() {
            (0.0, TAU)
        } else {
            let m = self.x2_margin();
            (-m, 2.0 * TAU + m)
        };
        let far = self.lambda_max(0.0)?.max(self.lambda_max(TAU)?);
        let (ya, yb) = match self.kind() {
            StackKind::Upper => (far - 1.0, (self.derived.lambda1 + margin).min(-1e-3)),
            _ => (self.derived.lambda1 - margin, far + 1.0),
        };
        let mut violations = Vec::new();
        let mut checked = 0;
        for i in 0..nx {
            let x = xa + (xb - xa) * i as f64 / (nx - 1).max(1) as f64;
            for j in 0..ny {
                let y = ya + (yb - ya) * j as f64 / (ny - 1).max(1) as f64;
                if (y - c0).abs() < 1e-9 {
                    continue;
                }
                let d = self.h2_jet(x, y)?.y;
                checked += 1;
                if !(d * (y - c0) > 0.0) {
                    violations.push(SignViolation { x2: x, y2: y, dy: d });
                }
            }
        }
        let mut center_row_max: f64 = 0.0;
        for i in 0..nx {
            let x = xa + (xb - xa) * i as f64 / (nx - 1).max(1) as f64;
            center_row_max = center_row_max.max(self.h2_jet(x, c0)?.y.abs());
        }
        Ok(SignReport { grid: (nx, ny), checked, violations, center_row_max, y_range: (ya, yb) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jets_match_differences() {
        let m = ModelHamiltonian::build(StackParams::reference()).unwrap();
        let h = 1e-5;
        for &(x, y) in &[(-0.3, 2.7), (-0.25, 3.1), (1.0, 2.85), (8.0, 2.9), (12.7, 4.0)] {
            let j = m.h2_jet(x, y).unwrap();
            let jx = |x: f64, y: f64| m.h2_jet(x, y).unwrap();
            let fx = (jx(x + h, y).v - jx(x - h, y).v) / (2.0 * h);
            let fy = (jx(x, y + h).v - jx(x, y - h).v) / (2.0 * h);
            let fxx = (jx(x + h, y).x - jx(x - h, y).x) / (2.0 * h);
            let fxy = (jx(x, y + h).x - jx(x, y - h).x) / (2.0 * h);
            let fyy = (jx(x, y + h).y - jx(x, y - h).y) / (2.0 * h);
            for (a, b) in [(j.x, fx), (j.y, fy), (j.xx, fxx), (j.xy, fxy), (j.yy, fyy)] {
                assert!((a - b).abs() < 1e-6 * (1.0 + b.abs()), "({x},{y}) {a} vs {b}");
            }
        }
    }
}
