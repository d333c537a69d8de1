//! Rotating-frame Cartesian dynamics.
//!
//! H(q, p) = ½|p|² − 1/|q| − p₂q₁ + p₁q₂ = E − L, with Kepler energy
//! E = ½|p|² − 1/|q| and angular momentum L = q₁p₂ − q₂p₁.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{Control, Dopri5};
use crate::roots::bracketed_newton;

pub const COLLISION_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub q1: f64,
    pub q2: f64,
    pub p1: f64,
    pub p2: f64,
}

impl PhaseState {
    pub const fn new(q1: f64, q2: f64, p1: f64, p2: f64) -> Self {
        Self { q1, q2, p1, p2 }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.q1, self.q2, self.p1, self.p2]
    }

    pub fn radius(&self) -> f64 {
        self.q1.hypot(self.q2)
    }

    /// Multiplies q₁+iq₂ and p₁+ip₂ by exp(iθ).
    pub fn rotated(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(
            c * self.q1 - s * self.q2,
            s * self.q1 + c * self.q2,
            c * self.p1 - s * self.p2,
            s * self.p1 + c * self.p2,
        )
    }

    /// The reflection (q₁, −q₂, −p₁, p₂). It preserves H and reverses the
    /// symplectic form; used here only as a cross-check.
    pub fn reflected(&self) -> Self {
        Self::new(self.q1, -self.q2, -self.p1, self.p2)
    }

    pub fn kepler_energy_unchecked(&self) -> f64 {
        0.5 * (self.p1 * self.p1 + self.p2 * self.p2) - 1.0 / self.radius()
    }

    pub fn angular_momentum(&self) -> f64 {
        self.q1 * self.p2 - self.q2 * self.p1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralSet {
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "L")]
    pub l: f64,
    /// `None` when e² = 2EL² + 1 is negative beyond round-off.
    pub e: Option<f64>,
}

fn checked_radius(s: &PhaseState, floor: f64) -> Result<f64> {
    let r = s.radius();
    if !(r >= floor) {
        return Err(Error::Collision { radius: r, floor });
    }
    Ok(r)
}

pub fn eval_hamiltonian(s: &PhaseState) -> Result<f64> {
    let r = checked_radius(s, COLLISION_FLOOR)?;
    Ok(0.5 * (s.p1 * s.p1 + s.p2 * s.p2) - 1.0 / r - s.p2 * s.q1 + s.p1 * s.q2)
}

/// e² from (E, L); tiny negative values produced by cancellation are
/// clamped to zero.
pub fn eccentricity(energy: f64, l: f64) -> Option<f64> {
    let e2 = 2.0 * energy * l * l + 1.0;
    if e2 >= 0.0 {
        Some(e2.sqrt())
    } else if e2 > -1e-13 {
        Some(0.0)
    } else {
        None
    }
}

pub fn eval_integrals(s: &PhaseState) -> Result<IntegralSet> {
    let r = checked_radius(s, COLLISION_FLOOR)?;
    let energy = 0.5 * (s.p1 * s.p1 + s.p2 * s.p2) - 1.0 / r;
    let l = s.angular_momentum();
    Ok(IntegralSet {
        h: energy - l,
        energy,
        l,
        e: eccentricity(energy, l),
    })
}

pub fn vector_field(s: &PhaseState) -> Result<[f64; 4]> {
    let r = checked_radius(s, COLLISION_FLOOR)?;
    let r3 = r * r * r;
    Ok([
        s.p1 + s.q2,
        s.p2 - s.q1,
        -s.q1 / r3 + s.p2,
        -s.q2 / r3 - s.p1,
    ])
}

/// Inertial Kepler flow, generated by E alone.
pub fn kepler_vector_field(s: &PhaseState) -> Result<[f64; 4]> {
    let r = checked_radius(s, COLLISION_FLOOR)?;
    let r3 = r * r * r;
    Ok([s.p1, s.p2, -s.q1 / r3, -s.q2 / r3])
}

fn rotating_rhs(floor: f64) -> impl FnMut(f64, &[f64], &mut [f64]) -> Result<()> {
    move |t, y, dy| {
        let r = y[0].hypot(y[1]);
        if !(r >= floor) {
            return Err(Error::CollisionCrossing { time: t });
        }
        let r3 = r * r * r;
        dy[0] = y[2] + y[1];
        dy[1] = y[3] - y[0];
        dy[2] = -y[0] / r3 + y[3];
        dy[3] = -y[1] / r3 - y[2];
        Ok(())
    }
}

fn inertial_rhs(floor: f64) -> impl FnMut(f64, &[f64], &mut [f64]) -> Result<()> {
    move |t, y, dy| {
        let r = y[0].hypot(y[1]);
        if !(r >= floor) {
            return Err(Error::CollisionCrossing { time: t });
        }
        let r3 = r * r * r;
        dy[0] = y[2];
        dy[1] = y[3];
        dy[2] = -y[0] / r3;
        dy[3] = -y[1] / r3;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    pub rtol: f64,
    pub atol: f64,
    pub collision_floor: f64,
    /// Number of tenfold tolerance tightenings allowed when the integral
    /// drift exceeds 100·rtol.
    pub retries: u32,
}

impl FlowOptions {
    pub fn from_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol * 1e-2,
            collision_floor: COLLISION_FLOOR,
            retries: 3,
        }
    }
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            collision_floor: COLLISION_FLOOR,
            retries: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IntegratorReport {
    pub steps: usize,
    pub rejected: usize,
    pub evals: usize,
    /// max over the trajectory of |ΔH|, |ΔE| and |ΔL|
    pub max_defect: f64,
    pub rtol_used: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
    pub report: IntegratorReport,
}

fn integrals_raw(y: &[f64]) -> (f64, f64, f64) {
    let r = y[0].hypot(y[1]);
    let e = 0.5 * (y[2] * y[2] + y[3] * y[3]) - 1.0 / r;
    let l = y[0] * y[3] - y[1] * y[2];
    (e - l, e, l)
}

fn flow_once(s: &PhaseState, t_final: f64, opts: &FlowOptions) -> Result<Trajectory> {
    if !(opts.rtol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    checked_radius(s, opts.collision_floor)?;
    let y0 = s.to_array();
    let (h0, e0, l0) = integrals_raw(&y0);
    let mut times = vec![0.0];
    let mut states = vec![*s];
    let mut drift: f64 = 0.0;
    let solver = Dopri5::new(opts.rtol, opts.atol);
    let out = solver.solve(rotating_rhs(opts.collision_floor), 0.0, &y0, t_final, |st| {
        let (h, e, l) = integrals_raw(st.y1);
        drift = drift.max((h - h0).abs()).max((e - e0).abs()).max((l - l0).abs());
        times.push(st.t1);
        states.push(PhaseState::new(st.y1[0], st.y1[1], st.y1[2], st.y1[3]));
        Control::Continue
    })?;
    Ok(Trajectory {
        times,
        states,
        report: IntegratorReport {
            steps: out.steps,
            rejected: out.rejected,
            evals: out.evals,
            max_defect: drift,
            rtol_used: opts.rtol,
        },
    })
}

/// Integrates the rotating-frame flow to `t_final` with relative tolerance
/// `tol`; every accepted step is recorded.
pub fn flow(s: &PhaseState, t_final: f64, tol: f64) -> Result<Trajectory> {
    flow_with(s, t_final, &FlowOptions::from_tol(tol))
}

/// As [`flow`], with explicit options. The integral drift is held to
/// 100·rtol of the *requested* tolerance by tightening the integrator if
/// needed.
pub fn flow_with(s: &PhaseState, t_final: f64, opts: &FlowOptions) -> Result<Trajectory> {
    let budget = 100.0 * opts.rtol;
    let mut o = *opts;
    let mut last = None;
    for _ in 0..=opts.retries {
        let tr = flow_once(s, t_final, &o)?;
        if tr.report.max_defect <= budget {
            return Ok(tr);
        }
        last = Some(tr.report.max_defect);
        o.rtol *= 0.1;
        o.atol *= 0.1;
    }
    Err(Error::DriftBudget {
        drift: last.unwrap_or(f64::NAN),
        budget,
    })
}

/// End state of the rotating flow after time `t` (no drift enforcement).
pub fn propagate(s: &PhaseState, t: f64, rtol: f64, atol: f64) -> Result<PhaseState> {
    checked_radius(s, COLLISION_FLOOR)?;
    let out = Dopri5::new(rtol, atol).solve(
        rotating_rhs(COLLISION_FLOOR),
        0.0,
        &s.to_array(),
        t,
        |_| Control::Continue,
    )?;
    Ok(PhaseState::new(out.y[0], out.y[1], out.y[2], out.y[3]))
}

/// Integrates the rotating flow and the inertial Kepler flow from the same
/// initial condition and compares γ(t) with exp(−it)·α(t) on a uniform time
/// grid; returns the largest Euclidean discrepancy.
pub fn inertial_factorization_defect(s: &PhaseState, t_final: f64) -> Result<f64> {
    checked_radius(s, COLLISION_FLOOR)?;
    if t_final == 0.0 {
        return Ok(0.0);
    }
    let n = ((t_final.abs() * 20.0).ceil() as usize).max(200);
    let times: Vec<f64> = (1..=n).map(|i| t_final * i as f64 / n as f64).collect();
    let solver = Dopri5::new(1e-12, 1e-14);
    let y0 = s.to_array();
    let rot = solver.solve_at(rotating_rhs(COLLISION_FLOOR), 0.0, &y0, &times)?;
    let ine = solver.solve_at(inertial_rhs(COLLISION_FLOOR), 0.0, &y0, &times)?;
    let mut worst: f64 = 0.0;
    for ((t, g), a) in times.iter().zip(&rot).zip(&ine) {
        let alpha = PhaseState::new(a[0], a[1], a[2], a[3]).rotated(-t);
        let d = ((g[0] - alpha.q1).powi(2)
            + (g[1] - alpha.q2).powi(2)
            + (g[2] - alpha.p1).powi(2)
            + (g[3] - alpha.p2).powi(2))
        .sqrt();
        worst = worst.max(d);
    }
    Ok(worst)
}

/// f(r) = −1/r − r²/2, the rotating-frame potential on circles p = (−q₂, q₁).
pub fn effective_potential(r: f64) -> f64 {
    -1.0 / r - 0.5 * r * r
}

/// Maximizes the effective potential on `[lo, hi]` through the zero of
/// f′(r) = 1/r² − r; returns (argmax, max).
pub fn maximize_effective_potential(lo: f64, hi: f64) -> Result<(f64, f64)> {
    let r = bracketed_newton(
        |r| 1.0 / (r * r) - r,
        |r| -2.0 / (r * r * r) - 1.0,
        lo,
        hi,
        1e-15,
    )?;
    let mut best = (r, effective_potential(r));
    for x in [lo, hi] {
        let v = effective_potential(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_circle_is_stationary() {
        for i in 0..32 {
            let th = i as f64 * std::f64::consts::TAU / 32.0;
            let s = PhaseState::new(th.cos(), th.sin(), -th.sin(), th.cos());
            let v = vector_field(&s).unwrap();
            assert!(v.iter().all(|x| x.abs() < 1e-12), "{v:?}");
        }
    }

    #[test]
    fn collision_is_rejected() {
        let s = PhaseState::new(1e-8, 0.0, 0.0, 1.0);
        assert!(matches!(eval_hamiltonian(&s), Err(Error::Collision { .. })));
    }

    #[test]
    fn reflection_preserves_h() {
        let s = PhaseState::new(0.7, -1.3, 0.2, 0.45);
        let a = eval_hamiltonian(&s).unwrap();
        let b = eval_hamiltonian(&s.reflected()).unwrap();
        assert!((a - b).abs() < 1e-14);
    }
}
