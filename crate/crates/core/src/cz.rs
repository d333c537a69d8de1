//! Conley-Zehnder indices from the frame Xⱼ = Aⱼ∇H̃ and the transverse
//! linearised flow written in that frame.

use std::f64::consts::TAU;

use nalgebra::Matrix2;
use serde::Serialize;

use crate::contact::{rho, rho_linear, Contact};
use crate::error::{Error, Result};
use crate::ode::{Control, Dopri5};
use crate::orbits::{OrbitRecord, ORBIT_ATOL, ORBIT_RTOL};
use crate::stack::ModelHamiltonian;

/// Tolerance for calling an endpoint of the rotation interval degenerate,
/// and the shift ε in I_ε = I − ε.
pub const CZ_EPS: f64 = 1e-6;

/// Number of sampled initial angles in the interval extraction.
pub const ANGLE_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FrameData {
    pub x: [[f64; 4]; 3],
    /// X₁, X₂ projected to ξ along the Reeb field
    pub bar: [[f64; 4]; 2],
    pub kappa: [[f64; 3]; 3],
    /// |∇H̃|², the common squared length of X₁, X₂, X₃
    pub norm2: f64,
}

fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// X₁ = A₁g, X₂ = A₂g, X₃ = A₃g for g = ∇H̃ = (g₁, g₂, g₃, g₄) in
/// (x₁, x₂, y₁, y₂) order.
pub fn frame_vectors(g: &[f64; 4]) -> [[f64; 4]; 3] {
    [
        [g[3], -g[2], g[1], -g[0]],
        [g[1], -g[0], -g[3], g[2]],
        [g[2], g[3], -g[0], -g[1]],
    ]
}

fn kappa(model: &ModelHamiltonian, p: &[f64; 4]) -> Result<([[f64; 4]; 3], [[f64; 3]; 3], f64)> {
    let e = model.eval(p)?;
    let n2 = dot(&e.grad, &e.grad);
    if !(n2 > 0.0) {
        return Err(Error::Degenerate(format!("∇H̃ vanishes at {p:?}")));
    }
    let x = frame_vectors(&e.grad);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        let mut hx = [0.0; 4];
        for r in 0..4 {
            hx[r] = (0..4).map(|c| e.hess[r][c] * x[i][c]).sum();
        }
        for j in 0..3 {
            k[i][j] = dot(&hx, &x[j]);
        }
    }
    Ok((x, k, n2))
}

pub fn frame(contact: &Contact, p: &[f64; 4]) -> Result<FrameData> {
    let (x, k, n2) = kappa(&contact.model, p)?;
    let r = contact.reeb(p)?;
    let mut bar = [[0.0; 4]; 2];
    for i in 0..2 {
        let l = contact.lambda(p, &x[i]);
        for c in 0..4 {
            bar[i][c] = x[i][c] - l * r[c];
        }
    }
    Ok(FrameData { x, bar, kappa: k, norm2: n2 })
}

/// The 2×2 matrix of the transverse linearised flow in the (X₁, X₂)
/// coordinates. The frame vectors have length |∇H̃|, hence the division.
pub fn linearized_matrix(model: &ModelHamiltonian, p: &[f64; 4]) -> Result<Matrix2<f64>> {
    let (_, k, n2) = kappa(model, p)?;
    Ok(Matrix2::new(
        -k[0][1],
        -k[1][1] - k[2][2],
        k[0][0] + k[2][2],
        k[0][1],
    ) / n2)
}

/// Largest |ρ_*Xⱼ(p) − Xⱼ(ρp)| over j.
pub fn rho_frame_defect(model: &ModelHamiltonian, p: &[f64; 4]) -> Result<f64> {
    let a = frame_vectors(&model.eval(p)?.grad);
    let b = frame_vectors(&model.eval(&rho(p))?.grad);
    let mut worst: f64 = 0.0;
    for j in 0..3 {
        let pa = rho_linear(&a[j]);
        for c in 0..4 {
            worst = worst.max((pa[c] - b[j][c]).abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct RotationInterval {
    pub lo: f64,
    pub hi: f64,
    pub degenerate: bool,
    /// fundamental matrix at the period, row-major
    pub monodromy: [f64; 4],
    /// Δθ of the tracked initial angles jπ/n_init
    pub tracked: Vec<f64>,
}

impl RotationInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// θ̇ for the direction (cos θ, sin θ) under α̇ = Mα.
fn angle_rate(m: &Matrix2<f64>, th: f64) -> f64 {
    let (s, c) = th.sin_cos();
    m[(1, 0)] * c * c + (m[(1, 1)] - m[(0, 0)]) * s * c - m[(0, 1)] * s * s
}

fn near_2pi_z(v: f64) -> bool {
    let k = (v / TAU).round();
    (v - k * TAU).abs() <= CZ_EPS
}

/// Integrates the orbit with the fundamental matrix and `n_init` angles,
/// then takes [min, max] of Δθ over sampled and critical initial angles.
pub fn rotation_interval(model: &ModelHamiltonian, orbit: &OrbitRecord, n_init: usize) -> Result<RotationInterval> {
    rotation_interval_with(model, &orbit.start, orbit.period_h, n_init, |_, m| m)
}

/// As `rotation_interval` with a hook that can modify the linearised
/// matrix along the way (used for perturbation checks).
pub fn rotation_interval_with<H>(
    model: &ModelHamiltonian,
    start: &[f64; 4],
    period: f64,
    n_init: usize,
    hook: H,
) -> Result<RotationInterval>
where
    H: Fn(f64, Matrix2<f64>) -> Matrix2<f64>,
{
    let n_init = n_init.max(1);
    let th0: Vec<f64> = (0..n_init).map(|j| std::f64::consts::PI * j as f64 / n_init as f64).collect();
    let mut y0 = vec![0.0; 8 + n_init];
    y0[..4].copy_from_slice(start);
    y0[4] = 1.0;
    y0[7] = 1.0;
    y0[8..].copy_from_slice(&th0);
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let p = [y[0], y[1], y[2], y[3]];
        let f = model.hamiltonian_field(&p)?;
        dy[..4].copy_from_slice(&f);
        let m = hook(t, linearized_matrix(model, &p)?);
        let phi = Matrix2::new(y[4], y[5], y[6], y[7]);
        let d = m * phi;
        dy[4] = d[(0, 0)];
        dy[5] = d[(0, 1)];
        dy[6] = d[(1, 0)];
        dy[7] = d[(1, 1)];
        for k in 8..y.len() {
            dy[k] = angle_rate(&m, y[k]);
        }
        Ok(())
    };
    let out = Dopri5::new(ORBIT_RTOL, ORBIT_ATOL).solve(rhs, 0.0, &y0, period, |_| Control::Continue)?;
    let y = out.y;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Integrator("linearised flow blew up".into()));
    }
    let phi = Matrix2::new(y[4], y[5], y[6], y[7]);
    let tracked: Vec<f64> = (0..n_init).map(|j| y[8 + j] - th0[j]).collect();

    let mut angles: Vec<f64> = (0..ANGLE_SAMPLES)
        .map(|k| std::f64::consts::PI * k as f64 / ANGLE_SAMPLES as f64)
        .collect();
    // stationary points of Δθ: |Φv|² = det Φ
    let s = phi.transpose() * phi;
    let (a, b, d) = (s[(0, 0)], s[(0, 1)], s[(1, 1)]);
    let aa = 0.5 * (a - d);
    let cc = phi.determinant() - 0.5 * (a + d);
    let rr = aa.hypot(b);
    if rr > 0.0 && cc.abs() <= rr {
        let psi = b.atan2(aa);
        let w = (cc / rr).acos();
        angles.push(0.5 * (psi + w));
        angles.push(0.5 * (psi - w));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for phi0 in angles {
        let phi0 = phi0.rem_euclid(std::f64::consts::PI);
        let v = phi * nalgebra::Vector2::new(phi0.cos(), phi0.sin());
        let raw = v[1].atan2(v[0]) - phi0;
        let j = ((phi0 / std::f64::consts::PI * n_init as f64).round() as usize) % n_init;
        let reference = tracked[j];
        let lifted = raw + TAU * ((reference - raw) / TAU).round();
        lo = lo.min(lifted);
        hi = hi.max(lifted);
    }
    for &t in &tracked {
        if t < lo - 1e-7 || t > hi + 1e-7 {
            return Err(Error::Consistency(format!(
                "tracked angle {t} outside sampled interval [{lo}, {hi}]"
            )));
        }
        lo = lo.min(t);
        hi = hi.max(t);
    }
    if hi - lo >= std::f64::consts::PI {
        return Err(Error::Consistency(format!("rotation interval width {} ≥ π", hi - lo)));
    }
    Ok(RotationInterval {
        lo,
        hi,
        degenerate: near_2pi_z(lo) || near_2pi_z(hi),
        monodromy: [phi[(0, 0)], phi[(0, 1)], phi[(1, 0)], phi[(1, 1)]],
        tracked,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CzIndex {
    pub value: i64,
    pub degenerate: bool,
}

/// 2k if 2kπ is interior to I − ε, otherwise 2k+1 with I − ε inside
/// (2kπ, 2(k+1)π).
pub fn cz_index(iv: &RotationInterval) -> CzIndex {
    let (lo, hi) = (iv.lo - CZ_EPS, iv.hi - CZ_EPS);
    let k_lo = (lo / TAU).floor();
    let k_hi = (hi / TAU).floor();
    let value = if k_hi > k_lo && (k_hi * TAU) > lo && (k_hi * TAU) < hi {
        2 * k_hi as i64
    } else {
        2 * k_lo as i64 + 1
    };
    CzIndex { value, degenerate: iv.degenerate }
}

/// Runs the interval extraction and records index and degeneracy on the
/// orbit.
pub fn annotate(model: &ModelHamiltonian, orbit: &mut OrbitRecord, n_init: usize) -> Result<RotationInterval> {
    let iv = rotation_interval(model, orbit, n_init)?;
    let idx = cz_index(&iv);
    orbit.cz = Some(idx.value);
    orbit.degenerate = Some(idx.degenerate);
    Ok(iv)
}

/// Winding number of t ↦ (H̃_{y₂}, H̃_{x₂}) along the orbit, counted from
/// `n` uniform samples.
pub fn winding_y1(model: &ModelHamiltonian, orbit: &OrbitRecord, n: usize) -> Result<i64> {
    let pts = crate::orbits::sample_orbit(model, &orbit.start, orbit.period_h, n)?;
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    for p in &pts {
        let j = model.h2_jet(p[1], p[3])?;
        let a = j.x.atan2(j.y);
        if let Some(q) = prev {
            total += crate::coords::wrap_pi(a - q);
        }
        prev = Some(a);
    }
    Ok((total / TAU).round() as i64)
}
