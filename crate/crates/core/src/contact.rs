//! Liouville fields transverse to Σ, the contact form λ = ω₀(Y, ·), its
//! Reeb field and the involution ρ.

use std::f64::consts::TAU;

use nalgebra::Matrix4;
use serde::Serialize;

use crate::bump::Step;
use crate::coords::omega_matrix;
use crate::error::{Error, Result};
use crate::sampler::SigmaSampler;
use crate::stack::{ModelHamiltonian, StackKind};

/// ω₀(a, b) for ω₀ = Σ dyᵢ∧dxᵢ in (x₁, x₂, y₁, y₂) ordering.
pub fn omega(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[2] * b[0] - a[0] * b[2] + a[3] * b[1] - a[1] * b[3]
}

/// ρ(x₁, x₂, y₁, y₂) = (−x₁, 4π − x₂, y₁, y₂).
pub fn rho(p: &[f64; 4]) -> [f64; 4] {
    [-p[0], 2.0 * TAU - p[1], p[2], p[3]]
}

/// The linear part of ρ.
pub fn rho_linear(v: &[f64; 4]) -> [f64; 4] {
    [-v[0], -v[1], v[2], v[3]]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LiouvilleKind {
    /// Y₀ spliced into Y₁ through X_{hℓ}, mirrored by ρ beyond x₂ = 2π
    Spliced,
    /// ½(x₁, 0, y₁, 2(y₂ − Λ₃)) for the x₂-free appendix Hamiltonian
    Radial,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LiouvilleField {
    pub kind: LiouvilleKind,
    /// y₂ of the critical line
    pub center: f64,
    /// the step h on [2π − 2ε₂, 2π − ε₂]
    pub h: Step,
}

impl LiouvilleField {
    pub fn for_model(model: &ModelHamiltonian) -> Result<Self> {
        let eps2 = model.params.eps2;
        let h = Step::up(TAU - 2.0 * eps2, TAU - eps2);
        let kind = match model.kind() {
            StackKind::Lower | StackKind::Upper => LiouvilleKind::Spliced,
            StackKind::Appendix => LiouvilleKind::Radial,
            StackKind::Plain => {
                return Err(Error::param("regime", "no Liouville field for the plain Hamiltonian"))
            }
        };
        Ok(Self { kind, center: model.center(), h })
    }

    /// Y₀ = ½(x₁, x₂, y₁, y₂ − center).
    pub fn y0(&self, p: &[f64; 4]) -> [f64; 4] {
        [0.5 * p[0], 0.5 * p[1], 0.5 * p[2], 0.5 * (p[3] - self.center)]
    }

    /// Y₁ = ½(x₁, 0, y₁, 0) + (0, ¼ sin(x₂/2), 0, (y₂ − center)(1 − ⅛ cos(x₂/2))).
    pub fn y1(&self, p: &[f64; 4]) -> [f64; 4] {
        let (s, c) = (0.5 * p[1]).sin_cos();
        [0.5 * p[0], 0.25 * s, 0.5 * p[2], (p[3] - self.center) * (1.0 - 0.125 * c)]
    }

    /// Ỹ = Y₀ + X_{hℓ}, ℓ = (y₂ − center)(¼ sin(x₂/2) − ½x₂).
    fn tilde(&self, p: &[f64; 4]) -> [f64; 4] {
        let mut y = self.y0(p);
        let (hv, hd, _) = self.h.eval(p[1]);
        if hv == 0.0 && hd == 0.0 {
            return y;
        }
        let x = p[1];
        let dy = p[3] - self.center;
        let (s, c) = (0.5 * x).sin_cos();
        let m = 0.25 * s - 0.5 * x;
        let l = dy * m;
        let lx = dy * (0.125 * c - 0.5);
        let ly = m;
        y[1] += hv * ly;
        y[3] -= hd * l + hv * lx;
        y
    }

    pub fn eval(&self, p: &[f64; 4]) -> [f64; 4] {
        match self.kind {
            LiouvilleKind::Radial => [0.5 * p[0], 0.0, 0.5 * p[2], p[3] - self.center],
            LiouvilleKind::Spliced => {
                if p[1] <= TAU {
                    self.tilde(p)
                } else {
                    rho_linear(&self.tilde(&rho(p)))
                }
            }
        }
    }

    /// λ_p(v) = ω₀(Y(p), v).
    pub fn lambda(&self, p: &[f64; 4], v: &[f64; 4]) -> f64 {
        omega(&self.eval(p), v)
    }

    /// Coefficients αⱼ of λ = Σ αⱼ dzⱼ.
    pub fn lambda_coeffs(&self, p: &[f64; 4]) -> [f64; 4] {
        let y = self.eval(p);
        [y[2], y[3], -y[0], -y[1]]
    }

    /// max |d(ι_Y ω₀) − ω₀| by central differences, Richardson-extrapolated
    /// once.
    pub fn liouville_defect(&self, p: &[f64; 4], h: f64) -> f64 {
        let d = |step: f64| {
            let mut m = Matrix4::zeros();
            for i in 0..4 {
                let mut a = *p;
                let mut b = *p;
                a[i] += step;
                b[i] -= step;
                let (ca, cb) = (self.lambda_coeffs(&a), self.lambda_coeffs(&b));
                for j in 0..4 {
                    // ∂ᵢαⱼ
                    m[(i, j)] = (ca[j] - cb[j]) / (2.0 * step);
                }
            }
            m - m.transpose()
        };
        let r = (d(0.5 * h) * 4.0 - d(h)) / 3.0;
        (r - omega_matrix()).amax()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Contact {
    pub model: ModelHamiltonian,
    pub field: LiouvilleField,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub min: f64,
    pub argmin: [f64; 4],
    pub n: usize,
    pub seed: u64,
}

impl Contact {
    pub fn new(model: &ModelHamiltonian) -> Result<Self> {
        Ok(Self { model: *model, field: LiouvilleField::for_model(model)? })
    }

    /// dH̃(Y) at p.
    pub fn transversality(&self, p: &[f64; 4]) -> Result<f64> {
        let g = self.model.eval(p)?.grad;
        let y = self.field.eval(p);
        Ok(g.iter().zip(&y).map(|(a, b)| a * b).sum())
    }

    pub fn lambda(&self, p: &[f64; 4], v: &[f64; 4]) -> f64 {
        self.field.lambda(p, v)
    }

    /// λ(X_H̃) at p.
    pub fn lambda_xh(&self, p: &[f64; 4]) -> Result<f64> {
        let xh = self.model.hamiltonian_field(p)?;
        Ok(self.field.lambda(p, &xh))
    }

    /// R = X_H̃ / λ(X_H̃).
    pub fn reeb(&self, p: &[f64; 4]) -> Result<[f64; 4]> {
        let xh = self.model.hamiltonian_field(p)?;
        let l = self.field.lambda(p, &xh);
        if !(l > 0.0) {
            return Err(Error::Transversality { point: *p, value: l });
        }
        Ok(xh.map(|v| v / l))
    }

    /// min dH̃(Y) over `n` sampled points of Σ.
    pub fn transversality_scan(&self, sampler: &SigmaSampler, n: usize, seed: u64) -> Result<ScanReport> {
        let mut min = f64::INFINITY;
        let mut argmin = [f64::NAN; 4];
        for p in sampler.samples(n, seed) {
            let v = self.transversality(&p)?;
            if v < min {
                min = v;
                argmin = p;
            }
        }
        Ok(ScanReport { min, argmin, n, seed })
    }

    /// max |dλ(R, v)| over a basis of T_pΣ, with dλ by finite differences.
    pub fn reeb_kernel_defect(&self, p: &[f64; 4], h: f64) -> Result<f64> {
        let r = self.reeb(p)?;
        let mut m = Matrix4::zeros();
        for i in 0..4 {
            let mut a = *p;
            let mut b = *p;
            a[i] += h;
            b[i] -= h;
            let (ca, cb) = (self.field.lambda_coeffs(&a), self.field.lambda_coeffs(&b));
            for j in 0..4 {
                m[(i, j)] = (ca[j] - cb[j]) / (2.0 * h);
            }
        }
        let dl = m - m.transpose();
        let g = self.model.eval(p)?.grad;
        let gn = nalgebra::Vector4::from(g).normalize();
        let rv = nalgebra::Vector4::from(r);
        let mut worst: f64 = 0.0;
        for k in 0..4 {
            let mut e = nalgebra::Vector4::zeros();
            e[k] = 1.0;
            let t = e - gn * gn.dot(&e);
            worst = worst.max((rv.transpose() * dl * t)[0].abs());
        }
        Ok(worst)
    }

    /// |λ_{ρp}(Dρ v) + λ_p(v)| maximized over the coordinate basis.
    pub fn anti_invariance_defect(&self, p: &[f64; 4]) -> f64 {
        let q = rho(p);
        let mut worst: f64 = 0.0;
        for k in 0..4 {
            let mut v = [0.0; 4];
            v[k] = 1.0;
            let a = self.field.lambda(&q, &rho_linear(&v));
            let b = self.field.lambda(p, &v);
            worst = worst.max((a + b).abs());
        }
        worst
    }

    /// ∮ λ(γ̇) dt along a sampled Hamiltonian orbit, by the trapezoid rule
    /// on uniform samples covering one period (first and last coincide).
    pub fn reeb_period(&self, points: &[[f64; 4]], period: f64) -> Result<f64> {
        if points.len() < 3 {
            return Err(Error::Degenerate("orbit needs at least three samples".into()));
        }
        let n = points.len() - 1;
        let dt = period / n as f64;
        let mut acc = 0.0;
        for (i, p) in points.iter().enumerate() {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += w * self.lambda_xh(p)?;
        }
        Ok(acc * dt)
    }
}
