//! Points of Σ, the compact component of H̃ = level.
//!
//! The (x₂, y₂) shadow of Σ is the connected component of {H̃₂ ≤ level}
//! holding the minimum on the critical line; it is labelled once on a grid
//! by flood fill. A sample draws (x₂, y₂) from that shadow, then places
//! (x₁, y₁) on the circle of radius √(2(level − H̃₂)).

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::stack::{ModelHamiltonian, StackKind};

#[derive(Debug, Clone)]
pub struct SigmaSampler {
    pub model: ModelHamiltonian,
    nx: usize,
    ny: usize,
    bx: [f64; 4],
    inside: Vec<bool>,
    /// bounding box of the labelled shadow
    pub shadow: [f64; 4],
}

impl SigmaSampler {
    pub fn new(model: &ModelHamiltonian) -> Result<Self> {
        Self::with_grid(model, 400, 400)
    }

    pub fn with_grid(model: &ModelHamiltonian, nx: usize, ny: usize) -> Result<Self> {
        let level = model.level();
        let c0 = model.center();
        let bx = match model.kind() {
            StackKind::Upper => {
                let far = model.lambda_max(0.0)?.min(model.lambda_max(TAU)?);
                let m = model.x2_margin();
                [-m, 2.0 * TAU + m, far - 0.5, -0.05]
            }
            StackKind::Appendix | StackKind::Plain => {
                let far = model.lambda_max(0.0)?;
                [0.0, TAU, 0.3, far + 0.5]
            }
            StackKind::Lower => {
                let far = model.lambda_max(0.0)?.max(model.lambda_max(TAU)?);
                let m = model.x2_margin();
                [-m, 2.0 * TAU + m, 0.3, far + 0.5]
            }
        };
        let seed = match model.kind() {
            StackKind::Appendix | StackKind::Plain => (PI, c0),
            _ => (TAU, c0),
        };
        let node = |i: usize, j: usize| {
            (
                bx[0] + (bx[1] - bx[0]) * i as f64 / (nx - 1) as f64,
                bx[2] + (bx[3] - bx[2]) * j as f64 / (ny - 1) as f64,
            )
        };
        let mut below = vec![false; nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                let (x, y) = node(i, j);
                below[i * ny + j] = model.h2_value(x, y).map(|v| v <= level).unwrap_or(false);
            }
        }
        let si = (((seed.0 - bx[0]) / (bx[1] - bx[0])) * (nx - 1) as f64).round() as usize;
        let sj = (((seed.1 - bx[2]) / (bx[3] - bx[2])) * (ny - 1) as f64).round() as usize;
        if !below[si * ny + sj] {
            return Err(Error::Consistency("sampler seed lies above the level".into()));
        }
        let periodic = model.is_periodic();
        let mut inside = vec![false; nx * ny];
        let mut queue = VecDeque::from([(si, sj)]);
        inside[si * ny + sj] = true;
        while let Some((i, j)) = queue.pop_front() {
            let mut nb = Vec::with_capacity(4);
            if i > 0 {
                nb.push((i - 1, j));
            } else if periodic {
                nb.push((nx - 1, j));
            }
            if i + 1 < nx {
                nb.push((i + 1, j));
            } else if periodic {
                nb.push((0, j));
            }
            if j > 0 {
                nb.push((i, j - 1));
            }
            if j + 1 < ny {
                nb.push((i, j + 1));
            }
            for (a, b) in nb {
                let k = a * ny + b;
                if below[k] && !inside[k] {
                    inside[k] = true;
                    queue.push_back((a, b));
                }
            }
        }
        let mut shadow = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for i in 0..nx {
            for j in 0..ny {
                if inside[i * ny + j] {
                    let (x, y) = node(i, j);
                    shadow[0] = shadow[0].min(x);
                    shadow[1] = shadow[1].max(x);
                    shadow[2] = shadow[2].min(y);
                    shadow[3] = shadow[3].max(y);
                }
            }
        }
        let hx = (bx[1] - bx[0]) / (nx - 1) as f64;
        let hy = (bx[3] - bx[2]) / (ny - 1) as f64;
        shadow = [
            (shadow[0] - hx).max(bx[0]),
            (shadow[1] + hx).min(bx[1]),
            (shadow[2] - hy).max(bx[2]),
            (shadow[3] + hy).min(bx[3]),
        ];
        if !periodic && (shadow[0] <= bx[0] || shadow[1] >= bx[1]) {
            return Err(Error::Consistency("Σ shadow reaches the grid edge in x₂".into()));
        }
        if shadow[2] <= bx[2] || shadow[3] >= bx[3] {
            return Err(Error::Consistency("Σ shadow reaches the grid edge in y₂".into()));
        }
        Ok(Self { model: *model, nx, ny, bx, inside, shadow })
    }

    /// Whether (x₂, y₂) lies in the shadow of Σ.
    pub fn in_shadow(&self, x: f64, y: f64) -> bool {
        let Ok(v) = self.model.h2_value(x, y) else {
            return false;
        };
        if v > self.model.level() {
            return false;
        }
        let x = if self.model.is_periodic() { x.rem_euclid(TAU) } else { x };
        let fi = (x - self.bx[0]) / (self.bx[1] - self.bx[0]) * (self.nx - 1) as f64;
        let fj = (y - self.bx[2]) / (self.bx[3] - self.bx[2]) * (self.ny - 1) as f64;
        if fi < 0.0 || fj < 0.0 || fi > (self.nx - 1) as f64 || fj > (self.ny - 1) as f64 {
            return false;
        }
        let (i0, j0) = (fi.floor() as usize, fj.floor() as usize);
        let i1 = (i0 + 1).min(self.nx - 1);
        let j1 = (j0 + 1).min(self.ny - 1);
        [(i0, j0), (i0, j1), (i1, j0), (i1, j1)]
            .iter()
            .any(|&(i, j)| self.inside[i * self.ny + j])
    }

    /// One point of Σ.
    pub fn sample(&self, rng: &mut impl Rng) -> [f64; 4] {
        let level = self.model.level();
        loop {
            let x = rng.random_range(self.shadow[0]..self.shadow[1]);
            let y = rng.random_range(self.shadow[2]..self.shadow[3]);
            if !self.in_shadow(x, y) {
                continue;
            }
            let Ok(v) = self.model.h2_value(x, y) else {
                continue;
            };
            let r = (2.0 * (level - v)).max(0.0).sqrt();
            let th = rng.random_range(0.0..TAU);
            return [r * th.cos(), x, r * th.sin(), y];
        }
    }

    pub fn samples(&self, n: usize, seed: u64) -> Vec<[f64; 4]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.sample(&mut rng)).collect()
    }

    /// Newton projection onto H̃ = level along ∇H̃.
    pub fn project(&self, p: &[f64; 4], tol: f64) -> Result<[f64; 4]> {
        project(&self.model, p, tol)
    }
}

/// Newton projection of `p` onto H̃ = level along ∇H̃.
pub fn project(model: &ModelHamiltonian, p: &[f64; 4], tol: f64) -> Result<[f64; 4]> {
    let level = model.level();
    let mut q = *p;
    for _ in 0..50 {
        let e = model.eval(&q)?;
        let res = e.value - level;
        if res.abs() <= tol {
            return Ok(q);
        }
        let g2: f64 = e.grad.iter().map(|g| g * g).sum();
        if g2 == 0.0 {
            return Err(Error::Degenerate("projection hit a critical point".into()));
        }
        for k in 0..4 {
            q[k] -= res * e.grad[k] / g2;
        }
    }
    Err(Error::Root(format!("projection did not reach tolerance {tol}")))
}
