//! Smooth monotone steps built from σ(t) = s(t)/(s(t) + s(1−t)),
//! s(t) = exp(−1/t).

use serde::Serialize;

/// σ and its first two derivatives on [0, 1], flat outside.
pub fn sigma(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let s = 1.0 - t;
    // σ = 1/(1 + e^u)
    let u = 1.0 / t - 1.0 / s;
    let du = -1.0 / (t * t) - 1.0 / (s * s);
    let ddu = 2.0 / (t * t * t) - 2.0 / (s * s * s);
    let v = if u > 0.0 {
        let e = (-u).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + u.exp())
    };
    // σ(1 − σ) = 1/(4 cosh²(u/2)), zero once cosh overflows
    let ch = (0.5 * u).cosh();
    let w = if ch.is_finite() { 0.25 / (ch * ch) } else { 0.0 };
    let d1 = -w * du;
    let d2 = -(d1 * (1.0 - 2.0 * v) * du + w * ddu);
    (v, d1, d2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Step {
    pub lo: f64,
    pub hi: f64,
    /// 0 below `lo` and 1 above `hi` when set, the mirror image otherwise
    pub increasing: bool,
}

impl Step {
    pub fn up(lo: f64, hi: f64) -> Self {
        Self { lo, hi, increasing: true }
    }

    pub fn down(lo: f64, hi: f64) -> Self {
        Self { lo, hi, increasing: false }
    }

    /// Value, first and second derivative.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let w = self.hi - self.lo;
        let (v, d1, d2) = sigma((x - self.lo) / w);
        let (d1, d2) = (d1 / w, d2 / (w * w));
        if self.increasing {
            (v, d1, d2)
        } else {
            (1.0 - v, -d1, -d2)
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_differences() {
        let h = 1e-6;
        for i in 1..100 {
            let t = i as f64 / 100.0;
            let (_, d1, d2) = sigma(t);
            let fd1 = (sigma(t + h).0 - sigma(t - h).0) / (2.0 * h);
            let fd2 = (sigma(t + h).1 - sigma(t - h).1) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-6, "{t}");
            assert!((d2 - fd2).abs() < 1e-5, "{t}");
        }
    }

    #[test]
    fn symmetric_about_half() {
        for i in 0..=50 {
            let t = i as f64 / 50.0;
            assert!((sigma(t).0 + sigma(1.0 - t).0 - 1.0).abs() < 1e-15);
        }
    }
}
