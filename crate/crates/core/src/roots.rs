//! Scalar root finding: bisection with a safeguarded Newton polish.

use crate::error::{Error, Result};

/// Finds a root of `f` in `[a, b]` where `f(a)` and `f(b)` differ in sign.
/// `df` is used for Newton steps whenever they stay inside the bracket.
pub fn bracketed_newton<F, D>(mut f: F, mut df: D, a: f64, b: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
    D: FnMut(f64) -> f64,
{
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if (flo > 0.0) == (fhi > 0.0) {
        return Err(Error::Root(format!(
            "no sign change on [{lo}, {hi}]: f = ({flo:e}, {fhi:e})"
        )));
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..300 {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx > 0.0) == (flo > 0.0) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        let next = if d != 0.0 && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= xtol || hi - lo <= xtol {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Plain bisection, used where no derivative is at hand.
pub fn bisect<F>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let flo0 = f(lo);
    let fhi = f(hi);
    if flo0 == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if (flo0 > 0.0) == (fhi > 0.0) {
        return Err(Error::Root(format!("no sign change on [{lo}, {hi}]")));
    }
    let pos_lo = flo0 > 0.0;
    for _ in 0..400 {
        let m = 0.5 * (lo + hi);
        if hi - lo <= xtol || m == lo || m == hi {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm > 0.0) == pos_lo {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Secant iteration with a bisection fallback on a bracket.
pub fn bracketed_secant<F>(mut f: F, a: f64, b: f64, xtol: f64, ftol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut flo = f(lo)?;
    let mut fhi = f(hi)?;
    if (flo > 0.0) == (fhi > 0.0) {
        return Err(Error::Root(format!(
            "no sign change on [{lo}, {hi}]: f = ({flo:e}, {fhi:e})"
        )));
    }
    let mut side = 0i32;
    for _ in 0..200 {
        // Illinois-modified regula falsi
        let x = (lo * fhi - hi * flo) / (fhi - flo);
        let x = if x.is_finite() && x > lo && x < hi { x } else { 0.5 * (lo + hi) };
        let fx = f(x)?;
        if fx.abs() <= ftol || hi - lo <= xtol {
            return Ok(x);
        }
        if (fx > 0.0) == (flo > 0.0) {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_root_of_two() {
        let r = bracketed_newton(|x| x * x * x - 2.0, |x| 3.0 * x * x, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
        let r = bisect(|x| x * x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
        let r = bracketed_secant(|x| Ok(x * x * x - 2.0), 0.0, 2.0, 1e-15, 0.0).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn rejects_unbracketed() {
        assert!(bracketed_newton(|x| x * x + 1.0, |x| 2.0 * x, -1.0, 1.0, 1e-12).is_err());
    }
}
