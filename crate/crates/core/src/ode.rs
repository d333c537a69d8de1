//! Dormand–Prince 5(4) integrator with step control and a fourth-order
//! continuous extension.
//!
//! The right-hand side writes into a caller buffer and may fail (for
//! example when a trajectory reaches the collision floor). An observer is
//! called after every accepted step and may stop the integration early,
//! which is how event location is done throughout the crate.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

// difference between the fifth- and fourth-order weights
const E: [f64; 7] = [
    -71.0 / 57600.0,
    0.0,
    71.0 / 16695.0,
    -71.0 / 1920.0,
    17253.0 / 339200.0,
    -22.0 / 525.0,
    1.0 / 40.0,
];

// continuous extension coefficients (Shampine), polynomial in theta
const P: [[f64; 4]; 7] = [
    [
        1.0,
        -8048581381.0 / 2820520608.0,
        8663915743.0 / 2820520608.0,
        -12715105075.0 / 11282082432.0,
    ],
    [0.0, 0.0, 0.0, 0.0],
    [
        0.0,
        131558114200.0 / 32700410799.0,
        -68118460800.0 / 10900136933.0,
        87487479700.0 / 32700410799.0,
    ],
    [
        0.0,
        -1754552775.0 / 470086768.0,
        14199869525.0 / 1410260304.0,
        -10690763975.0 / 1880347072.0,
    ],
    [
        0.0,
        127303824393.0 / 49829197408.0,
        -318862633887.0 / 49829197408.0,
        701980252875.0 / 199316789632.0,
    ],
    [
        0.0,
        -282668133.0 / 205662961.0,
        2019193451.0 / 616988883.0,
        -1453857185.0 / 822651844.0,
    ],
    [
        0.0,
        40617522.0 / 29380423.0,
        -110615467.0 / 29380423.0,
        69997945.0 / 29380423.0,
    ],
];

/// What the observer wants after seeing a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// An accepted step, with access to the dense interpolant.
pub struct Step<'a> {
    pub t0: f64,
    pub t1: f64,
    pub y0: &'a [f64],
    pub y1: &'a [f64],
    k: &'a [Vec<f64>; 7],
}

impl Step<'_> {
    /// Evaluates the continuous extension at `t` (expected in `[t0, t1]`).
    pub fn interpolate(&self, t: f64, out: &mut [f64]) {
        let h = self.t1 - self.t0;
        if h == 0.0 {
            out.copy_from_slice(self.y1);
            return;
        }
        let th = (t - self.t0) / h;
        let pw = [th, th * th, th * th * th, th * th * th * th];
        let mut w = [0.0; 7];
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = P[i][0] * pw[0] + P[i][1] * pw[1] + P[i][2] * pw[2] + P[i][3] * pw[3];
        }
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..7 {
                acc += w[i] * self.k[i][j];
            }
            *o = self.y0[j] + h * acc;
        }
    }

    pub fn len(&self) -> usize {
        self.y1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y1.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub t: f64,
    pub y: Vec<f64>,
    pub steps: usize,
    pub rejected: usize,
    pub evals: usize,
    /// True when the observer requested the stop before `t1` was reached.
    pub stopped: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub h_max: f64,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self::new(1e-10, 1e-12)
    }
}

fn rms_scaled(v: &[f64], a: &[f64], b: &[f64], atol: f64, rtol: f64) -> f64 {
    let n = v.len().max(1) as f64;
    let mut s = 0.0;
    for i in 0..v.len() {
        let sc = atol + rtol * a[i].abs().max(b[i].abs());
        s += (v[i] / sc).powi(2);
    }
    (s / n).sqrt()
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            max_steps: 2_000_000,
            h_max: f64::INFINITY,
        }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
    pub fn solve<F, O>(&self, mut f: F, t0: f64, y0: &[f64], t1: f64, mut obs: O) -> Result<Outcome>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
        O: FnMut(&Step) -> Control,
    {
        let n = y0.len();
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::Integrator("tolerances must be positive".into()));
        }
        let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
        let mut y = y0.to_vec();
        let mut y_new = vec![0.0; n];
        let mut y_stage = vec![0.0; n];
        let mut err_v = vec![0.0; n];
        let mut out = Outcome {
            t: t0,
            y: y.clone(),
            steps: 0,
            rejected: 0,
            evals: 0,
            stopped: false,
        };
        if t1 == t0 {
            return Ok(out);
        }
        let dir = (t1 - t0).signum();
        let span = (t1 - t0).abs();

        f(t0, &y, &mut k[0])?;
        out.evals += 1;

        // initial step (Hairer, Norsett & Wanner, II.4)
        let mut h = {
            let zero = vec![0.0; n];
            let d0 = rms_scaled(&y, &y, &zero, self.atol, self.rtol);
            let d1 = rms_scaled(&k[0], &y, &zero, self.atol, self.rtol);
            let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
            let h0 = h0.min(span);
            for i in 0..n {
                y_stage[i] = y[i] + dir * h0 * k[0][i];
            }
            f(t0 + dir * h0, &y_stage, &mut k[1])?;
            out.evals += 1;
            for i in 0..n {
                err_v[i] = (k[1][i] - k[0][i]) / h0;
            }
            let d2 = rms_scaled(&err_v, &y, &zero, self.atol, self.rtol);
            let dm = d1.max(d2);
            let h1 = if dm <= 1e-15 {
                (h0 * 1e-3).max(1e-6)
            } else {
                (0.01 / dm).powf(0.2)
            };
            (100.0 * h0).min(h1).min(span).min(self.h_max)
        };

        let mut t = t0;
        let mut rejected_last = false;
        loop {
            if out.steps + out.rejected >= self.max_steps {
                return Err(Error::Integrator(format!(
                    "step budget {} exhausted at t = {t}",
                    self.max_steps
                )));
            }
            let remaining = (t1 - t).abs();
            let mut last = false;
            if h >= remaining * (1.0 - 1e-12) {
                h = remaining;
                last = true;
            }
            let min_h = 1e-14 * t.abs().max(1.0);
            if h < min_h && !last {
                return Err(Error::Integrator(format!("step size underflow at t = {t}")));
            }
            let hs = dir * h;
            let mut left_domain = false;
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = 0.0;
                    for j in 0..s {
                        acc += A[s][j] * k[j][i];
                    }
                    y_stage[i] = y[i] + hs * acc;
                }
                let (_, rest) = k.split_at_mut(s);
                out.evals += 1;
                match f(t + C[s] * hs, &y_stage, &mut rest[0]) {
                    Ok(()) => {}
                    // a trial stage outside the domain just means the step is too long
                    Err(Error::Domain(_)) => {
                        left_domain = true;
                        break;
                    }
                    Err(e) => return Err(e),
                }
                if s == 6 {
                    y_new.copy_from_slice(&y_stage);
                }
            }
            if left_domain {
                out.rejected += 1;
                h *= 0.2;
                rejected_last = true;
                continue;
            }
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..7 {
                    acc += E[j] * k[j][i];
                }
                err_v[i] = hs * acc;
            }
            let err = rms_scaled(&err_v, &y, &y_new, self.atol, self.rtol);
            if !err.is_finite() {
                out.rejected += 1;
                h *= 0.2;
                rejected_last = true;
                continue;
            }
            if err <= 1.0 {
                let t_new = if last { t1 } else { t + hs };
                let ctrl = {
                    let st = Step {
                        t0: t,
                        t1: t_new,
                        y0: &y,
                        y1: &y_new,
                        k: &k,
                    };
                    obs(&st)
                };
                out.steps += 1;
                t = t_new;
                std::mem::swap(&mut y, &mut y_new);
                let (first, rest) = k.split_at_mut(1);
                std::mem::swap(&mut first[0], &mut rest[5]);
                if ctrl == Control::Stop {
                    out.stopped = !last;
                    break;
                }
                if last {
                    break;
                }
                let mut fac = if err == 0.0 { 10.0 } else { 0.9 * err.powf(-0.2) };
                fac = fac.clamp(0.2, 10.0);
                if rejected_last {
                    fac = fac.min(1.0);
                }
                h = (h * fac).min(self.h_max);
                rejected_last = false;
            } else {
                out.rejected += 1;
                let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                h *= fac;
                rejected_last = true;
            }
        }
        out.t = t;
        out.y = y;
        Ok(out)
    }

    /// Integrates and records the state at each requested time (sorted in
    /// the direction of integration) using the continuous extension.
    pub fn solve_at<F>(&self, f: F, t0: f64, y0: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let mut res: Vec<Vec<f64>> = Vec::with_capacity(times.len());
        let Some(&t_end) = times.last() else {
            return Ok(res);
        };
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let mut idx = 0;
        while idx < times.len() && (times[idx] - t0) * dir <= 0.0 {
            res.push(y0.to_vec());
            idx += 1;
        }
        let mut buf = vec![0.0; y0.len()];
        self.solve(f, t0, y0, t_end, |st| {
            while idx < times.len() && (times[idx] - st.t1) * dir <= 0.0 {
                if times[idx] == st.t1 {
                    res.push(st.y1.to_vec());
                } else {
                    st.interpolate(times[idx], &mut buf);
                    res.push(buf.clone());
                }
                idx += 1;
            }
            Control::Continue
        })?;
        Ok(res)
    }
}

/// Locates a sign change of `g` inside an accepted step by bisection on the
/// continuous extension. Returns the crossing time and the interpolated
/// state there.
pub fn locate_in_step<G>(st: &Step, mut g: G, tol: f64) -> (f64, Vec<f64>)
where
    G: FnMut(f64, &[f64]) -> f64,
{
    let mut buf = vec![0.0; st.len()];
    let (mut a, mut b) = (st.t0, st.t1);
    let ga = g(a, st.y0);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        st.interpolate(m, &mut buf);
        let gm = g(m, &buf);
        if (gm > 0.0) == (ga > 0.0) && gm != 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let tm = 0.5 * (a + b);
    st.interpolate(tm, &mut buf);
    (tm, buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let s = Dopri5::new(1e-11, 1e-13);
        let out = s
            .solve(
                |_, y, dy| {
                    dy[0] = -y[0];
                    Ok(())
                },
                0.0,
                &[1.0],
                5.0,
                |_| Control::Continue,
            )
            .unwrap();
        assert!((out.y[0] - (-5.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn backward_harmonic_oscillator() {
        let s = Dopri5::new(1e-12, 1e-14);
        let out = s
            .solve(
                |_, y, dy| {
                    dy[0] = y[1];
                    dy[1] = -y[0];
                    Ok(())
                },
                0.0,
                &[1.0, 0.0],
                -3.0,
                |_| Control::Continue,
            )
            .unwrap();
        assert!((out.y[0] - 3.0f64.cos()).abs() < 1e-10);
        assert!((out.y[1] - 3.0f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn dense_output_is_accurate() {
        let s = Dopri5::new(1e-12, 1e-14);
        let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
        let ys = s
            .solve_at(
                |_, y, dy| {
                    dy[0] = y[1];
                    dy[1] = -y[0];
                    Ok(())
                },
                0.0,
                &[0.0, 1.0],
                &times,
            )
            .unwrap();
        for (t, y) in times.iter().zip(&ys) {
            assert!((y[0] - t.sin()).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn observer_stop_is_reported() {
        let s = Dopri5::default();
        let out = s
            .solve(
                |_, _, dy| {
                    dy[0] = 1.0;
                    Ok(())
                },
                0.0,
                &[0.0],
                10.0,
                |st| if st.y1[0] > 1.0 { Control::Stop } else { Control::Continue },
            )
            .unwrap();
        assert!(out.stopped);
        assert!(out.t < 10.0);
    }
}
