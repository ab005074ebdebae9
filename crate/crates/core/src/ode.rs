//! Adaptive Dormand–Prince 5(4) integrator for first-order systems `y' = F(t, y)`.
//!
//! Integration runs forwards or backwards. Output times are hit exactly by
//! truncating the last step of each segment, so sampled values carry no
//! interpolation error.

use crate::error::{LabError, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Hooks into the step loop: a per-state step cap and an acceptance callback
/// that may stop the integration early.
pub trait Monitor {
    fn max_step(&self, _t: f64, _y: &[f64]) -> f64 {
        f64::INFINITY
    }

    /// Called after every accepted step. Return `false` to stop.
    fn accept(&mut self, _t: f64, _y: &[f64]) -> bool {
        true
    }
}

struct NoMonitor;
impl Monitor for NoMonitor {}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub t: f64,
    pub y: Vec<f64>,
    pub steps: usize,
    pub stopped_early: bool,
    pub last_h: f64,
}

#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub h_init: Option<f64>,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-12, max_steps: 2_000_000, h_init: None }
    }
}

impl Dopri5 {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }

    pub fn integrate<F>(&self, rhs: F, t0: f64, y0: &[f64], t1: f64) -> Result<Vec<f64>>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        Ok(self.integrate_monitored(rhs, t0, y0, t1, &mut NoMonitor)?.y)
    }

    /// States at each of `times`, integrating segment by segment from `t0`.
    pub fn integrate_to_times<F>(
        &self,
        mut rhs: F,
        t0: f64,
        y0: &[f64],
        times: &[f64],
    ) -> Result<Vec<Vec<f64>>>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let mut out = Vec::with_capacity(times.len());
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut h = self.h_init;
        for &target in times {
            let solver = Self { h_init: h, ..self.clone() };
            let o = solver.integrate_monitored(&mut rhs, t, &y, target, &mut NoMonitor)?;
            if o.last_h.is_finite() && o.last_h != 0.0 {
                h = Some(o.last_h.abs());
            }
            t = target;
            y = o.y;
            out.push(y.clone());
        }
        Ok(out)
    }

    pub fn integrate_monitored<F, M>(
        &self,
        mut rhs: F,
        t0: f64,
        y0: &[f64],
        t1: f64,
        monitor: &mut M,
    ) -> Result<Outcome>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        M: Monitor + ?Sized,
    {
        let dim = y0.len();
        let mut t = t0;
        let mut y = y0.to_vec();
        if t1 == t0 {
            return Ok(Outcome { t, y, steps: 0, stopped_early: false, last_h: 0.0 });
        }
        let dir = (t1 - t0).signum();
        let span = (t1 - t0).abs();

        let mut k1 = vec![0.0; dim];
        let mut k2 = vec![0.0; dim];
        let mut k3 = vec![0.0; dim];
        let mut k4 = vec![0.0; dim];
        let mut k5 = vec![0.0; dim];
        let mut k6 = vec![0.0; dim];
        let mut k7 = vec![0.0; dim];
        let mut tmp = vec![0.0; dim];
        let mut ynew = vec![0.0; dim];

        rhs(t, &y, &mut k1);
        let mut h = match self.h_init {
            Some(h) => h.min(span),
            None => self.initial_step(&mut rhs, t, &y, &k1, span, dir),
        };
        let mut steps = 0usize;
        let mut last_h = h;

        loop {
            let remaining = (t1 - t).abs();
            if remaining <= 1e-15 * t1.abs().max(1.0) {
                break;
            }
            if steps >= self.max_steps {
                return Err(LabError::TooManySteps { t });
            }
            let cap = monitor.max_step(t, &y);
            let mut step = h.min(remaining).min(cap);
            let hits_end = step >= remaining;
            if hits_end {
                step = remaining;
            }
            if step < 1e-14 * t.abs().max(1.0) && !hits_end {
                return Err(LabError::StepUnderflow { t });
            }
            let hs = dir * step;

            for i in 0..dim {
                tmp[i] = y[i] + hs * A21 * k1[i];
            }
            rhs(t + C2 * hs, &tmp, &mut k2);
            for i in 0..dim {
                tmp[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
            }
            rhs(t + C3 * hs, &tmp, &mut k3);
            for i in 0..dim {
                tmp[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            rhs(t + C4 * hs, &tmp, &mut k4);
            for i in 0..dim {
                tmp[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            rhs(t + C5 * hs, &tmp, &mut k5);
            for i in 0..dim {
                tmp[i] = y[i]
                    + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            let t_next = if hits_end { t1 } else { t + hs };
            rhs(t + hs, &tmp, &mut k6);
            for i in 0..dim {
                ynew[i] = y[i]
                    + hs * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            rhs(t_next, &ynew, &mut k7);

            let mut err = 0.0;
            for i in 0..dim {
                let e = hs
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.atol + self.rtol * y[i].abs().max(ynew[i].abs());
                err += (e / sc) * (e / sc);
            }
            let err = (err / dim.max(1) as f64).sqrt();
            if !err.is_finite() {
                h = step * 0.1;
                continue;
            }

            if err <= 1.0 {
                t = t_next;
                std::mem::swap(&mut y, &mut ynew);
                std::mem::swap(&mut k1, &mut k7);
                steps += 1;
                last_h = step;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h = step * fac;
                if !monitor.accept(t, &y) {
                    return Ok(Outcome { t, y, steps, stopped_early: true, last_h });
                }
            } else {
                h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            }
        }
        Ok(Outcome { t, y, steps, stopped_early: false, last_h })
    }

    fn initial_step<F>(&self, rhs: &mut F, t: f64, y: &[f64], f0: &[f64], span: f64, dir: f64) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let dim = y.len();
        let sc: Vec<f64> = y.iter().map(|v| self.atol + self.rtol * v.abs()).collect();
        let rms = |v: &[f64]| {
            (v.iter().zip(&sc).map(|(a, s)| (a / s) * (a / s)).sum::<f64>() / dim.max(1) as f64).sqrt()
        };
        let d0 = rms(y);
        let d1 = rms(f0);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + dir * h0 * b).collect();
        let mut f1 = vec![0.0; dim];
        rhs(t + dir * h0, &y1, &mut f1);
        let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
        let d2 = rms(&diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span)
    }
}
