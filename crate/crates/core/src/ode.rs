//! Embedded Dormand–Prince 5(4) integrator with a terminal sign-change event.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("exceeded {max_steps} steps before reaching t = {t_end}")]
    TooManySteps { max_steps: usize, t_end: f64 },
    #[error("right-hand side is not finite at t = {t}")]
    NotFinite { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solution<const N: usize> {
    /// Final time: `t_end`, or the event time when one fired.
    pub t: f64,
    pub y: [f64; N],
    /// Event time, if the event function dropped to zero or below.
    pub event: Option<f64>,
    pub steps: usize,
    pub rejected: usize,
    /// Last accepted step size, usable as the initial guess for a continuation.
    pub last_h: f64,
}

// Dormand–Prince tableau.
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth minus fourth order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub tol: Tolerances,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 {
            tol: Tolerances::default(),
            max_steps: 2_000_000,
        }
    }
}

struct Step<const N: usize> {
    y: [f64; N],
    k_end: [f64; N],
    err: f64,
}

impl Dopri5 {
    pub fn new(tol: Tolerances) -> Self {
        Dopri5 {
            tol,
            ..Default::default()
        }
    }

    /// Integrates `y' = rhs(t, y)` from `t0` to `t_end > t0`.
    pub fn solve<F, const N: usize>(
        &self,
        rhs: F,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        h0: Option<f64>,
    ) -> Result<Solution<N>, OdeError>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        self.solve_with_event(rhs, t0, y0, t_end, h0, |_, _| 1.0)
    }

    /// Integrates until `t_end` or until `event(t, y)` first becomes `<= 0`.
    ///
    /// The event function must be positive at `t0`. The crossing is located by
    /// bisecting the length of the final step, re-taking a single RK step each
    /// time, so the event time carries the local order of the method.
    pub fn solve_with_event<F, G, const N: usize>(
        &self,
        rhs: F,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        h0: Option<f64>,
        event: G,
    ) -> Result<Solution<N>, OdeError>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
        G: Fn(f64, &[f64; N]) -> f64,
    {
        let span = t_end - t0;
        let mut t = t0;
        let mut y = y0;
        let mut k1 = rhs(t, &y);
        check_finite(&k1, t)?;
        let mut h = h0.unwrap_or(span * 1e-3).min(span).max(0.0);
        if h == 0.0 {
            return Ok(Solution {
                t,
                y,
                event: None,
                steps: 0,
                rejected: 0,
                last_h: h,
            });
        }
        let mut steps = 0usize;
        let mut rejected = 0usize;
        let mut last_h = h;

        while t < t_end {
            if steps + rejected >= self.max_steps {
                return Err(OdeError::TooManySteps {
                    max_steps: self.max_steps,
                    t_end,
                });
            }
            let last = t + h >= t_end;
            let h_try = if last { t_end - t } else { h };
            let h_min = 16.0 * f64::EPSILON * t.abs().max(1.0);
            if h_try < h_min && !last {
                return Err(OdeError::StepUnderflow { t, h: h_try });
            }

            let step = self.step(&rhs, t, &y, &k1, h_try);
            let finite = step.err.is_finite() && step.y.iter().all(|v| v.is_finite());
            if !finite || step.err > 1.0 {
                rejected += 1;
                let factor = if finite {
                    (0.9 * step.err.powf(-0.2)).clamp(0.2, 1.0)
                } else {
                    0.25
                };
                h = h_try * factor;
                if h < h_min {
                    return Err(OdeError::StepUnderflow { t, h });
                }
                continue;
            }

            let t_new = if last { t_end } else { t + h_try };
            if event(t_new, &step.y) <= 0.0 {
                let (te, ye) = self.locate_event(&rhs, &event, t, &y, &k1, h_try);
                return Ok(Solution {
                    t: te,
                    y: ye,
                    event: Some(te),
                    steps: steps + 1,
                    rejected,
                    last_h,
                });
            }

            steps += 1;
            t = t_new;
            y = step.y;
            k1 = step.k_end;
            check_finite(&k1, t)?;
            last_h = h_try;
            let grow = if step.err == 0.0 {
                5.0
            } else {
                (0.9 * step.err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = h_try * grow;
        }
        Ok(Solution {
            t,
            y,
            event: None,
            steps,
            rejected,
            last_h,
        })
    }

    fn step<F, const N: usize>(
        &self,
        rhs: &F,
        t: f64,
        y: &[f64; N],
        k1: &[f64; N],
        h: f64,
    ) -> Step<N>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let stage = |coef: &[(f64, &[f64; N])]| -> [f64; N] {
            let mut out = *y;
            for (c, k) in coef {
                for i in 0..N {
                    out[i] += h * c * k[i];
                }
            }
            out
        };
        let k2 = rhs(t + C2 * h, &stage(&[(A21, k1)]));
        let k3 = rhs(t + C3 * h, &stage(&[(A31, k1), (A32, &k2)]));
        let k4 = rhs(t + C4 * h, &stage(&[(A41, k1), (A42, &k2), (A43, &k3)]));
        let k5 = rhs(
            t + C5 * h,
            &stage(&[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = rhs(
            t + h,
            &stage(&[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = stage(&[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = rhs(t + h, &y_new);

        let mut acc = 0.0;
        for i in 0..N {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = self.tol.atol + self.tol.rtol * y[i].abs().max(y_new[i].abs());
            acc += (e / scale).powi(2);
        }
        Step {
            y: y_new,
            k_end: k7,
            err: (acc / N as f64).sqrt(),
        }
    }

    fn locate_event<F, G, const N: usize>(
        &self,
        rhs: &F,
        event: &G,
        t: f64,
        y: &[f64; N],
        k1: &[f64; N],
        h: f64,
    ) -> (f64, [f64; N])
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
        G: Fn(f64, &[f64; N]) -> f64,
    {
        let (mut lo, mut hi) = (0.0, h);
        let mut y_hi = self.step(rhs, t, y, k1, h).y;
        for _ in 0..60 {
            if hi - lo <= 4.0 * f64::EPSILON * (t + hi).abs().max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let ym = self.step(rhs, t, y, k1, mid).y;
            if event(t + mid, &ym) <= 0.0 {
                hi = mid;
                y_hi = ym;
            } else {
                lo = mid;
            }
        }
        (t + hi, y_hi)
    }
}

fn check_finite<const N: usize>(k: &[f64; N], t: f64) -> Result<(), OdeError> {
    if k.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(OdeError::NotFinite { t })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn harmonic_oscillator_full_period() {
        let sol = Dopri5::default()
            .solve(
                |_, y: &[f64; 2]| [y[1], -y[0]],
                0.0,
                [0.0, 1.0],
                2.0 * PI,
                None,
            )
            .unwrap();
        assert!(sol.y[0].abs() < 1e-9);
        assert!((sol.y[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exponential_growth() {
        let sol = Dopri5::default()
            .solve(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 3.0, None)
            .unwrap();
        assert!((sol.y[0] / 3f64.exp() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn event_at_first_zero_of_cosine() {
        let sol = Dopri5::default()
            .solve_with_event(
                |_, y: &[f64; 2]| [y[1], -y[0]],
                0.0,
                [0.0, 1.0],
                10.0,
                None,
                |_, y| y[1],
            )
            .unwrap();
        let te = sol.event.expect("derivative vanishes at pi/2");
        assert!((te - PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn blowup_reports_error() {
        // y' = y^2 from y(0) = 1 blows up at t = 1.
        let res = Dopri5::default().solve(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 2.0, None);
        assert!(res.is_err());
    }
}
