//! Adaptive Simpson quadrature and fixed-grid rules for sampled data.

/// Default absolute and relative tolerance for model-function integrals.
pub const DEFAULT_TOL: f64 = 1e-11;

const MAX_DEPTH: u32 = 48;
const MAX_EVALUATIONS: usize = 4_000_000;

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Integrates `f` over `[a, b]` with adaptive Simpson and Richardson correction.
///
/// The local acceptance test is `|S_left + S_right - S| <= 15 * tol_local`, where the
/// global budget `max(abs_tol, rel_tol * |f|_1 estimate)` is halved at every bisection.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Integral
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Integral {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
        };
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let fa = f(lo);
    let fb = f(hi);
    let m = 0.5 * (lo + hi);
    let fm = f(m);
    // Relative tolerance is measured against a coarse estimate of the integral
    // of |f|, so oscillating integrands with a small net value still terminate.
    let magnitude = (hi - lo) / 6.0 * (fa.abs() + 4.0 * fm.abs() + fb.abs());

    // Seed the recursion with a few panels so narrow features are not missed
    // by the first five-point estimate.
    const SEED_PANELS: usize = 8;
    let tol = abs_tol.max(rel_tol * magnitude).max(f64::MIN_POSITIVE);
    let width = (hi - lo) / SEED_PANELS as f64;
    let mut state = State {
        evaluations: 3,
        error: 0.0,
    };
    let mut total = 0.0;
    for k in 0..SEED_PANELS {
        let x0 = lo + k as f64 * width;
        let x1 = if k + 1 == SEED_PANELS { hi } else { x0 + width };
        let f0 = if k == 0 { fa } else { f(x0) };
        let f1 = if k + 1 == SEED_PANELS { fb } else { f(x1) };
        let xm = 0.5 * (x0 + x1);
        let fxm = f(xm);
        state.evaluations += 2;
        let s = (x1 - x0) / 6.0 * (f0 + 4.0 * fxm + f1);
        total += recurse(
            &f,
            x0,
            x1,
            f0,
            fxm,
            f1,
            s,
            tol / SEED_PANELS as f64,
            MAX_DEPTH,
            &mut state,
        );
    }

    Integral {
        value: sign * total,
        error_estimate: state.error,
        evaluations: state.evaluations,
    }
}

/// Convenience wrapper using [`DEFAULT_TOL`] for both tolerances.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    adaptive_simpson(f, a, b, DEFAULT_TOL, DEFAULT_TOL).value
}

struct State {
    evaluations: usize,
    error: f64,
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    state: &mut State,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    state.evaluations += 2;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0
        || delta.abs() <= 15.0 * tol
        || m <= a
        || m >= b
        || state.evaluations > MAX_EVALUATIONS
    {
        state.error += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, state)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, state)
}

/// Composite Simpson rule on uniformly spaced samples with spacing `h`.
///
/// An even number of intervals uses plain Simpson; an odd number closes the
/// last three intervals with Simpson's 3/8 rule. Two samples fall back to the
/// trapezoid rule.
pub fn simpson_samples(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (values[0] + values[1]),
        3 => h / 3.0 * (values[0] + 4.0 * values[1] + values[2]),
        _ => {
            let intervals = n - 1;
            let (simpson_end, tail) = if intervals.is_multiple_of(2) {
                (n - 1, false)
            } else {
                (n - 4, true)
            };
            let mut acc = values[0] + values[simpson_end];
            for (i, v) in values.iter().enumerate().take(simpson_end).skip(1) {
                acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            let mut total = h / 3.0 * acc;
            if tail {
                let k = simpson_end;
                total += 3.0 * h / 8.0
                    * (values[k] + 3.0 * values[k + 1] + 3.0 * values[k + 2] + values[k + 3]);
            }
            total
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| 3.0 * x * x + 2.0 * x + 1.0, 0.0, 2.0);
        assert!((v - 14.0).abs() < 1e-13);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let a = integrate(f64::sin, 0.0, PI);
        let b = integrate(f64::sin, PI, 0.0);
        assert!((a - 2.0).abs() < 1e-11);
        assert!((a + b).abs() < 1e-15);
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        let v = integrate(|t| (-2.0 * t).exp(), 0.0, 1.0);
        let exact = (1.0 - (-2.0f64).exp()) / 2.0;
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn endpoint_power_singularity() {
        // (1 - t)^{1.5} has an unbounded second derivative at t = 1.
        let v = integrate(|t: f64| (1.0 - t).max(0.0).powf(1.5), 0.0, 1.0);
        assert!((v - 0.4).abs() < 1e-10);
    }

    #[test]
    fn sampled_simpson_even_and_odd_interval_counts() {
        for n in [5usize, 6, 101, 102] {
            let h = 1.0 / (n - 1) as f64;
            let vals: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(3)).collect();
            assert!((simpson_samples(&vals, h) - 0.25).abs() < 1e-12, "n = {n}");
        }
    }
}
