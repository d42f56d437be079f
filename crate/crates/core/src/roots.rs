//! Bracketing root finders and a golden-section maximizer.

use thiserror::Error;

pub const BISECTION_ABS_TOL: f64 = 1e-13;
const INITIAL_STEP: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("no change of sign on [{a}, {b}]: f(a) = {fa}, f(b) = {fb}")]
    NoSignChange { a: f64, fa: f64, b: f64, fb: f64 },
    #[error("function is not finite at {x}")]
    NotFinite { x: f64 },
}

/// Bisection on `[a, b]` until the bracket is narrower than `abs_tol`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64, RootError> {
    let (mut lo, mut hi) = (a, b);
    let mut flo = f(lo);
    let fhi = f(hi);
    if !flo.is_finite() {
        return Err(RootError::NotFinite { x: lo });
    }
    if !fhi.is_finite() {
        return Err(RootError::NotFinite { x: hi });
    }
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(RootError::NoSignChange {
            a,
            fa: flo,
            b,
            fb: fhi,
        });
    }
    while (hi - lo).abs() > abs_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        let fm = f(mid);
        if !fm.is_finite() {
            return Err(RootError::NotFinite { x: mid });
        }
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// First positive zero of `f` on `(0, t_max]`.
///
/// Scans forward from `t = 0` with a step that starts at `1e-3` and doubles
/// after every cell without a sign change, then bisects the first bracketing
/// cell. Returns `None` when no sign change is seen before `t_max`.
pub fn first_positive_zero<F: Fn(f64) -> f64>(f: F, t_max: f64) -> Option<f64> {
    let mut t0 = 0.0;
    let mut f0 = f(t0);
    if f0 == 0.0 {
        // Skip a zero sitting exactly at the origin.
        t0 = f64::EPSILON;
        f0 = f(t0);
    }
    let mut step = INITIAL_STEP;
    while t0 < t_max {
        let t1 = (t0 + step).min(t_max);
        let f1 = f(t1);
        if !f1.is_finite() {
            return None;
        }
        if f1 == 0.0 || f1.signum() != f0.signum() {
            // A doubled step may have jumped across two zeros; rescan the
            // cell at the initial resolution to find the first crossing.
            if step > INITIAL_STEP {
                let fine = ((t1 - t0) / INITIAL_STEP).ceil() as usize;
                let h = (t1 - t0) / fine as f64;
                let mut a = t0;
                let mut fa = f0;
                for k in 1..=fine {
                    let b = if k == fine { t1 } else { t0 + k as f64 * h };
                    let fb = f(b);
                    if fb == 0.0 || fb.signum() != fa.signum() {
                        return bisect(&f, a, b, BISECTION_ABS_TOL).ok();
                    }
                    a = b;
                    fa = fb;
                }
            }
            return bisect(&f, t0, t1, BISECTION_ABS_TOL).ok();
        }
        t0 = t1;
        f0 = f1;
        step *= 2.0;
    }
    None
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
///
/// Returns `(argmax, max)`; the endpoints are included in the comparison so a
/// boundary maximum is reported exactly.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > abs_tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    let mid = 0.5 * (lo + hi);
    let mut best = (mid, f(mid));
    for x in [a, b] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn bisect_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bisect_rejects_same_sign() {
        assert!(matches!(
            bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12),
            Err(RootError::NoSignChange { .. })
        ));
    }

    #[test]
    fn first_zero_of_cosine() {
        let z = first_positive_zero(f64::cos, 100.0).unwrap();
        assert!((z - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn first_zero_not_skipped_by_doubling() {
        // Three zeros inside one doubled cell; the rescan must return the first.
        let z = first_positive_zero(|t| (t - 3.0) * (t - 3.01) * (t - 3.02), 100.0).unwrap();
        assert!((z - 3.0).abs() < 1e-12);
    }

    #[test]
    fn no_zero_before_limit() {
        assert!(first_positive_zero(|t| 1.0 + t, 50.0).is_none());
    }

    #[test]
    fn golden_interior_and_boundary() {
        let (x, fx) = golden_max(|t| t * (1.0 - t), 0.0, 1.0, 1e-12);
        assert!((x - 0.5).abs() < 1e-6);
        assert!((fx - 0.25).abs() < 1e-12);
        let (x, fx) = golden_max(|t| 1.0 - t, 0.0, 1.0, 1e-12);
        assert_eq!(x, 0.0);
        assert_eq!(fx, 1.0);
    }
}
