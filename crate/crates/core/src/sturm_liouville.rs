//! Principal eigenvalue of the one-dimensional weighted p-Laplacian
//!
//! ```text
//! (a |φ'|^{p-2} φ')' + μ a |φ|^{p-2} φ = 0,   φ(0) = 0,   φ'(D) = 0
//! ```
//!
//! by shooting on `(u, v) = (φ, a|φ'|^{p-2}φ')` and bisecting in `μ`, plus a
//! finite-volume Sturm-sequence oracle for `p = 2`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::model_space::{ball_radius_or_inf, s_bar, ModelError};
use crate::ode::{Dopri5, OdeError, Tolerances};
use crate::profile::{MonotoneCubic, SampleTable, SampledProfile};
use crate::quadrature::simpson_samples;

/// Relative width of the final `μ` bracket.
pub const BRACKET_REL_WIDTH: f64 = 1e-12;
/// Samples in the returned eigenfunction.
pub const PHI_SAMPLES: usize = 2049;
/// Distance from a vanishing endpoint at which integration stops.
pub const ENDPOINT_GAP: f64 = 1e-9;
/// Densities below this fraction of `a(0)` at `D` are treated as vanishing there.
const DEGENERATE_RATIO: f64 = 1e-12;
/// Points at which a density is checked for positivity.
const POSITIVITY_PROBES: usize = 512;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("density is not positive at t = {t} (a = {value})")]
    NonPositiveDensity { t: f64, value: f64 },
    #[error("integration failed: {0}")]
    Integration(#[from] OdeError),
    #[error("no eigenvalue bracket below mu_max = {mu_max}")]
    NoConvergence { mu_max: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Weight `a(t)` of the radial measure on `[0, D]`.
#[derive(Clone)]
pub enum DensityProfile {
    Constant(f64),
    /// `scale · s̄_{κ,λ}(t)^{N-1}`.
    Model {
        big_n: f64,
        kappa: f64,
        lambda: f64,
        scale: f64,
    },
    Sampled(MonotoneCubic),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for DensityProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityProfile::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            DensityProfile::Model {
                big_n,
                kappa,
                lambda,
                scale,
            } => f
                .debug_struct("Model")
                .field("big_n", big_n)
                .field("kappa", kappa)
                .field("lambda", lambda)
                .field("scale", scale)
                .finish(),
            DensityProfile::Sampled(s) => f.debug_tuple("Sampled").field(s.table()).finish(),
            DensityProfile::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl DensityProfile {
    pub fn unit() -> Self {
        DensityProfile::Constant(1.0)
    }

    pub fn model(big_n: f64, kappa: f64, lambda: f64) -> Self {
        DensityProfile::Model {
            big_n,
            kappa,
            lambda,
            scale: 1.0,
        }
    }

    pub fn sampled(table: SampleTable) -> Result<Self, SolverError> {
        MonotoneCubic::new(table)
            .map(DensityProfile::Sampled)
            .map_err(|e| SolverError::InvalidInput(e.to_string()))
    }

    pub fn function<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        DensityProfile::Function(Arc::new(f))
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            DensityProfile::Constant(c) => *c,
            DensityProfile::Model {
                big_n,
                kappa,
                lambda,
                scale,
            } => scale * s_bar(*kappa, *lambda, t).powf(big_n - 1.0),
            DensityProfile::Sampled(s) => s.eval(t),
            DensityProfile::Function(f) => f(t),
        }
    }

    /// The same density multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            DensityProfile::Constant(v) => DensityProfile::Constant(c * v),
            DensityProfile::Model {
                big_n,
                kappa,
                lambda,
                scale,
            } => DensityProfile::Model {
                big_n: *big_n,
                kappa: *kappa,
                lambda: *lambda,
                scale: c * scale,
            },
            DensityProfile::Sampled(s) => {
                let mut table = s.table().clone();
                table.values.iter_mut().for_each(|v| *v *= c);
                DensityProfile::Sampled(
                    MonotoneCubic::new(table).expect("scaling keeps a valid table"),
                )
            }
            DensityProfile::Function(f) => {
                let f = Arc::clone(f);
                DensityProfile::Function(Arc::new(move |t| c * f(t)))
            }
        }
    }

    /// Checks `a > 0` on `[0, D)` at a fixed set of probes and `a(D) >= 0`.
    pub fn validate(&self, d: f64) -> Result<(), SolverError> {
        for k in 0..POSITIVITY_PROBES {
            let t = d * k as f64 / POSITIVITY_PROBES as f64;
            let value = self.value(t);
            if !(value > 0.0) || !value.is_finite() {
                return Err(SolverError::NonPositiveDensity { t, value });
            }
        }
        let end = self.value(d);
        if !(end >= 0.0) || !end.is_finite() {
            return Err(SolverError::NonPositiveDensity { t: d, value: end });
        }
        Ok(())
    }
}

/// Outcome of a single shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shot {
    pub phi_end: f64,
    pub dphi_end: f64,
    /// First `t` at which `φ'` vanishes.
    pub first_critical: Option<f64>,
}

/// Solver diagnostics attached to every eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Diagnostics {
    /// The density vanishes at `D`; integration stopped at `D - ENDPOINT_GAP`.
    pub degenerate_endpoint: bool,
    /// Bisection saw the event time increase with `μ`.
    pub non_monotone: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub mu: f64,
    /// Eigenfunction on a uniform grid of `[0, D]`, normalized to `max φ = 1`.
    pub phi: SampleTable,
    /// `φ'` on the same grid.
    pub dphi: Vec<f64>,
    pub bracket: (f64, f64),
    pub iterations: usize,
    /// Flux residual `|φ'(D)|^{p-1}` after normalization; `|φ'(D)|` itself
    /// is only the `(p-1)`-th root of the bracket error.
    pub endpoint_residual: f64,
    pub diagnostics: Diagnostics,
}

struct Problem<'a> {
    p: f64,
    density: &'a DensityProfile,
    a0: f64,
    end: f64,
    degenerate: bool,
    solver: Dopri5,
}

impl<'a> Problem<'a> {
    fn new(p: f64, density: &'a DensityProfile, d: f64) -> Result<Self, SolverError> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(SolverError::InvalidInput(format!(
                "p = {p} must lie in (1, ∞)"
            )));
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(SolverError::InvalidInput(format!(
                "D = {d} must be positive and finite"
            )));
        }
        density.validate(d)?;
        let a0 = density.value(0.0);
        let degenerate = density.value(d) <= DEGENERATE_RATIO * a0;
        let end = if degenerate { d - ENDPOINT_GAP } else { d };
        Ok(Problem {
            p,
            density,
            a0,
            end,
            degenerate,
            solver: Dopri5::new(Tolerances::default()),
        })
    }

    fn rhs(&self, mu: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + '_ {
        let q = 1.0 / (self.p - 1.0);
        let pm1 = self.p - 1.0;
        move |t, y| {
            let b = self.density.value(t) / self.a0;
            let r = y[1] / b;
            let du = r.abs().powf(q).copysign(r);
            let dv = -mu * b * y[0].abs().powf(pm1).copysign(y[0]);
            [du, dv]
        }
    }

    fn h0(&self) -> Option<f64> {
        Some(self.end * 1e-4)
    }

    /// Time at which `v` first reaches zero, if before the end of the interval.
    fn event_time(&self, mu: f64) -> Result<Option<f64>, SolverError> {
        let sol = self.solver.solve_with_event(
            self.rhs(mu),
            0.0,
            [0.0, 1.0],
            self.end,
            self.h0(),
            |_, y| y[1],
        )?;
        Ok(sol.event)
    }

    fn derivative(&self, t: f64, v: f64) -> f64 {
        let b = self.density.value(t) / self.a0;
        let r = v / b;
        r.abs().powf(1.0 / (self.p - 1.0)).copysign(r)
    }
}

/// Integrates from `φ(0) = 0`, `a φ'|φ'|^{p-2}(0) = a(0)` to `D`.
pub fn shoot(p: f64, density: &DensityProfile, mu: f64, d: f64) -> Result<Shot, SolverError> {
    if !(mu >= 0.0) {
        return Err(SolverError::InvalidInput(format!(
            "mu = {mu} must be non-negative"
        )));
    }
    let pb = Problem::new(p, density, d)?;
    let first =
        pb.solver
            .solve_with_event(pb.rhs(mu), 0.0, [0.0, 1.0], pb.end, pb.h0(), |_, y| y[1])?;
    let (first_critical, sol) = match first.event {
        None => (None, first),
        Some(te) => {
            let rest = pb
                .solver
                .solve(pb.rhs(mu), te, first.y, pb.end, Some(first.last_h))?;
            (Some(te), rest)
        }
    };
    Ok(Shot {
        phi_end: sol.y[0],
        dphi_end: pb.derivative(pb.end, sol.y[1]),
        first_critical,
    })
}

/// Smallest `μ > 0` with `φ'(D) = 0`.
pub fn principal_eigenvalue(
    p: f64,
    density: &DensityProfile,
    d: f64,
) -> Result<EigenResult, SolverError> {
    let pb = Problem::new(p, density, d)?;
    let mu_max = 1e6 / d.powf(p);
    let mut iterations = 0usize;
    let mut non_monotone = false;

    let mut hi = (p - 1.0) * (std::f64::consts::PI / (2.0 * d)).powf(p);
    let mut lo = 0.0;
    let mut hi_event = loop {
        iterations += 1;
        match pb.event_time(hi)? {
            Some(te) => break te,
            None => {
                lo = hi;
                hi *= 2.0;
                if hi > mu_max {
                    return Err(SolverError::NoConvergence { mu_max });
                }
            }
        }
    };

    while hi - lo > BRACKET_REL_WIDTH * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        match pb.event_time(mid)? {
            Some(te) => {
                // A smaller μ must fire later.
                if te < hi_event - 1e-9 * d {
                    non_monotone = true;
                }
                hi = mid;
                hi_event = te;
            }
            None => lo = mid,
        }
    }

    let mu = 0.5 * (lo + hi);
    let (phi, dphi) = sample_eigenfunction(&pb, lo, d)?;
    let endpoint_residual = dphi.last().copied().unwrap_or(0.0).abs().powf(p - 1.0);
    Ok(EigenResult {
        mu,
        phi,
        dphi,
        bracket: (lo, hi),
        iterations,
        endpoint_residual,
        diagnostics: Diagnostics {
            degenerate_endpoint: pb.degenerate,
            non_monotone,
        },
    })
}

fn sample_eigenfunction(
    pb: &Problem<'_>,
    mu: f64,
    d: f64,
) -> Result<(SampleTable, Vec<f64>), SolverError> {
    let n = PHI_SAMPLES;
    let h = d / (n - 1) as f64;
    let mut u = vec![0.0; n];
    let mut du = vec![0.0; n];
    du[0] = pb.derivative(0.0, 1.0);
    let mut y = [0.0, 1.0];
    let mut t = 0.0;
    let mut step = pb.h0();
    let rhs = pb.rhs(mu);
    for i in 1..n {
        let target = if i + 1 == n {
            pb.end
        } else {
            (i as f64 * h).min(pb.end)
        };
        let sol = pb.solver.solve(&rhs, t, y, target, step)?;
        y = sol.y;
        t = target;
        step = Some(sol.last_h);
        u[i] = y[0];
        du[i] = pb.derivative(t, y[1]);
    }
    let scale = u.iter().cloned().fold(0.0, f64::max);
    if scale > 0.0 {
        u.iter_mut().for_each(|x| *x /= scale);
        du.iter_mut().for_each(|x| *x /= scale);
    }
    Ok((
        SampleTable {
            start: 0.0,
            end: d,
            values: u,
        },
        du,
    ))
}

/// `μ_{p,N,κ,λ,D}`: density `s̄_{κ,λ}^{N-1}` on `(0, D]`, `D <= C̄_{κ,λ}`.
pub fn model_eigenvalue(
    p: f64,
    big_n: f64,
    kappa: f64,
    lambda: f64,
    d: f64,
) -> Result<EigenResult, SolverError> {
    if !(big_n >= 2.0) || !big_n.is_finite() {
        return Err(ModelError::DimensionTooSmall(big_n).into());
    }
    let c = ball_radius_or_inf(kappa, lambda);
    if d > c * (1.0 + 1e-14) {
        return Err(ModelError::BeyondBallRadius { d, c }.into());
    }
    principal_eigenvalue(p, &DensityProfile::model(big_n, kappa, lambda), d.min(c))
}

/// `μ_{p,∞,D}`: constant density.
pub fn free_eigenvalue(p: f64, d: f64) -> Result<EigenResult, SolverError> {
    principal_eigenvalue(p, &DensityProfile::unit(), d)
}

/// Closed form `μ_{p,∞,D} = (π_p / 2D)^p` with `π_p = 2π (p-1)^{1/p} / (p sin(π/p))`.
pub fn free_eigenvalue_closed_form(p: f64, d: f64) -> f64 {
    use std::f64::consts::PI;
    let pi_p = 2.0 * PI * (p - 1.0).powf(1.0 / p) / (p * (PI / p).sin());
    (pi_p / (2.0 * d)).powf(p)
}

/// Smallest eigenvalue of the `p = 2` finite-volume discretization with `mesh` cells.
///
/// `K φ = μ M φ` with `K` the flux-form stiffness (`a` at cell faces), `M` the
/// lumped mass (`a` at nodes, half cell at the Neumann end), `φ_0 = 0`.
pub fn fd_oracle_p2(density: &DensityProfile, d: f64, mesh: usize) -> Result<f64, SolverError> {
    if mesh < 100 {
        return Err(SolverError::InvalidInput(format!(
            "mesh = {mesh} must be at least 100"
        )));
    }
    if !(d > 0.0) || !d.is_finite() {
        return Err(SolverError::InvalidInput(format!(
            "D = {d} must be positive and finite"
        )));
    }
    let h = d / mesh as f64;
    let sample = |t: f64| -> Result<f64, SolverError> {
        let value = density.value(t);
        if value > 0.0 && value.is_finite() {
            Ok(value)
        } else {
            Err(SolverError::NonPositiveDensity { t, value })
        }
    };
    let face: Vec<f64> = (0..mesh)
        .map(|i| sample((i as f64 + 0.5) * h))
        .collect::<Result<_, _>>()?;
    let node: Vec<f64> = (1..=mesh)
        .map(|i| sample(if i == mesh { d } else { i as f64 * h }))
        .collect::<Result<_, _>>()?;

    // Unknowns φ_1..φ_m, indexed 0..m-1.
    let m = mesh;
    let mass: Vec<f64> = (0..m)
        .map(|k| {
            if k + 1 == m {
                0.5 * node[k] * h
            } else {
                node[k] * h
            }
        })
        .collect();
    let mut diag = vec![0.0; m];
    let mut off = vec![0.0; m.saturating_sub(1)];
    for k in 0..m {
        let left = face[k] / h;
        let right = if k + 1 < m { face[k + 1] / h } else { 0.0 };
        diag[k] = (left + right) / mass[k];
        if k + 1 < m {
            off[k] = -face[k + 1] / h / (mass[k] * mass[k + 1]).sqrt();
        }
    }

    let upper = (0..m)
        .map(|k| {
            let l = if k > 0 { off[k - 1].abs() } else { 0.0 };
            let r = if k + 1 < m { off[k].abs() } else { 0.0 };
            diag[k] + l + r
        })
        .fold(0.0, f64::max);
    let (mut lo, mut hi) = (0.0, upper);
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(&diag, &off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Number of eigenvalues below `x` of the symmetric tridiagonal matrix.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for k in 0..diag.len() {
        let coupling = if k > 0 {
            off[k - 1] * off[k - 1] / q
        } else {
            0.0
        };
        q = diag[k] - x - coupling;
        if q == 0.0 {
            q = -f64::EPSILON * (diag[k].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// `∫ a|φ'|^p / ∫ a|φ|^p` on the sample grid of `phi`, with 5-point derivatives.
pub fn rayleigh_quotient(
    p: f64,
    density: &DensityProfile,
    phi: &SampleTable,
    d: f64,
) -> Result<f64, SolverError> {
    if (phi.end - d).abs() > 1e-12 * d.max(1.0) || phi.start != 0.0 {
        return Err(SolverError::InvalidInput(format!(
            "phi must be sampled on [0, {d}]"
        )));
    }
    let sampled =
        SampledProfile::new(phi.clone()).map_err(|e| SolverError::InvalidInput(e.to_string()))?;
    let h = phi.step();
    let n = phi.values.len();
    let mut num = Vec::with_capacity(n);
    let mut den = Vec::with_capacity(n);
    for (i, u) in phi.values.iter().enumerate() {
        let t = if i + 1 == n { d } else { i as f64 * h };
        let a = density.value(t);
        num.push(a * sampled.jet(t).d.abs().powf(p));
        den.push(a * u.abs().powf(p));
    }
    let denominator = simpson_samples(&den, h);
    if !(denominator > 0.0) {
        return Err(SolverError::InvalidInput(
            "phi has zero weighted p-norm".into(),
        ));
    }
    Ok(simpson_samples(&num, h) / denominator)
}
