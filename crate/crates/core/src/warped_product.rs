//! Weighted warped collars `[0, L] ×_w F` with radial weight `f`.
//!
//! The metric is `dt² + w(t)² h` with `(F, h)` Einstein, `Ric_h = (dim - 1) κ_F h`,
//! and the measure is `e^{-f} vol_g`. The slice `t = 0` is the boundary and
//! `t` is the distance to it on all of `[0, L]`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, Func, Jet};
use crate::model_space::{ball_radius_or_inf, unit_sphere_volume, EffectiveDim, ModelError};
use crate::profile::Profile;
use crate::quadrature::adaptive_simpson;
use crate::sturm_liouville::DensityProfile;

/// Probes used by [`build`] to certify `w > 0`.
const POSITIVITY_PROBES: usize = 1024;
/// Relative tolerance for collar and annulus volumes.
const VOLUME_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("fiber dimension {fiber} does not match n - 1 = {expected}")]
    DimensionMismatch { fiber: u32, expected: u32 },
    #[error("warping function is not positive at t = {t} (w = {value})")]
    NonPositiveWarping { t: f64, value: f64 },
    #[error("profile is not twice differentiable: {0}")]
    NotDifferentiable(String),
    #[error("t = {t} outside [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("N = n requires a constant weight f")]
    ConstantWeightRequired,
    #[error("N = {big_n} is below n = {n}")]
    DimensionBelowN { big_n: f64, n: u32 },
    #[error("t = L is not a boundary component")]
    NoSecondBoundary,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The cross-section `(F, h)`: only its dimension, Einstein constant and volume enter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec {
    pub dim: u32,
    pub einstein_constant: f64,
    pub total_volume: f64,
}

impl FiberSpec {
    /// Round unit sphere `S^dim`.
    pub fn unit_sphere(dim: u32) -> Self {
        FiberSpec {
            dim,
            einstein_constant: 1.0,
            total_volume: unit_sphere_volume(dim),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Radial,
    Fiber,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Boundary {
    Zero,
    L,
}

/// Parameters of the equality model a manifold was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidityTag {
    pub big_n: EffectiveDim,
    pub kappa: f64,
    pub lambda: f64,
    pub f0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarpedManifold {
    n: u32,
    fiber: FiberSpec,
    length: f64,
    w: Profile,
    f: Profile,
    second_boundary: bool,
    rigidity: Option<RigidityTag>,
}

/// Validates and assembles a warped collar.
pub fn build(
    n: u32,
    fiber: FiberSpec,
    length: f64,
    w: Profile,
    f: Profile,
    second_boundary: bool,
) -> Result<WarpedManifold, GeometryError> {
    if n < 2 || fiber.dim + 1 != n {
        return Err(GeometryError::DimensionMismatch {
            fiber: fiber.dim,
            expected: n.saturating_sub(1),
        });
    }
    if !(fiber.total_volume > 0.0) || !fiber.einstein_constant.is_finite() {
        return Err(GeometryError::InvalidParams(format!(
            "fiber volume {} must be positive and Einstein constant finite",
            fiber.total_volume
        )));
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(GeometryError::InvalidParams(format!(
            "L = {length} must be positive and finite"
        )));
    }
    for (name, profile) in [("w", &w), ("f", &f)] {
        if let Profile::Sampled(s) = profile {
            let (lo, hi) = s.domain();
            let slack = 1e-12 * length.max(1.0);
            if lo > slack || hi < length - slack {
                return Err(GeometryError::NotDifferentiable(format!(
                    "sample table for {name} covers [{lo}, {hi}], not [0, {length}]"
                )));
            }
        }
    }
    for k in 0..POSITIVITY_PROBES {
        let t = length * k as f64 / POSITIVITY_PROBES as f64;
        let value = w.value(t);
        if !(value > 0.0) || !value.is_finite() {
            return Err(GeometryError::NonPositiveWarping { t, value });
        }
    }
    for k in 0..=64 {
        let t = length * k as f64 / 64.0;
        let (jw, jf) = (w.jet(t), f.jet(t));
        let finite = [jw.d, jw.dd, jf.v, jf.d, jf.dd]
            .iter()
            .all(|x| x.is_finite());
        if !finite && t < length {
            return Err(GeometryError::NotDifferentiable(format!(
                "non-finite derivative at t = {t}"
            )));
        }
    }
    Ok(WarpedManifold {
        n,
        fiber,
        length,
        w,
        f,
        second_boundary,
        rigidity: None,
    })
}

impl WarpedManifold {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn fiber(&self) -> FiberSpec {
        self.fiber
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn w(&self) -> &Profile {
        &self.w
    }

    pub fn f(&self) -> &Profile {
        &self.f
    }

    pub fn second_boundary(&self) -> bool {
        self.second_boundary
    }

    pub fn rigidity(&self) -> Option<RigidityTag> {
        self.rigidity
    }

    fn check_t(&self, t: f64) -> Result<(), GeometryError> {
        if t >= 0.0 && t <= self.length {
            Ok(())
        } else {
            Err(GeometryError::OutOfRange {
                t,
                lo: 0.0,
                hi: self.length,
            })
        }
    }

    fn jets(&self, t: f64) -> (Jet, Jet) {
        (self.w.jet(t), self.f.jet(t))
    }

    /// `Ric_g` on a unit radial or fiber vector at `t`.
    pub fn ricci(&self, t: f64, dir: Direction) -> Result<f64, GeometryError> {
        self.check_t(t)?;
        let w = self.w.jet(t);
        let n = self.n as f64;
        Ok(match dir {
            Direction::Radial => -(n - 1.0) * w.dd / w.v,
            Direction::Fiber => {
                -w.dd / w.v + (n - 2.0) * (self.fiber.einstein_constant - w.d * w.d) / (w.v * w.v)
            }
        })
    }

    /// `Hess f` on a unit radial or fiber vector at `t`.
    pub fn hess_f(&self, t: f64, dir: Direction) -> Result<f64, GeometryError> {
        self.check_t(t)?;
        let (w, f) = self.jets(t);
        Ok(match dir {
            Direction::Radial => f.dd,
            Direction::Fiber => f.d * w.d / w.v,
        })
    }
}

/// `θ_f(t) = e^{-f(t)} (w(t)/w(0))^{n-1}`.
pub fn theta_f(m: &WarpedManifold, t: f64) -> Result<f64, GeometryError> {
    m.check_t(t)?;
    let ratio = m.w.value(t) / m.w.value(0.0);
    Ok((-m.f.value(t)).exp() * ratio.powi(m.n as i32 - 1))
}

/// `(log θ_f)'(t) = (n-1) w'/w - f'`.
pub fn theta_f_log_derivative(m: &WarpedManifold, t: f64) -> Result<f64, GeometryError> {
    m.check_t(t)?;
    let (w, f) = m.jets(t);
    Ok((m.n as f64 - 1.0) * w.d / w.v - f.d)
}

/// `Ric^N_f` on a unit radial or fiber vector at `t ∈ [0, L]`.
///
/// The `(f')²/(N-n)` term is applied to the radial direction only; it is
/// dropped for `N = ∞`, and `N = n` requires a constant `f`.
pub fn bakry_emery_ricci(
    m: &WarpedManifold,
    big_n: EffectiveDim,
    t: f64,
    dir: Direction,
) -> Result<f64, GeometryError> {
    let correction = weight_correction(m, big_n, t)?;
    let base = m.ricci(t, dir)? + m.hess_f(t, dir)?;
    Ok(match dir {
        Direction::Radial => base - correction,
        Direction::Fiber => base,
    })
}

/// `(f')² / (N - n)` at `t`, with the conventions for `N = n` and `N = ∞`.
fn weight_correction(
    m: &WarpedManifold,
    big_n: EffectiveDim,
    t: f64,
) -> Result<f64, GeometryError> {
    match big_n {
        EffectiveDim::Infinite => Ok(0.0),
        EffectiveDim::Finite(big_n) => {
            let n = m.n as f64;
            if big_n < n {
                Err(GeometryError::DimensionBelowN { big_n, n: m.n })
            } else if big_n == n {
                if m.f.is_constant() {
                    Ok(0.0)
                } else {
                    Err(GeometryError::ConstantWeightRequired)
                }
            } else {
                let fd = m.f.jet(t).d;
                Ok(fd * fd / (big_n - n))
            }
        }
    }
}

/// `H_f = H + g(∇f, u)` for the inner unit normal `u` of the chosen boundary slice.
pub fn weighted_mean_curvature(
    m: &WarpedManifold,
    boundary: Boundary,
) -> Result<f64, GeometryError> {
    let n1 = m.n as f64 - 1.0;
    match boundary {
        Boundary::Zero => {
            let (w, f) = m.jets(0.0);
            Ok(-n1 * w.d / w.v + f.d)
        }
        Boundary::L => {
            if !m.second_boundary {
                return Err(GeometryError::NoSecondBoundary);
            }
            let (w, f) = m.jets(m.length);
            Ok(n1 * w.d / w.v - f.d)
        }
    }
}

/// Curvature samples against the lower bound `(N-1)κ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureReport {
    pub t: Vec<f64>,
    pub radial_samples: Vec<f64>,
    pub fiber_samples: Vec<f64>,
    /// `min` over samples and both directions of `Ric^N_f - (N-1)κ`.
    pub margin: f64,
    pub h_f_0: f64,
    pub h_f_l: Option<f64>,
}

impl CurvatureReport {
    /// Slack in `Ric^N_f >= (N-1)κ` and `H_f >= (N-1)λ` on every boundary slice.
    pub fn gate_margin(&self, big_n: EffectiveDim, lambda: f64) -> f64 {
        let bound = lower_bound(big_n, lambda);
        let mut margin = self.margin.min(self.h_f_0 - bound);
        if let Some(h) = self.h_f_l {
            margin = margin.min(h - bound);
        }
        margin
    }
}

/// `(N-1)c`, with the `N = ∞` family pinned to `c = 0`.
pub fn lower_bound(big_n: EffectiveDim, c: f64) -> f64 {
    match big_n {
        EffectiveDim::Finite(big_n) => (big_n - 1.0) * c,
        EffectiveDim::Infinite => 0.0,
    }
}

/// Samples `Ric^N_f` at `grid` interior points `t_i = i L / (grid + 1)`.
///
/// Mixed radial/fiber directions are not sampled: the curvature operators are
/// diagonal in the radial/fiber splitting, so the extremes sit on the axes.
pub fn curvature_margin(
    m: &WarpedManifold,
    big_n: EffectiveDim,
    kappa: f64,
    grid: usize,
) -> Result<CurvatureReport, GeometryError> {
    if grid < 64 {
        return Err(GeometryError::InvalidParams(format!(
            "grid = {grid} must be at least 64"
        )));
    }
    if big_n.is_infinite() && kappa != 0.0 {
        return Err(GeometryError::InvalidParams(format!(
            "N = ∞ requires κ = 0, got {kappa}"
        )));
    }
    let bound = lower_bound(big_n, kappa);
    let mut t = Vec::with_capacity(grid);
    let mut radial = Vec::with_capacity(grid);
    let mut fiber = Vec::with_capacity(grid);
    let mut margin = f64::INFINITY;
    for i in 1..=grid {
        let ti = m.length * i as f64 / (grid + 1) as f64;
        let r = bakry_emery_ricci(m, big_n, ti, Direction::Radial)?;
        let f = bakry_emery_ricci(m, big_n, ti, Direction::Fiber)?;
        margin = margin.min(r - bound).min(f - bound);
        if r.is_nan() || f.is_nan() {
            margin = f64::NEG_INFINITY;
        }
        t.push(ti);
        radial.push(r);
        fiber.push(f);
    }
    let h_f_l = if m.second_boundary {
        Some(weighted_mean_curvature(m, Boundary::L)?)
    } else {
        None
    };
    Ok(CurvatureReport {
        t,
        radial_samples: radial,
        fiber_samples: fiber,
        margin,
        h_f_0: weighted_mean_curvature(m, Boundary::Zero)?,
        h_f_l,
    })
}

fn volume_density(m: &WarpedManifold, t: f64) -> f64 {
    (-m.f.value(t)).exp() * m.w.value(t).powi(m.n as i32 - 1)
}

fn integrate_density(m: &WarpedManifold, a: f64, b: f64) -> f64 {
    adaptive_simpson(|t| volume_density(m, t), a, b, 0.0, VOLUME_TOL).value
}

/// `m_f(B_r(∂M)) = vol(F) ∫_0^r e^{-f} w^{n-1} dt`.
pub fn collar_volume(m: &WarpedManifold, r: f64) -> Result<f64, GeometryError> {
    weighted_volume(m, 0.0, r)
}

/// `m_f` of the slab `[a, b] × F`, `0 <= a <= b <= L`.
pub fn weighted_volume(m: &WarpedManifold, a: f64, b: f64) -> Result<f64, GeometryError> {
    m.check_t(a)?;
    m.check_t(b)?;
    if a > b {
        return Err(GeometryError::InvalidParams(format!(
            "slab needs a <= b, got a = {a}, b = {b}"
        )));
    }
    Ok(m.fiber.total_volume * integrate_density(m, a, b))
}

/// `m_{f,∂M}(∂M) = e^{-f(0)} w(0)^{n-1} vol(F)`.
pub fn boundary_measure(m: &WarpedManifold) -> f64 {
    m.fiber.total_volume * volume_density(m, 0.0)
}

/// Measure, boundary measure and distance range of the annulus `(a, b) × F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Annulus {
    pub volume: f64,
    pub boundary_area: f64,
    pub delta1: f64,
    pub delta2: f64,
}

pub fn annulus_quantities(m: &WarpedManifold, a: f64, b: f64) -> Result<Annulus, GeometryError> {
    if !(a > 0.0 && a < b && b <= m.length) {
        return Err(GeometryError::InvalidParams(format!(
            "annulus needs 0 < a < b <= L = {}, got a = {a}, b = {b}",
            m.length
        )));
    }
    let vol = m.fiber.total_volume;
    Ok(Annulus {
        volume: vol * integrate_density(m, a, b),
        boundary_area: vol * (volume_density(m, a) + volume_density(m, b)),
        delta1: a,
        delta2: b,
    })
}

/// Radial measure `e^{-f} w^{n-1}` per unit fiber volume.
pub fn radial_density(m: &WarpedManifold) -> DensityProfile {
    let (w, f, k) = (m.w.clone(), m.f.clone(), m.n as i32 - 1);
    DensityProfile::function(move |t| (-f.value(t)).exp() * w.value(t).powi(k))
}

/// Einstein constant that makes the fiber directions of the equality model
/// satisfy `Ric^N_f = (N-1)κ` exactly.
///
/// With `(w')² + κ w² = κ + λ²` the fiber value is
/// `(N-1)κ + ((n-2)κ_F - (N-2)(κ+λ²)) / w²`.
pub fn rigidity_fiber_constant(n: u32, big_n: EffectiveDim, kappa: f64, lambda: f64) -> f64 {
    let c = kappa + lambda * lambda;
    match big_n {
        EffectiveDim::Finite(big_n) if n >= 3 => (big_n - 2.0) * c / (n as f64 - 2.0),
        _ => c,
    }
}

/// `w = s_{κ,λ}`, `f = f0 - (N-n) log s_{κ,λ}`, round fiber volume.
///
/// For `N = ∞` only `κ = λ = 0` is accepted, giving the product `w ≡ 1`, `f ≡ f0`.
pub fn make_rigidity_model(
    n: u32,
    big_n: EffectiveDim,
    kappa: f64,
    lambda: f64,
    length: f64,
    f0: f64,
) -> Result<WarpedManifold, GeometryError> {
    if n < 2 {
        return Err(GeometryError::InvalidParams(format!(
            "n = {n} must be at least 2"
        )));
    }
    let (w, f) = match big_n {
        EffectiveDim::Infinite => {
            if kappa != 0.0 || lambda != 0.0 {
                return Err(GeometryError::InvalidParams(format!(
                    "the N = ∞ model needs κ = λ = 0, got κ = {kappa}, λ = {lambda}"
                )));
            }
            (Expr::Const(1.0), Expr::Const(f0))
        }
        EffectiveDim::Finite(big_n) => {
            if big_n < n as f64 {
                return Err(GeometryError::DimensionBelowN { big_n, n });
            }
            let c = ball_radius_or_inf(kappa, lambda);
            if length >= c {
                return Err(GeometryError::InvalidParams(format!(
                    "L = {length} must be below C̄ = {c} for κ = {kappa}, λ = {lambda}"
                )));
            }
            let s = Expr::Model { kappa, lambda };
            let f = if big_n == n as f64 {
                Expr::Const(f0)
            } else {
                Expr::Sub(
                    Box::new(Expr::Const(f0)),
                    Box::new(Expr::Mul(
                        Box::new(Expr::Const(big_n - n as f64)),
                        Box::new(Expr::Call(Func::Log, Box::new(s.clone()))),
                    )),
                )
            };
            (s, f)
        }
    };
    let fiber = FiberSpec {
        dim: n - 1,
        einstein_constant: rigidity_fiber_constant(n, big_n, kappa, lambda),
        total_volume: unit_sphere_volume(n - 1),
    };
    let mut m = build(n, fiber, length, Profile::Expr(w), Profile::Expr(f), false)?;
    m.rigidity = Some(RigidityTag {
        big_n,
        kappa,
        lambda,
        f0,
    });
    Ok(m)
}

/// `[0, L] × S^{n-1}` with `w ≡ 1`, `f ≡ 0`.
pub fn make_product(n: u32, length: f64) -> Result<WarpedManifold, GeometryError> {
    if n < 2 {
        return Err(GeometryError::InvalidParams(format!(
            "n = {n} must be at least 2"
        )));
    }
    let mut m = build(
        n,
        FiberSpec::unit_sphere(n - 1),
        length,
        Profile::constant(1.0),
        Profile::constant(0.0),
        false,
    )?;
    m.rigidity = Some(RigidityTag {
        big_n: EffectiveDim::Infinite,
        kappa: 0.0,
        lambda: 0.0,
        f0: 0.0,
    });
    Ok(m)
}

impl fmt::Display for WarpedManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[0, {}] x_w F^{} (n = {})",
            self.length, self.fiber.dim, self.n
        )
    }
}
