//! Scalar model functions of the constant-curvature comparison spaces.
//!
//! `s_{κ,λ}` is the solution of `φ'' + κφ = 0` with `φ(0) = 1`, `φ'(0) = -λ`: the
//! Jacobi amplitude along a normal geodesic leaving a boundary whose normalized
//! mean curvature is `λ`, in a space of constant curvature `κ`. Everything else
//! here (critical radii, the collar volume profile `s_{N,κ,λ}` and the
//! tail-volume constant `C(N,κ,λ,D)`) is built from it.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::quadrature::{adaptive_simpson, integrate};
use crate::roots::golden_max;

/// Below this value of `|κ| t²` the trigonometric closed forms switch to series.
const SERIES_SWITCH: f64 = 1e-8;
/// Cells in the uniform scan for the tail-ratio supremum.
pub const SCAN_CELLS: usize = 4096;
/// Admissible disagreement between the generic and closed-form tail constant.
const CROSS_CHECK_REL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension parameter N = {0} must be at least 2")]
    DimensionTooSmall(f64),
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("D = {d} exceeds the ball radius C = {c}")]
    BeyondBallRadius { d: f64, c: f64 },
    #[error(
        "C(N, κ, λ, ∞) is finite only for κ < 0 and λ = sqrt(|κ|); got κ = {kappa}, λ = {lambda}"
    )]
    InfiniteHorizon { kappa: f64, lambda: f64 },
    #[error("generic and closed-form tail constants disagree: {generic} vs {closed}")]
    CrossCheck { generic: f64, closed: f64 },
}

/// The weight dimension `N ∈ [n, ∞]`, with an explicit infinite sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EffectiveDim {
    Finite(f64),
    Infinite,
}

impl EffectiveDim {
    pub fn finite(self) -> Option<f64> {
        match self {
            EffectiveDim::Finite(n) => Some(n),
            EffectiveDim::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, EffectiveDim::Infinite)
    }
}

impl From<f64> for EffectiveDim {
    fn from(v: f64) -> Self {
        if v.is_infinite() && v > 0.0 {
            EffectiveDim::Infinite
        } else {
            EffectiveDim::Finite(v)
        }
    }
}

impl fmt::Display for EffectiveDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EffectiveDim::Finite(n) => write!(f, "{n}"),
            EffectiveDim::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for EffectiveDim {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            EffectiveDim::Finite(n) => s.serialize_f64(*n),
            EffectiveDim::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for EffectiveDim {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(EffectiveDim::from(v)),
            Raw::Text(s) => match s.trim().to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "+inf" | "∞" => Ok(EffectiveDim::Infinite),
                other => other.parse::<f64>().map(EffectiveDim::from).map_err(|_| {
                    serde::de::Error::custom(format!("expected a number or \"inf\", got {s:?}"))
                }),
            },
        }
    }
}

/// The tuple `(n, N, κ, λ)` carrying the curvature hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: u32,
    #[serde(rename = "N")]
    pub big_n: EffectiveDim,
    pub kappa: f64,
    pub lambda: f64,
}

impl ModelParams {
    pub fn new(n: u32, big_n: EffectiveDim, kappa: f64, lambda: f64) -> Result<Self, ModelError> {
        let p = ModelParams {
            n,
            big_n,
            kappa,
            lambda,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n < 2 {
            return Err(ModelError::InvalidParams(format!(
                "n = {} must be at least 2",
                self.n
            )));
        }
        if let EffectiveDim::Finite(big_n) = self.big_n {
            if !(big_n >= self.n as f64) {
                return Err(ModelError::InvalidParams(format!(
                    "N = {big_n} must satisfy N >= n = {}",
                    self.n
                )));
            }
        }
        if !self.kappa.is_finite() || !self.lambda.is_finite() {
            return Err(ModelError::InvalidParams("κ and λ must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CurvatureClass {
    /// `s_{κ,λ}` has a positive zero.
    Ball,
    /// `s'_{κ,λ}` has a positive zero (or vanishes identically, for `κ = λ = 0`).
    Model,
    Neither,
}

impl fmt::Display for CurvatureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurvatureClass::Ball => "Ball",
            CurvatureClass::Model => "Model",
            CurvatureClass::Neither => "Neither",
        })
    }
}

/// Value and first derivative of a model function at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelValue {
    pub value: f64,
    pub derivative: f64,
}

/// `s_κ` (sine-like, `s(0) = 0`, `s'(0) = 1`) and its derivative `c_κ`.
pub fn s_kappa(kappa: f64, t: f64) -> ModelValue {
    ModelValue {
        value: sn(kappa, t),
        derivative: cs(kappa, t),
    }
}

/// `c_κ` (cosine-like, `c(0) = 1`, `c'(0) = 0`) and its derivative `-κ s_κ`.
pub fn c_kappa(kappa: f64, t: f64) -> ModelValue {
    ModelValue {
        value: cs(kappa, t),
        derivative: -kappa * sn(kappa, t),
    }
}

fn sn(kappa: f64, t: f64) -> f64 {
    let x = kappa * t * t;
    if x.abs() < SERIES_SWITCH {
        t * (1.0 - x / 6.0 + x * x / 120.0)
    } else if kappa > 0.0 {
        let r = kappa.sqrt();
        (r * t).sin() / r
    } else {
        let r = (-kappa).sqrt();
        (r * t).sinh() / r
    }
}

fn cs(kappa: f64, t: f64) -> f64 {
    let x = kappa * t * t;
    if x.abs() < SERIES_SWITCH {
        1.0 - x / 2.0 + x * x / 24.0
    } else if kappa > 0.0 {
        (kappa.sqrt() * t).cos()
    } else {
        ((-kappa).sqrt() * t).cosh()
    }
}

/// `s_{κ,λ}(t) = c_κ(t) - λ s_κ(t)` and its derivative `-κ s_κ(t) - λ c_κ(t)`.
pub fn s_kappa_lambda(kappa: f64, lambda: f64, t: f64) -> ModelValue {
    if kappa < 0.0 {
        let a = (-kappa).sqrt();
        if a * t > 1.0 {
            // Exponential form: cosh - (λ/a) sinh cancels catastrophically when λ ≈ a.
            let grow = (a * t).exp();
            let decay = (-a * t).exp();
            let r = lambda / a;
            return ModelValue {
                value: 0.5 * ((1.0 - r) * grow + (1.0 + r) * decay),
                derivative: 0.5 * ((a - lambda) * grow - (a + lambda) * decay),
            };
        }
    }
    let s = sn(kappa, t);
    let c = cs(kappa, t);
    ModelValue {
        value: c - lambda * s,
        derivative: -kappa * s - lambda * c,
    }
}

/// `s_{κ,λ}` has a positive zero: a geodesic ball of curvature `κ` has boundary
/// mean curvature `(n-1)λ`.
pub fn ball_condition(kappa: f64, lambda: f64) -> bool {
    kappa > 0.0 || (kappa == 0.0 && lambda > 0.0) || (kappa < 0.0 && lambda > (-kappa).sqrt())
}

/// `s'_{κ,λ}` has a positive zero before `s_{κ,λ}` vanishes.
pub fn model_condition(kappa: f64, lambda: f64) -> bool {
    (kappa > 0.0 && lambda < 0.0)
        || (kappa == 0.0 && lambda == 0.0)
        || (kappa < 0.0 && lambda > 0.0 && lambda < (-kappa).sqrt())
}

/// Ball / model / neither classification of `(κ, λ)`.
///
/// The two conditions overlap for `κ > 0, λ < 0`; that region is reported as
/// [`CurvatureClass::Model`]. Use [`ball_condition`] to ask whether `C_{κ,λ}` exists.
pub fn classify(kappa: f64, lambda: f64) -> CurvatureClass {
    if model_condition(kappa, lambda) {
        CurvatureClass::Model
    } else if ball_condition(kappa, lambda) {
        CurvatureClass::Ball
    } else {
        CurvatureClass::Neither
    }
}

/// `C_{κ,λ}`, the first positive zero of `s_{κ,λ}`, when the ball-condition holds.
pub fn ball_radius(kappa: f64, lambda: f64) -> Option<f64> {
    if !ball_condition(kappa, lambda) {
        return None;
    }
    let radius = if kappa > 0.0 {
        let r = kappa.sqrt();
        // cot(r t) = λ / r, first solution in (0, π / r).
        r.atan2(lambda) / r
    } else if kappa == 0.0 {
        1.0 / lambda
    } else {
        let a = (-kappa).sqrt();
        (a / lambda).atanh() / a
    };
    Some(radius)
}

/// `C̄_{κ,λ}`: the ball radius, or `+∞` when the ball-condition fails.
pub fn ball_radius_or_inf(kappa: f64, lambda: f64) -> f64 {
    ball_radius(kappa, lambda).unwrap_or(f64::INFINITY)
}

/// Outcome of the search for the first critical point of `s_{κ,λ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriticalRadius {
    Isolated(f64),
    /// `κ = λ = 0`: `s' ≡ 0`, so the critical radius is taken from the manifold.
    DegenerateFlat,
    Absent,
}

impl CriticalRadius {
    pub fn value(self) -> Option<f64> {
        match self {
            CriticalRadius::Isolated(t) => Some(t),
            _ => None,
        }
    }
}

/// First positive zero of `s'_{κ,λ}` when the model-condition holds.
pub fn model_critical(kappa: f64, lambda: f64) -> CriticalRadius {
    if !model_condition(kappa, lambda) {
        return CriticalRadius::Absent;
    }
    if kappa == 0.0 {
        return CriticalRadius::DegenerateFlat;
    }
    if kappa > 0.0 {
        let r = kappa.sqrt();
        CriticalRadius::Isolated((-lambda / r).atan() / r)
    } else {
        let a = (-kappa).sqrt();
        CriticalRadius::Isolated((lambda / a).atanh() / a)
    }
}

/// `s̄_{κ,λ}`: `s_{κ,λ}` before `C̄_{κ,λ}` and zero from there on.
pub fn s_bar(kappa: f64, lambda: f64, t: f64) -> f64 {
    if t >= ball_radius_or_inf(kappa, lambda) {
        0.0
    } else {
        s_kappa_lambda(kappa, lambda, t).value.max(0.0)
    }
}

fn check_big_n(big_n: f64) -> Result<(), ModelError> {
    if big_n >= 2.0 && big_n.is_finite() {
        Ok(())
    } else {
        Err(ModelError::DimensionTooSmall(big_n))
    }
}

/// `s_{N,κ,λ}(r) = ∫_0^r s̄_{κ,λ}^{N-1}(t) dt`.
pub fn collar_model_volume(big_n: f64, kappa: f64, lambda: f64, r: f64) -> Result<f64, ModelError> {
    check_big_n(big_n)?;
    if !r.is_finite() || r < 0.0 {
        return Err(ModelError::InvalidParams(format!(
            "radius r = {r} must be finite and non-negative"
        )));
    }
    if kappa == 0.0 && lambda == 0.0 {
        return Ok(r);
    }
    let upper = r.min(ball_radius_or_inf(kappa, lambda));
    let exponent = big_n - 1.0;
    Ok(integrate(
        |t| density_power(kappa, lambda, t, exponent),
        0.0,
        upper,
    ))
}

fn density_power(kappa: f64, lambda: f64, t: f64, exponent: f64) -> f64 {
    s_kappa_lambda(kappa, lambda, t)
        .value
        .max(0.0)
        .powf(exponent)
}

fn validate_horizon(kappa: f64, lambda: f64, d: f64) -> Result<(), ModelError> {
    if !(d > 0.0) {
        return Err(ModelError::InvalidParams(format!(
            "D = {d} must be positive"
        )));
    }
    let c = ball_radius_or_inf(kappa, lambda);
    if d > c * (1.0 + 1e-14) {
        return Err(ModelError::BeyondBallRadius { d, c });
    }
    Ok(())
}

fn is_critical_hyperbolic(kappa: f64, lambda: f64) -> bool {
    kappa < 0.0 && lambda > 0.0 && ((lambda * lambda + kappa).abs() <= 1e-14 * kappa.abs())
}

/// `C(N,κ,λ,D) = sup_{t ∈ [0,D)} ∫_t^D s^{N-1} / s^{N-1}(t)`.
///
/// Uses the closed forms for `κ = -λ²` and `κ = λ = 0`, and the scan path
/// otherwise. When a closed form is used on a finite horizon the scan path is
/// run alongside it and the two must agree to `1e-6` relative.
pub fn kasue_constant(big_n: f64, kappa: f64, lambda: f64, d: f64) -> Result<f64, ModelError> {
    check_big_n(big_n)?;
    if d.is_infinite() && d > 0.0 {
        if is_critical_hyperbolic(kappa, lambda) {
            return Ok(1.0 / ((big_n - 1.0) * lambda));
        }
        return Err(ModelError::InfiniteHorizon { kappa, lambda });
    }
    validate_horizon(kappa, lambda, d)?;

    let closed = kasue_constant_closed_form(big_n, kappa, lambda, d);
    match closed {
        Some(closed) => {
            let rate = (big_n - 1.0) * lambda.abs() * d;
            if rate < 600.0 {
                let generic = tail_ratio_sup(big_n, kappa, lambda, 0.0, d)?;
                if ((generic - closed) / closed).abs() > CROSS_CHECK_REL {
                    return Err(ModelError::CrossCheck { generic, closed });
                }
            }
            Ok(closed)
        }
        None => tail_ratio_sup(big_n, kappa, lambda, 0.0, d),
    }
}

/// Closed form of the tail constant, available for `κ = -λ²` (including `κ = λ = 0`).
pub fn kasue_constant_closed_form(big_n: f64, kappa: f64, lambda: f64, d: f64) -> Option<f64> {
    if kappa == 0.0 && lambda == 0.0 {
        return Some(d);
    }
    if lambda != 0.0 && (kappa + lambda * lambda).abs() <= 1e-14 * kappa.abs() {
        // s^{N-1} = exp(-(N-1)λt); the ratio is decreasing, so the sup sits at t = 0.
        let rate = (big_n - 1.0) * lambda;
        return Some(-(-rate * d).exp_m1() / rate);
    }
    None
}

/// Generic scan path for `C(N,κ,λ,D)`, ignoring any closed form.
pub fn kasue_constant_scan(big_n: f64, kappa: f64, lambda: f64, d: f64) -> Result<f64, ModelError> {
    check_big_n(big_n)?;
    validate_horizon(kappa, lambda, d)?;
    tail_ratio_sup(big_n, kappa, lambda, 0.0, d)
}

/// `sup_{t ∈ [a,b)} ∫_t^b s^{N-1} / s^{N-1}(t)` by a uniform scan refined by
/// golden-section search around the best cell.
pub fn tail_ratio_sup(
    big_n: f64,
    kappa: f64,
    lambda: f64,
    a: f64,
    b: f64,
) -> Result<f64, ModelError> {
    check_big_n(big_n)?;
    if !(b > a) || a < 0.0 {
        return Err(ModelError::InvalidParams(format!(
            "need 0 <= a < b, got a = {a}, b = {b}"
        )));
    }
    let exponent = big_n - 1.0;
    let density = |t: f64| density_power(kappa, lambda, t, exponent);
    let grid = UniformGrid::new(a, b, SCAN_CELLS);
    let tails = grid.tail_integrals(&density);

    let ratio_at_node = |j: usize| tails[j] / density(grid.node(j));
    let (best, best_val) = (0..SCAN_CELLS)
        .map(|j| (j, ratio_at_node(j)))
        .filter(|(_, v)| v.is_finite())
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, x| if x.1 > acc.1 { x } else { acc },
        );
    if !best_val.is_finite() {
        return Err(ModelError::InvalidParams(
            "density underflows on the whole interval".into(),
        ));
    }

    // Refine over the two cells adjacent to the winning node.
    let lo = grid.node(best.saturating_sub(1));
    let hi_idx = (best + 1).min(SCAN_CELLS - 1);
    let hi = grid.node(hi_idx);
    let ratio = |t: f64| {
        let k = grid.next_node_index(t);
        let partial = integrate(density, t, grid.node(k));
        (partial + tails[k]) / density(t)
    };
    let (_, refined) = golden_max(ratio, lo, hi, 1e-9 * (b - a));
    Ok(best_val.max(if refined.is_finite() {
        refined
    } else {
        best_val
    }))
}

/// Bound `(4 max_{t∈[0,D]} ∫_t^D s^{N-1} ∫_0^t s^{1-N})^{-1}` for the `p = 2` model eigenvalue.
pub fn kasue_product_bound(big_n: f64, kappa: f64, lambda: f64, d: f64) -> Result<f64, ModelError> {
    check_big_n(big_n)?;
    validate_horizon(kappa, lambda, d)?;
    let exponent = big_n - 1.0;
    let density = |t: f64| density_power(kappa, lambda, t, exponent);
    let inverse = |t: f64| density_power(kappa, lambda, t, -exponent);
    let grid = UniformGrid::new(0.0, d, SCAN_CELLS);
    let tails = grid.tail_integrals(&density);
    let heads = grid.head_integrals(&inverse);

    let product_at_node = |j: usize| tails[j] * heads[j];
    let (best, best_val) = (0..SCAN_CELLS)
        .map(|j| (j, product_at_node(j)))
        .filter(|(_, v)| v.is_finite())
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, x| if x.1 > acc.1 { x } else { acc },
        );

    let lo = grid.node(best.saturating_sub(1));
    let hi = grid.node((best + 1).min(SCAN_CELLS - 1));
    let product = |t: f64| {
        let k = grid.next_node_index(t);
        let tail = integrate(density, t, grid.node(k)) + tails[k];
        let j = k.saturating_sub(1).min(grid.prev_node_index(t));
        let head = heads[j] + integrate(inverse, grid.node(j), t);
        tail * head
    };
    let (_, refined) = golden_max(product, lo, hi, 1e-9 * d);
    let max = best_val.max(if refined.is_finite() {
        refined
    } else {
        best_val
    });
    Ok(1.0 / (4.0 * max))
}

/// Uniform partition of `[a, b]` into `cells` cells.
struct UniformGrid {
    a: f64,
    b: f64,
    cells: usize,
    h: f64,
}

impl UniformGrid {
    fn new(a: f64, b: f64, cells: usize) -> Self {
        UniformGrid {
            a,
            b,
            cells,
            h: (b - a) / cells as f64,
        }
    }

    fn node(&self, j: usize) -> f64 {
        if j == self.cells {
            self.b
        } else {
            self.a + j as f64 * self.h
        }
    }

    fn next_node_index(&self, t: f64) -> usize {
        (((t - self.a) / self.h).ceil().max(0.0) as usize).min(self.cells)
    }

    fn prev_node_index(&self, t: f64) -> usize {
        (((t - self.a) / self.h).floor().max(0.0) as usize).min(self.cells)
    }

    fn cell_integrals<F: Fn(f64) -> f64>(&self, f: &F) -> Vec<f64> {
        (0..self.cells)
            .map(|j| adaptive_simpson(f, self.node(j), self.node(j + 1), 0.0, 1e-12).value)
            .collect()
    }

    /// `tails[j] = ∫_{t_j}^b f`, with `tails[cells] = 0`.
    fn tail_integrals<F: Fn(f64) -> f64>(&self, f: &F) -> Vec<f64> {
        let cells = self.cell_integrals(f);
        let mut tails = vec![0.0; self.cells + 1];
        for j in (0..self.cells).rev() {
            tails[j] = tails[j + 1] + cells[j];
        }
        tails
    }

    /// `heads[j] = ∫_a^{t_j} f` for `j < cells`; the last cell is skipped so a
    /// singular integrand at `b` is never evaluated.
    fn head_integrals<F: Fn(f64) -> f64>(&self, f: &F) -> Vec<f64> {
        let mut heads = vec![0.0; self.cells + 1];
        for j in 0..self.cells - 1 {
            heads[j + 1] =
                heads[j] + adaptive_simpson(f, self.node(j), self.node(j + 1), 0.0, 1e-12).value;
        }
        heads[self.cells] = f64::INFINITY;
        heads
    }
}

/// Volume of the unit round sphere `S^k`.
pub fn unit_sphere_volume(k: u32) -> f64 {
    use std::f64::consts::PI;
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * unit_sphere_volume(k - 2),
    }
}
