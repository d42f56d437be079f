//! Hypothesis-gated numerical checks of the comparison inequalities and of
//! the equality cases on the rigidity models.
//!
//! Every check first certifies `Ric^N_f >= (N-1)κ` and `H_f >= (N-1)λ` on the
//! manifold (the gate). A check whose gate fails is `not-applicable`, never
//! `pass`. Margins are signed slacks: positive means the inequality holds with
//! room, and equality checks report `-|deviation|`.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, Func};
use crate::model_space::{
    ball_condition, ball_radius, ball_radius_or_inf, collar_model_volume, kasue_constant,
    kasue_product_bound, s_kappa_lambda, tail_ratio_sup, unit_sphere_volume, EffectiveDim,
    ModelError,
};
use crate::profile::Profile;
use crate::sturm_liouville::{
    free_eigenvalue, model_eigenvalue, principal_eigenvalue, SolverError,
};
use crate::warped_product::{
    annulus_quantities, boundary_measure, build, curvature_margin, lower_bound, radial_density,
    rigidity_fiber_constant, theta_f, theta_f_log_derivative, weighted_volume, FiberSpec,
    GeometryError, WarpedManifold,
};

/// Default spectrum-limit radii.
pub const DEFAULT_D_GRID: [f64; 6] = [1.0, 2.0, 5.0, 10.0, 20.0, 40.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CheckError {
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Sampling density and tolerances shared by all checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Interior curvature samples and θ-comparison samples.
    pub grid: usize,
    /// Radii in the volume checks.
    pub volume_samples: usize,
    /// Absolute slack allowed in the curvature and mean-curvature gate.
    pub gate_tolerance: f64,
    /// Relative slack allowed in volume and eigenvalue conclusions.
    pub conclusion_tolerance: f64,
    /// Relative slack allowed in the spectrum-limit check.
    pub limit_tolerance: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            grid: 1024,
            volume_samples: 64,
            gate_tolerance: 1e-9,
            conclusion_tolerance: 1e-8,
            limit_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::NotApplicable => "not-applicable",
        })
    }
}

/// Inputs echoed into a report. Absent parameters serialize as `null`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportParams {
    pub n: Option<u32>,
    #[serde(rename = "N")]
    pub big_n: Option<EffectiveDim>,
    pub kappa: Option<f64>,
    pub lambda: Option<f64>,
    pub p: Option<f64>,
    #[serde(rename = "D")]
    pub d: Option<f64>,
    #[serde(rename = "L")]
    pub length: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_name: String,
    pub manifold: Option<String>,
    pub params: ReportParams,
    /// Minimum slack in the hypotheses; `null` for pure-parameter checks.
    pub hypothesis_margin: Option<f64>,
    /// Minimum slack in the conclusion; `null` when it was not evaluated.
    pub conclusion_margin: Option<f64>,
    pub status: Status,
    pub pass: bool,
    pub tolerance: f64,
    pub gate_tolerance: f64,
    pub samples: usize,
    /// The check asserts equality rather than an inequality.
    pub equality: bool,
    pub seed: Option<u64>,
    pub values: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn with_manifold(mut self, name: &str) -> Self {
        self.manifold = Some(name.to_string());
        self
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    /// Report for a check that could not be evaluated at all.
    pub fn errored(
        check_name: &str,
        params: ReportParams,
        settings: &Settings,
        err: &CheckError,
    ) -> Self {
        VerificationReport {
            check_name: check_name.to_string(),
            manifold: None,
            params,
            hypothesis_margin: None,
            conclusion_margin: None,
            status: Status::Fail,
            pass: false,
            tolerance: settings.conclusion_tolerance,
            gate_tolerance: settings.gate_tolerance,
            samples: 0,
            equality: false,
            seed: None,
            values: BTreeMap::new(),
            notes: vec![format!("error: {err}")],
        }
    }
}

/// Accumulates a check result before the status is decided.
struct Outcome {
    name: &'static str,
    params: ReportParams,
    hypothesis: Option<f64>,
    conclusion: Option<f64>,
    tolerance: f64,
    samples: usize,
    equality: bool,
    values: BTreeMap<String, f64>,
    notes: Vec<String>,
    not_applicable: bool,
}

impl Outcome {
    fn new(name: &'static str, params: ReportParams, tolerance: f64) -> Self {
        Outcome {
            name,
            params,
            hypothesis: None,
            conclusion: None,
            tolerance,
            samples: 0,
            equality: false,
            values: BTreeMap::new(),
            notes: Vec::new(),
            not_applicable: false,
        }
    }

    fn value(&mut self, key: &str, v: f64) {
        self.values.insert(key.to_string(), v);
    }

    fn skip(mut self, note: String, settings: &Settings) -> VerificationReport {
        self.not_applicable = true;
        self.notes.push(note);
        self.finish(settings)
    }

    fn finish(self, settings: &Settings) -> VerificationReport {
        let gate_failed = self
            .hypothesis
            .is_some_and(|h| !(h >= -settings.gate_tolerance));
        let status = if self.not_applicable || gate_failed {
            Status::NotApplicable
        } else {
            match self.conclusion {
                Some(c) if c >= -self.tolerance => Status::Pass,
                _ => Status::Fail,
            }
        };
        let finite = |x: Option<f64>| x.filter(|v| v.is_finite());
        let mut notes = self.notes;
        if self.hypothesis.is_some_and(|h| !h.is_finite()) {
            notes.push("hypothesis margin is unbounded below".into());
        }
        if self.conclusion.is_some_and(|c| !c.is_finite()) {
            notes.push("conclusion margin is not finite".into());
        }
        VerificationReport {
            check_name: self.name.to_string(),
            manifold: None,
            params: self.params,
            hypothesis_margin: finite(self.hypothesis),
            conclusion_margin: finite(self.conclusion),
            status,
            pass: status == Status::Pass,
            tolerance: self.tolerance,
            gate_tolerance: settings.gate_tolerance,
            samples: self.samples,
            equality: self.equality,
            seed: None,
            values: self.values,
            notes,
        }
    }
}

fn manifold_params(
    m: &WarpedManifold,
    big_n: EffectiveDim,
    kappa: f64,
    lambda: f64,
) -> ReportParams {
    ReportParams {
        n: Some(m.n()),
        big_n: Some(big_n),
        kappa: Some(kappa),
        lambda: Some(lambda),
        length: Some(m.length()),
        ..Default::default()
    }
}

/// Curvature and mean-curvature slack; `-∞` when `Ric^N_f` is `-∞` by convention.
pub fn hypothesis_gate(
    m: &WarpedManifold,
    big_n: EffectiveDim,
    kappa: f64,
    lambda: f64,
    settings: &Settings,
) -> Result<f64, CheckError> {
    if big_n.is_infinite() && (kappa != 0.0 || lambda != 0.0) {
        return Err(CheckError::InvalidArguments(format!(
            "N = ∞ checks take κ = λ = 0, got κ = {kappa}, λ = {lambda}"
        )));
    }
    match curvature_margin(m, big_n, kappa, settings.grid) {
        Ok(report) => Ok(report.gate_margin(big_n, lambda)),
        Err(GeometryError::ConstantWeightRequired) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e.into()),
    }
}

fn equality_expected(m: &WarpedManifold, big_n: EffectiveDim, kappa: f64, lambda: f64) -> bool {
    m.rigidity()
        .is_some_and(|tag| tag.big_n == big_n && tag.kappa == kappa && tag.lambda == lambda)
}

/// Starts a manifold check: validates `N`, runs the gate, records equality.
fn gated(
    name: &'static str,
    m: &WarpedManifold,
    big_n: EffectiveDim,
    kappa: f64,
    lambda: f64,
    settings: &Settings,
) -> Result<Outcome, CheckError> {
    if let EffectiveDim::Finite(v) = big_n {
        if !(v >= m.n() as f64) {
            return Err(CheckError::InvalidArguments(format!(
                "N = {v} must be at least n = {}",
                m.n()
            )));
        }
    }
    let mut out = Outcome::new(
        name,
        manifold_params(m, big_n, kappa, lambda),
        settings.conclusion_tolerance,
    );
    let gate = hypothesis_gate(m, big_n, kappa, lambda, settings)?;
    if gate == f64::NEG_INFINITY {
        out.notes
            .push("N = n with a non-constant weight: Ric^N_f = -∞".into());
    }
    out.hypothesis = Some(gate);
    out.equality = equality_expected(m, big_n, kappa, lambda);
    Ok(out)
}

fn gate_passed(out: &Outcome, settings: &Settings) -> bool {
    out.hypothesis
        .is_some_and(|h| h >= -settings.gate_tolerance)
}

/// Collar volumes and the model profile on a set of increasing radii.
struct VolumeTable {
    radii: Vec<f64>,
    volume: Vec<f64>,
    model: Vec<f64>,
}

fn default_radii(m: &WarpedManifold, samples: usize) -> Vec<f64> {
    let k = samples.max(2);
    (1..=k)
        .map(|i| {
            if i == k {
                m.length()
            } else {
                m.length() * i as f64 / k as f64
            }
        })
        .collect()
}

fn model_volume(big_n: EffectiveDim, kappa: f64, lambda: f64, r: f64) -> Result<f64, CheckError> {
    match big_n {
        EffectiveDim::Infinite => Ok(r),
        EffectiveDim::Finite(v) => Ok(collar_model_volume(v, kappa, lambda, r)?),
    }
}

fn volume_table(
    m: &WarpedManifold,
    big_n: EffectiveDim,
    kappa: f64,
    lambda: f64,
    radii: &[f64],
) -> Result<VolumeTable, CheckError> {
    let mut sorted = radii.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.first().is_some_and(|r| !(*r > 0.0)) || sorted.last().is_some_and(|r| *r > m.length())
    {
        return Err(CheckError::InvalidArguments(format!(
            "radii must lie in (0, L = {}]",
            m.length()
        )));
    }
    let mut volume = Vec::with_capacity(sorted.len());
    let mut acc = 0.0;
    let mut prev = 0.0;
    for &r in &sorted {
        acc += weighted_volume(m, prev, r)?;
        volume.push(acc);
        prev = r;
    }
    let model = sorted
        .iter()
        .map(|&r| model_volume(big_n, kappa, lambda, r))
        .collect::<Result<_, _>>()?;
    Ok(VolumeTable {
        radii: sorted,
        volume,
        model,
    })
}

fn relative_slack(rhs: f64, lhs: f64) -> f64 {
    (rhs - lhs) / rhs.abs().max(f64::MIN_POSITIVE)
}

fn conclude(out: &mut Outcome, margin: f64) {
    out.conclusion = Some(if out.equality { -margin.abs() } else { margin });
}

/// `θ_f(t) <= e^{-f(0)} s^{N-1}(t)` and `(log θ_f)' <= (N-1) s'/s`; for `N = ∞`, `θ_f' <= 0`.
pub fn check_theta_comparison(
    m: &WarpedManifold,
    big_n: EffectiveDim,
    kappa: f64,
    lambda: f64,
    settings: &Settings,
) -> Result<VerificationReport, CheckError> {
    let mut out = gated("theta_comparison", m, big_n, kappa, lambda, settings)?;
    if !gate_passed(&out, settings) {
        return Ok(out.finish(settings));
    }
    let grid = settings.grid.max(2);
    let length = m.length();
    let mut margin = f64::INFINITY;
    let theta0 = theta_f(m, 0.0)?;
    let c_bar = ball_radius_or_inf(kappa, lambda);
    if length >= c_bar {
        out.notes.push(format!("L = {length} reaches C̄ = {c_bar}"));
        margin = margin.min(relative_slack(c_bar, length));
    }
    let mut samples = 0;
    for i in 1..=grid {
        let t = length * i as f64 / grid as f64;
        let log_rate = theta_f_log_derivative(m, t)?;
        match big_n {
            EffectiveDim::Infinite => margin = margin.min(-log_rate),
            EffectiveDim::Finite(v) => {
                if t >= c_bar {
                    continue;
                }
                let s = s_kappa_lambda(kappa, lambda, t);
                let model_rate = (v - 1.0) * s.derivative / s.value;
                let model_theta = theta0 * s.value.powf(v - 1.0);
                let rate_slack = (model_rate - log_rate) / model_rate.abs().max(1.0);
                margin = margin
                    .min(rate_slack)
                    .min(relative_slack(model_theta, theta_f(m, t)?));
            }
        }
        samples += 1;
    }
    out.samples = samples;
    conclude(&mut out, margin);
    Ok(out.finish(settings))
}

/// `m_f(B_r(∂M)) <= s_{N,κ,λ}(r) m_{f,∂M}(∂M)`; `r m_{f,∂M}(∂M)` for `N = ∞`.
pub fn check_heintze_karcher(
    m: &WarpedManifold,
    big_n: EffectiveDim,
    kappa: f64,
    lambda: f64,
    radii: Option<&[f64]>,
    settings: &Settings,
) -> Result<VerificationReport, CheckError> {
    let mut out = gated("heintze_karcher", m, big_n, kappa, lambda, settings)?;
    if !gate_passed(&out, settings) {
        return Ok(out.finish(settings));
    }
    let radii = radii
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| default_radii(m, settings.volume_samples));
    let table = volume_table(m, big_n, kappa, lambda, &radii)?;
    let bm = boundary_measure(m);
    let margin = table
        .volume
        .iter()
        .zip(&table.model)
        .map(|(v, s)| relative_slack(s * bm, *v))
        .fold(f64::INFINITY, f64::min);
    out.samples = table.radii.len();
    out.value("boundary_measure", bm);
    out.value("volume_at_L", *table.volume.last().unwrap_or(&0.0));
    conclude(&mut out, margin);
    Ok(out.finish(settings))
}

/// `m_f(B_R)/m_f(B_r) <= s_N(R)/s_N(r)` on pairs, and `m_f(B_r)/s_N(r)` nonincreasing.
pub fn check_bishop_gromov(
    m: &WarpedManifold,
    big_n: EffectiveDim,
    kappa: f64,
    lambda: f64,
    pairs: Option<&[(f64, f64)]>,
    settings: &Settings,
) -> Result<VerificationReport, CheckError> {
    let mut out = gated("bishop_gromov", m, big_n, kappa, lambda, settings)?;
    if !gate_passed(&out, settings) {
        return Ok(out.finish(settings));
    }
    let grid = default_radii(m, settings.volume_samples);
    let table = volume_table(m, big_n, kappa, lambda, &grid)?;
    let ratio: Vec<f64> = table
        .volume
        .iter()
        .zip(&table.model)
        .map(|(v, s)| v / s)
        .collect();
    let mut monotone = f64::INFINITY;
    for w in ratio.windows(2) {
        monotone = monotone.min((w[0] - w[1]) / w[0]);
    }

    let mut pair_margin = f64::INFINITY;
    let mut count = 0;
    match pairs {
        Some(pairs) => {
            for &(r, big_r) in pairs {
                if !(r > 0.0 && r < big_r && big_r <= m.length()) {
                    return Err(CheckError::InvalidArguments(format!(
                        "pair ({r}, {big_r}) must satisfy 0 < r < R <= L = {}",
                        m.length()
                    )));
                }
                let t = volume_table(m, big_n, kappa, lambda, &[r, big_r])?;
                pair_margin = pair_margin.min(relative_slack(
                    t.model[1] / t.model[0],
                    t.volume[1] / t.volume[0],
                ));
                count += 1;
            }
        }
        None => {
            for i in 0..ratio.len() {
                for j in i + 1..ratio.len() {
                    let lhs = table.volume[j] / table.volume[i];
                    let rhs = table.model[j] / table.model[i];
                    pair_margin = pair_margin.min(relative_slack(rhs, lhs));
                    count += 1;
                }
            }
        }
    }
    out.samples = count + ratio.len();
    out.value("pair_margin", pair_margin);
    out.value("monotonicity_margin", monotone);
    conclude(&mut out, pair_margin.min(monotone));
    Ok(out.finish(settings))
}

/// `L <= C_{κ,λ}` when the ball-condition holds.
pub fn check_inscribed_radius(
    m: &WarpedManifold,
    kappa: f64,
    lambda: f64,
    big_n: EffectiveDim,
    settings: &Settings,
) -> Result<VerificationReport, CheckError> {
    let out = gated("inscribed_radius", m, big_n, kappa, lambda, settings)?;
    let Some(c) = ball_radius(kappa, lambda).filter(|_| ball_condition(kappa, lambda)) else {
        return Ok(out.skip(
            format!("ball-condition fails for κ = {kappa}, λ = {lambda}"),
            settings,
        ));
    };
    let mut out = out;
    if !gate_passed(&out, settings) {
        return Ok(out.finish(settings));
    }
    let length = m.length();
    out.value("c_ball", c);
    out.value(
        "theta_at_L",
        theta_f(m, length)? * (m.f().value(length) - m.f().value(0.0)).exp(),
    );
    out.samples = 1;
    // The radius bound is an inequality even on the equality model.
    out.equality = false;
    out.conclusion = Some(relative_slack(c, length));
    Ok(out.finish(settings))
}

/// `μ_rad(M) >= μ_{p,N,κ,λ,L}` (`μ_{p,∞,L}` for `N = ∞`); equality on the rigidity model.
pub fn check_eigenvalue_bound(
    m: &WarpedManifold,
    p: f64,
    big_n: EffectiveDim,
    kappa: f64,
    lambda: f64,
    settings: &Settings,
) -> Result<VerificationReport, CheckError> {
    check_p(p)?;
    let mut out = gated("eigenvalue_bound", m, big_n, kappa, lambda, settings)?;
    out.params.p = Some(p);
    out.params.d = Some(m.length());
    if !gate_passed(&out, settings) {
        return Ok(out.finish(settings));
    }
    let length = m.length();
    let c_bar = ball_radius_or_inf(kappa, lambda);
    if length > c_bar {
        out.notes.push(format!("L = {length} exceeds C̄ = {c_bar}"));
        out.conclusion = Some(relative_slack(c_bar, length));
        return Ok(out.finish(settings));
    }
    let mu_rad = principal_eigenvalue(p, &radial_density(m), length)?.mu;
    let mu_model = match big_n {
        EffectiveDim::Infinite => free_eigenvalue(p, length)?.mu,
        EffectiveDim::Finite(v) => model_eigenvalue(p, v, kappa, lambda, length)?.mu,
    };
    out.value("mu_rad", mu_rad);
    out.value("mu_model", mu_model);
    out.samples = 2;
    conclude(&mut out, (mu_rad - mu_model) / mu_model);
    Ok(out.finish(settings))
}

fn check_p(p: f64) -> Result<(), CheckError> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(CheckError::InvalidArguments(format!(
            "p = {p} must lie in (1, ∞)"
        )))
    }
}

/// `μ_{p,N,κ,λ,D} >= (p C(N,κ,λ,D))^{-p}`, the product bound for `p = 2`,
/// and `μ_{p,∞,D} >= (pD)^{-p}` for `N = ∞`.
pub fn check_kasue_eigen_bounds(
    p: f64,
    big_n: EffectiveDim,
    kappa: f64,
    lambda: f64,
    d: f64,
    settings: &Settings,
) -> Result<VerificationReport, CheckError> {
    check_p(p)?;
    if !(d > 0.0) || !d.is_finite() {
        return Err(CheckError::InvalidArguments(format!(
            "D = {d} must be positive and finite"
        )));
    }
    let params = ReportParams {
        big_n: Some(big_n),
        kappa: Some(kappa),
        lambda: Some(lambda),
        p: Some(p),
        d: Some(d),
        ..Default::default()
    };
    let mut out = Outcome::new("kasue_eigen_bounds", params, settings.conclusion_tolerance);
    out.samples = 1;
    match big_n {
        EffectiveDim::Infinite => {
            if kappa != 0.0 || lambda != 0.0 {
                return Ok(out.skip(
                    format!("N = ∞ bound is stated for κ = λ = 0, got κ = {kappa}, λ = {lambda}"),
                    settings,
                ));
            }
            let mu = free_eigenvalue(p, d)?.mu;
            let bound = (p * d).powf(-p);
            out.value("mu", mu);
            out.value("kasue_bound", bound);
            out.conclusion = Some((mu - bound) / mu);
        }
        EffectiveDim::Finite(v) => {
            let c_bar = ball_radius_or_inf(kappa, lambda);
            if d > c_bar {
                return Ok(out.skip(format!("D = {d} exceeds C̄ = {c_bar}"), settings));
            }
            if v < 2.0 {
                return Err(CheckError::InvalidArguments(format!(
                    "N = {v} must be at least 2"
                )));
            }
            let mu = model_eigenvalue(p, v, kappa, lambda, d)?.mu;
            let c = kasue_constant(v, kappa, lambda, d)?;
            let bound = (p * c).powf(-p);
            out.value("mu", mu);
            out.value("kasue_constant", c);
            out.value("kasue_bound", bound);
            let mut margin = (mu - bound) / mu;
            if p == 2.0 {
                let product = kasue_product_bound(v, kappa, lambda, d)?;
                out.value("product_bound", product);
                margin = margin.min((mu - product) / mu);
                out.samples += 1;
            }
            out.conclusion = Some(margin);
        }
    }
    Ok(out.finish(settings))
}

/// `(p C(N,-λ²,λ,D))^{-p}` is nonincreasing in `D` (`C` grows with `D`) and
/// tends to `((N-1)λ/p)^p`.
pub fn check_spectrum_limit(
    p: f64,
    big_n: f64,
    lambda: f64,
    d_grid: Option<&[f64]>,
    settings: &Settings,
) -> Result<VerificationReport, CheckError> {
    check_p(p)?;
    let kappa = -lambda * lambda;
    let params = ReportParams {
        big_n: Some(EffectiveDim::Finite(big_n)),
        kappa: Some(kappa),
        lambda: Some(lambda),
        p: Some(p),
        ..Default::default()
    };
    let mut out = Outcome::new("spectrum_limit", params, settings.limit_tolerance);
    if !(lambda > 0.0) {
        return Ok(out.skip(format!("λ = {lambda} must be positive"), settings));
    }
    let mut grid = d_grid
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| DEFAULT_D_GRID.to_vec());
    if grid.is_empty() || grid.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
        return Err(CheckError::InvalidArguments(
            "D grid must be nonempty with positive finite entries".into(),
        ));
    }
    grid.sort_by(f64::total_cmp);
    let limit = ((big_n - 1.0) * lambda / p).powf(p);
    let values: Vec<f64> = grid
        .iter()
        .map(|&d| kasue_constant(big_n, kappa, lambda, d).map(|c| (p * c).powf(-p)))
        .collect::<Result<_, _>>()?;
    let monotone = values
        .windows(2)
        .map(|w| (w[0] - w[1]) / limit)
        .fold(f64::INFINITY, f64::min);
    let last = *values.last().expect("grid is nonempty");
    let error = ((last - limit) / limit).abs();
    out.params.d = grid.last().copied();
    out.samples = values.len();
    out.value("limit", limit);
    out.value("bound_at_max_D", last);
    out.value("relative_error", error);
    out.conclusion = Some(monotone.min(-error));
    Ok(out.finish(settings))
}

/// `m_f(Ω) <= m_{f,∂Ω}(∂Ω) sup_t ∫_t^{δ2} s^{N-1}/s^{N-1}(t)` on `Ω = (a, b) × F`;
/// `m_{f,∂Ω}(∂Ω)(δ2 - δ1)` for `N = ∞`.
pub fn check_domain_volume_estimate(
    m: &WarpedManifold,
    big_n: EffectiveDim,
    kappa: f64,
    lambda: f64,
    a: f64,
    b: f64,
    settings: &Settings,
) -> Result<VerificationReport, CheckError> {
    let annulus = annulus_quantities(m, a, b)?;
    let mut out = gated("domain_volume_estimate", m, big_n, kappa, lambda, settings)?;
    out.params.a = Some(a);
    out.params.b = Some(b);
    out.equality = false;
    if !gate_passed(&out, settings) {
        return Ok(out.finish(settings));
    }
    let factor = match big_n {
        EffectiveDim::Infinite => b - a,
        EffectiveDim::Finite(v) => {
            let c_bar = ball_radius_or_inf(kappa, lambda);
            if b >= c_bar {
                return Ok(out.skip(format!("δ2 = {b} reaches C̄ = {c_bar}"), settings));
            }
            tail_ratio_sup(v, kappa, lambda, a, b)?
        }
    };
    let rhs = annulus.boundary_area * factor;
    out.value("volume", annulus.volume);
    out.value("boundary_area", annulus.boundary_area);
    out.value("bound", rhs);
    out.samples = 1;
    out.conclusion = Some(relative_slack(rhs, annulus.volume));
    Ok(out.finish(settings))
}

/// `m_f(B_r(∂M)) / s_{N,κ,λ}(r) = m_{f,∂M}(∂M)` at every sampled radius.
pub fn check_volume_growth_equality(
    m: &WarpedManifold,
    big_n: EffectiveDim,
    kappa: f64,
    lambda: f64,
    radii: Option<&[f64]>,
    settings: &Settings,
) -> Result<VerificationReport, CheckError> {
    let mut out = gated("volume_growth_equality", m, big_n, kappa, lambda, settings)?;
    out.equality = true;
    if !gate_passed(&out, settings) {
        return Ok(out.finish(settings));
    }
    let radii = radii
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| default_radii(m, settings.volume_samples));
    let table = volume_table(m, big_n, kappa, lambda, &radii)?;
    let bm = boundary_measure(m);
    let deviation = table
        .volume
        .iter()
        .zip(&table.model)
        .map(|(v, s)| (v / s / bm - 1.0).abs())
        .fold(0.0, f64::max);
    out.samples = table.radii.len();
    out.value("boundary_measure", bm);
    out.value("max_relative_deviation", deviation);
    out.conclusion = Some(-deviation);
    Ok(out.finish(settings))
}

/// Seed and size of a random admissible perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub seed: u64,
    pub amplitude: f64,
}

/// What the generator drew, echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationRecord {
    pub seed: u64,
    pub amplitude: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub length: f64,
    pub epsilon: f64,
    pub w: String,
    pub f: String,
}

/// Perturbation of the equality model for `(n, N, κ, λ)`.
///
/// Finite `N`: the rigidity model of `(κ + δκ, λ + δλ)` with `δκ, δλ` in
/// `[0.1, 1] · amplitude`, its warping multiplied by `1 + ε η(t)` with
/// `η(0) = η'(0) = 0` and `|ε| <= amplitude / 20`. `L` is capped at 90% of
/// the perturbed `C̄`. `N = ∞` (with `κ = λ = 0`): `w = 1 + ε η`,
/// `f = f0 + β t + γ t²` with `β, γ` in `[0.1, 1] · amplitude`.
///
/// The result is not gate-certified; checks decide admissibility.
pub fn perturbed_manifold(
    n: u32,
    big_n: EffectiveDim,
    kappa: f64,
    lambda: f64,
    length: f64,
    f0: f64,
    perturbation: Perturbation,
) -> Result<(WarpedManifold, PerturbationRecord), CheckError> {
    let amp = perturbation.amplitude;
    if !(amp > 0.0 && amp <= 1.0) {
        return Err(CheckError::InvalidArguments(format!(
            "amplitude = {amp} must lie in (0, 1]"
        )));
    }
    if n < 2 {
        return Err(CheckError::InvalidArguments(format!(
            "n = {n} must be at least 2"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(perturbation.seed);
    let epsilon = amp * rng.gen_range(-0.05..=0.05);
    let eta = if rng.gen_bool(0.5) {
        format!("t^2 * exp(-{:?} * t)", rng.gen_range(0.5..2.0))
    } else {
        format!("1 - cos({:?} * t)", rng.gen_range(0.5..2.0))
    };
    let bump =
        Expr::parse(&format!("1 + {epsilon:?} * ({eta})")).expect("generated expression parses");

    let (w, f, fiber, kappa_p, lambda_p, length) = match big_n {
        EffectiveDim::Infinite => {
            if kappa != 0.0 || lambda != 0.0 {
                return Err(CheckError::InvalidArguments(
                    "the N = ∞ family needs κ = λ = 0".into(),
                ));
            }
            let beta = amp * rng.gen_range(0.1..=1.0);
            let gamma = amp * rng.gen_range(0.1..=1.0);
            let f = Expr::parse(&format!("{f0:?} + {beta:?} * t + {gamma:?} * t^2"))
                .expect("generated expression parses");
            (bump, f, FiberSpec::unit_sphere(n - 1), 0.0, 0.0, length)
        }
        EffectiveDim::Finite(v) => {
            let kp = kappa + amp * rng.gen_range(0.1..=1.0);
            let lp = lambda + amp * rng.gen_range(0.1..=1.0);
            let length = length.min(0.9 * ball_radius_or_inf(kp, lp));
            let s = Expr::Model {
                kappa: kp,
                lambda: lp,
            };
            let w = Expr::Mul(Box::new(s.clone()), Box::new(bump));
            let f = Expr::Sub(
                Box::new(Expr::Const(f0)),
                Box::new(Expr::Mul(
                    Box::new(Expr::Const(v - n as f64)),
                    Box::new(Expr::Call(Func::Log, Box::new(s))),
                )),
            );
            let fiber = FiberSpec {
                dim: n - 1,
                einstein_constant: rigidity_fiber_constant(n, big_n, kp, lp),
                total_volume: unit_sphere_volume(n - 1),
            };
            (w, f, fiber, kp, lp, length)
        }
    };
    let record = PerturbationRecord {
        seed: perturbation.seed,
        amplitude: amp,
        kappa: kappa_p,
        lambda: lambda_p,
        length,
        epsilon,
        w: w.to_string(),
        f: f.to_string(),
    };
    let m = build(n, fiber, length, Profile::Expr(w), Profile::Expr(f), false)?;
    Ok((m, record))
}

/// `(N-1)κ` as used by the gate; exposed for reporting.
pub fn curvature_bound(big_n: EffectiveDim, kappa: f64) -> f64 {
    lower_bound(big_n, kappa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::warped_product::{make_product, make_rigidity_model};

    fn settings() -> Settings {
        Settings {
            grid: 256,
            ..Default::default()
        }
    }

    fn fin(v: f64) -> EffectiveDim {
        EffectiveDim::Finite(v)
    }

    #[test]
    fn rigidity_model_is_equality_everywhere() {
        let s = settings();
        let m = make_rigidity_model(3, fin(3.0), -1.0, 1.0, 2.0, 0.0).unwrap();
        let reports = [
            check_theta_comparison(&m, fin(3.0), -1.0, 1.0, &s).unwrap(),
            check_heintze_karcher(&m, fin(3.0), -1.0, 1.0, None, &s).unwrap(),
            check_bishop_gromov(&m, fin(3.0), -1.0, 1.0, None, &s).unwrap(),
            check_volume_growth_equality(&m, fin(3.0), -1.0, 1.0, None, &s).unwrap(),
            check_eigenvalue_bound(&m, 2.0, fin(3.0), -1.0, 1.0, &s).unwrap(),
        ];
        for r in &reports {
            assert_eq!(r.status, Status::Pass, "{r:?}");
            assert!(r.equality);
            assert!(
                r.conclusion_margin.unwrap().abs() <= 1e-8,
                "{}: {:?}",
                r.check_name,
                r.conclusion_margin
            );
        }
    }

    #[test]
    fn product_is_equality_for_infinite_n() {
        let s = settings();
        let m = make_product(3, 2.0).unwrap();
        let inf = EffectiveDim::Infinite;
        let hk = check_heintze_karcher(&m, inf, 0.0, 0.0, Some(&[1.0, 2.0]), &s).unwrap();
        assert_eq!(hk.status, Status::Pass);
        let bg = check_bishop_gromov(&m, inf, 0.0, 0.0, Some(&[(1.0, 2.0)]), &s).unwrap();
        assert_eq!(bg.status, Status::Pass);
        assert!(bg.conclusion_margin.unwrap().abs() < 1e-12);
        let ev = check_eigenvalue_bound(&m, 2.0, inf, 0.0, 0.0, &s).unwrap();
        assert!((ev.values["mu_rad"] - std::f64::consts::PI.powi(2) / 16.0).abs() < 1e-9);
        let dv = check_domain_volume_estimate(&m, inf, 0.0, 0.0, 1.0, 2.0, &s).unwrap();
        assert_eq!(dv.status, Status::Pass);
        assert!((dv.conclusion_margin.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn remark_manifold_theta_decreases() {
        let m = build(
            3,
            FiberSpec::unit_sphere(2),
            1.5,
            Profile::parse("cosh(t)").unwrap(),
            Profile::parse("2*t^2").unwrap(),
            false,
        )
        .unwrap();
        let r = check_theta_comparison(&m, EffectiveDim::Infinite, 0.0, 0.0, &settings()).unwrap();
        assert_eq!(r.status, Status::Pass);
        assert!(!r.equality);
    }

    #[test]
    fn failing_gate_is_not_applicable() {
        // Sphere collar checked against a hyperbolic-type bound it exceeds, then
        // against a bound it violates.
        let m = build(
            3,
            FiberSpec::unit_sphere(2),
            1.0,
            Profile::parse("cosh(t)").unwrap(),
            Profile::parse("2*t^2").unwrap(),
            false,
        )
        .unwrap();
        let r = check_heintze_karcher(&m, fin(3.0), -1.0, 0.0, None, &settings()).unwrap();
        assert_eq!(r.status, Status::NotApplicable);
        assert!(!r.pass);
        assert!(r.hypothesis_margin.is_none());
        let r = check_theta_comparison(&m, fin(4.0), 0.0, 0.0, &settings()).unwrap();
        assert_eq!(r.status, Status::NotApplicable);
        assert!(r.hypothesis_margin.unwrap() < 0.0);
    }

    #[test]
    fn inscribed_radius_examples() {
        let s = settings();
        let m = make_rigidity_model(3, fin(3.0), 1.0, 0.0, 1.2, 0.0).unwrap();
        let r = check_inscribed_radius(&m, 1.0, 0.0, fin(3.0), &s).unwrap();
        assert_eq!(r.status, Status::Pass);
        assert!((r.values["c_ball"] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);

        let m = make_rigidity_model(3, fin(3.0), -1.0, 2.0, 0.5, 0.0).unwrap();
        let r = check_inscribed_radius(&m, -1.0, 2.0, fin(3.0), &s).unwrap();
        assert_eq!(r.status, Status::Pass);
        assert!((r.values["c_ball"] - 0.5493061443340549).abs() < 1e-12);

        let m = make_rigidity_model(3, fin(3.0), -1.0, 0.5, 1.0, 0.0).unwrap();
        let r = check_inscribed_radius(&m, -1.0, 0.5, fin(3.0), &s).unwrap();
        assert_eq!(r.status, Status::NotApplicable);
    }

    #[test]
    fn kasue_examples() {
        let s = settings();
        let r = check_kasue_eigen_bounds(2.0, EffectiveDim::Infinite, 0.0, 0.0, 1.0, &s).unwrap();
        assert_eq!(r.status, Status::Pass);
        assert_eq!(r.values["kasue_bound"], 0.25);
        let r = check_kasue_eigen_bounds(2.0, fin(2.0), -1.0, 1.0, 1.0, &s).unwrap();
        assert_eq!(r.status, Status::Pass);
        assert!((r.values["kasue_bound"] - 0.6256).abs() < 1e-4);
        let r = check_kasue_eigen_bounds(2.0, fin(3.0), 0.0, 0.0, 1.0, &s).unwrap();
        assert!((r.values["product_bound"] - 1.0).abs() < 1e-9);
        assert_eq!(r.status, Status::Pass);
        let r = check_kasue_eigen_bounds(2.0, fin(3.0), 1.0, 0.0, 2.0, &s).unwrap();
        assert_eq!(r.status, Status::NotApplicable);
    }

    #[test]
    fn spectrum_limit_examples() {
        let s = settings();
        let r = check_spectrum_limit(2.0, 2.0, 1.0, Some(&[5.0, 10.0, 40.0]), &s).unwrap();
        assert_eq!(r.status, Status::Pass);
        assert!((r.values["bound_at_max_D"] - 0.25).abs() < 1e-10);
        let r = check_spectrum_limit(3.0, 4.0, 0.5, Some(&[10.0, 60.0]), &s).unwrap();
        assert!((r.values["limit"] - 0.125).abs() < 1e-15);
        assert_eq!(r.status, Status::Pass);
        let r = check_spectrum_limit(2.0, 3.0, 0.0, None, &s).unwrap();
        assert_eq!(r.status, Status::NotApplicable);
    }

    #[test]
    fn domain_volume_examples() {
        let s = settings();
        let m = make_rigidity_model(3, fin(3.0), -1.0, 1.0, 2.0, 0.0).unwrap();
        let r = check_domain_volume_estimate(&m, fin(3.0), -1.0, 1.0, 0.5, 1.0, &s).unwrap();
        assert_eq!(r.status, Status::Pass);
        let expect = 2.0 * std::f64::consts::PI * ((-1.0f64).exp() - (-2.0f64).exp());
        assert!((r.values["volume"] - expect).abs() < 1e-11);
        assert!(check_domain_volume_estimate(&m, fin(3.0), -1.0, 1.0, 1.0, 1.0, &s).is_err());
    }

    #[test]
    fn perturbations_are_deterministic_and_strict() {
        let s = settings();
        let pert = Perturbation {
            seed: 11,
            amplitude: 0.3,
        };
        let (m1, r1) = perturbed_manifold(3, fin(4.0), -1.0, 0.5, 1.5, 0.0, pert).unwrap();
        let (m2, r2) = perturbed_manifold(3, fin(4.0), -1.0, 0.5, 1.5, 0.0, pert).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(m1, m2);
        let theta = check_theta_comparison(&m1, fin(4.0), -1.0, 0.5, &s).unwrap();
        assert_eq!(theta.status, Status::Pass, "{theta:?}");
        assert!(theta.conclusion_margin.unwrap() > 0.0);
        let hk = check_heintze_karcher(&m1, fin(4.0), -1.0, 0.5, None, &s).unwrap();
        assert!(hk.conclusion_margin.unwrap() > 0.0);
        let growth = check_volume_growth_equality(&m1, fin(4.0), -1.0, 0.5, None, &s).unwrap();
        assert_eq!(growth.status, Status::Fail);
    }

    #[test]
    fn infinite_family_requires_flat_parameters() {
        let pert = Perturbation {
            seed: 1,
            amplitude: 0.5,
        };
        assert!(perturbed_manifold(3, EffectiveDim::Infinite, -1.0, 0.0, 1.0, 0.0, pert).is_err());
        let (m, _) =
            perturbed_manifold(3, EffectiveDim::Infinite, 0.0, 0.0, 1.0, 0.0, pert).unwrap();
        let r = check_theta_comparison(&m, EffectiveDim::Infinite, 0.0, 0.0, &settings()).unwrap();
        assert_eq!(r.status, Status::Pass, "{r:?}");
    }
}
