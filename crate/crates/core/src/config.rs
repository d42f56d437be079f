//! Suite configuration: named manifolds, checks with overrides, parameter
//! sweeps and output paths, in TOML.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Expr;
use crate::model_space::{ball_radius_or_inf, unit_sphere_volume, EffectiveDim};
use crate::profile::{Profile, SampleTable};
use crate::verification::{Perturbation, PerturbationRecord, Settings};
use crate::warped_product::{
    build, make_product, make_rigidity_model, rigidity_fiber_constant, FiberSpec, WarpedManifold,
};

/// Check names accepted in `[[checks]]` and `[sweep]`.
pub const KNOWN_CHECKS: [&str; 9] = [
    "theta_comparison",
    "heintze_karcher",
    "bishop_gromov",
    "inscribed_radius",
    "eigenvalue_bound",
    "kasue_eigen_bounds",
    "spectrum_limit",
    "domain_volume_estimate",
    "volume_growth_equality",
];

/// Checks that take only `(p, N, κ, λ, D)` and no manifold.
pub const PARAMETER_CHECKS: [&str; 2] = ["kasue_eigen_bounds", "spectrum_limit"];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Semantic { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn semantic(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Semantic {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default)]
    pub settings: Settings,
    #[serde(default)]
    pub manifolds: BTreeMap<String, ManifoldSpec>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldKind {
    /// `w = s_{κ,λ}`, constant `f = f0`, fiber of curvature `κ + λ²`.
    Model,
    /// The equality model of `(n, N, κ, λ)`.
    Rigidity,
    /// `[0, L] × S^{n-1}` with `w = 1`, `f = 0`.
    Product,
    /// User-supplied `w`, `f` and fiber.
    Custom,
}

/// A profile as an expression in `t` or a uniform sample table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    Expr(String),
    Table(SampleTable),
}

impl ProfileSpec {
    fn to_profile(&self, path: &str) -> Result<Profile, ConfigError> {
        match self {
            ProfileSpec::Expr(src) => Profile::parse(src),
            ProfileSpec::Table(table) => Profile::sampled(table.clone()),
        }
        .map_err(|e| semantic(path, e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberConfig {
    pub einstein_constant: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_volume: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub kind: ManifoldKind,
    pub n: u32,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub big_n: Option<EffectiveDim>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_boundary: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<ProfileSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<ProfileSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber: Option<FiberConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
}

impl ManifoldSpec {
    /// `(N, κ, λ)` the checks on this manifold use unless overridden.
    pub fn default_params(&self) -> (Option<EffectiveDim>, Option<f64>, Option<f64>) {
        match self.kind {
            ManifoldKind::Product => (
                Some(self.big_n.unwrap_or(EffectiveDim::Infinite)),
                Some(self.kappa.unwrap_or(0.0)),
                Some(self.lambda.unwrap_or(0.0)),
            ),
            ManifoldKind::Model => (
                Some(self.big_n.unwrap_or(EffectiveDim::Finite(self.n as f64))),
                self.kappa,
                self.lambda,
            ),
            _ => (self.big_n, self.kappa, self.lambda),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub check: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifold: Option<String>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub big_n: Option<EffectiveDim>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<[f64; 2]>>,
    #[serde(rename = "D_grid", default, skip_serializing_if = "Option::is_none")]
    pub d_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
}

/// Cartesian grid over pure-parameter checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub checks: Vec<String>,
    #[serde(default = "default_p_grid")]
    pub p: Vec<f64>,
    #[serde(rename = "N")]
    pub big_n: Vec<EffectiveDim>,
    #[serde(default = "zero_grid")]
    pub kappa: Vec<f64>,
    #[serde(default = "zero_grid")]
    pub lambda: Vec<f64>,
    #[serde(rename = "D")]
    pub d: Vec<f64>,
}

fn default_p_grid() -> Vec<f64> {
    vec![2.0]
}

fn zero_grid() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

/// 1-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Parses and validates a suite config.
pub fn parse_config(text: &str) -> Result<SuiteConfig, ConfigError> {
    let config: SuiteConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
        ConfigError::Syntax {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<SuiteConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

/// Serializes a config to TOML that `parse_config` reads back unchanged.
pub fn serialize_config(config: &SuiteConfig) -> String {
    toml::to_string(config).expect("suite config is representable in TOML")
}

/// A manifold built from its spec, with the perturbation draw if any.
#[derive(Debug, Clone)]
pub struct BuiltManifold {
    pub manifold: WarpedManifold,
    pub perturbation: Option<PerturbationRecord>,
}

fn require(value: Option<f64>, path: &str, name: &str) -> Result<f64, ConfigError> {
    value.ok_or_else(|| semantic(format!("{path}.{name}"), "required for this manifold kind"))
}

/// Builds the manifold a spec describes.
pub fn build_manifold(name: &str, spec: &ManifoldSpec) -> Result<BuiltManifold, ConfigError> {
    let path = format!("manifolds.{name}");
    let geometry = |e: &dyn std::fmt::Display| semantic(path.clone(), e.to_string());
    if spec.n < 2 {
        return Err(semantic(
            format!("{path}.n"),
            format!("n = {} must be at least 2", spec.n),
        ));
    }
    if !(spec.length > 0.0) || !spec.length.is_finite() {
        return Err(semantic(
            format!("{path}.L"),
            format!("L = {} must be positive and finite", spec.length),
        ));
    }
    if let Some(EffectiveDim::Finite(v)) = spec.big_n {
        if !(v >= spec.n as f64) {
            return Err(semantic(
                format!("{path}.N"),
                format!("N = {v} must satisfy N >= n = {}", spec.n),
            ));
        }
    }
    let extra = |field: &str, present: bool| -> Result<(), ConfigError> {
        if present {
            Err(semantic(
                format!("{path}.{field}"),
                format!("not used by kind {:?}", spec.kind).to_lowercase(),
            ))
        } else {
            Ok(())
        }
    };
    if spec.kind != ManifoldKind::Custom {
        extra("w", spec.w.is_some())?;
        extra("f", spec.f.is_some())?;
        extra("fiber", spec.fiber.is_some())?;
    }
    if spec.kind != ManifoldKind::Rigidity {
        extra("perturbation", spec.perturbation.is_some())?;
    }

    let model_length_check = |kappa: f64, lambda: f64| -> Result<(), ConfigError> {
        let c_bar = ball_radius_or_inf(kappa, lambda);
        if spec.length >= c_bar {
            return Err(semantic(
                format!("{path}.L"),
                format!(
                    "L = {} must be below C̄_{{κ,λ}} = {c_bar} for κ = {kappa}, λ = {lambda}",
                    spec.length
                ),
            ));
        }
        Ok(())
    };

    let second = spec.second_boundary.unwrap_or(false);
    match spec.kind {
        ManifoldKind::Product => {
            extra("second_boundary", spec.second_boundary.is_some())?;
            let manifold = make_product(spec.n, spec.length).map_err(|e| geometry(&e))?;
            Ok(BuiltManifold {
                manifold,
                perturbation: None,
            })
        }
        ManifoldKind::Rigidity => {
            extra("second_boundary", spec.second_boundary.is_some())?;
            let big_n = spec
                .big_n
                .ok_or_else(|| semantic(format!("{path}.N"), "required for kind rigidity"))?;
            let kappa = require(spec.kappa, &path, "kappa")?;
            let lambda = require(spec.lambda, &path, "lambda")?;
            model_length_check(kappa, lambda)?;
            let f0 = spec.f0.unwrap_or(0.0);
            match spec.perturbation {
                None => {
                    let manifold =
                        make_rigidity_model(spec.n, big_n, kappa, lambda, spec.length, f0)
                            .map_err(|e| geometry(&e))?;
                    Ok(BuiltManifold {
                        manifold,
                        perturbation: None,
                    })
                }
                Some(pert) => {
                    let (manifold, record) = crate::verification::perturbed_manifold(
                        spec.n,
                        big_n,
                        kappa,
                        lambda,
                        spec.length,
                        f0,
                        pert,
                    )
                    .map_err(|e| semantic(format!("{path}.perturbation"), e.to_string()))?;
                    Ok(BuiltManifold {
                        manifold,
                        perturbation: Some(record),
                    })
                }
            }
        }
        ManifoldKind::Model => {
            let kappa = require(spec.kappa, &path, "kappa")?;
            let lambda = require(spec.lambda, &path, "lambda")?;
            model_length_check(kappa, lambda)?;
            let fiber = FiberSpec {
                dim: spec.n - 1,
                einstein_constant: rigidity_fiber_constant(
                    spec.n,
                    EffectiveDim::Finite(spec.n as f64),
                    kappa,
                    lambda,
                ),
                total_volume: unit_sphere_volume(spec.n - 1),
            };
            let w = Profile::Expr(Expr::Model { kappa, lambda });
            let f = Profile::constant(spec.f0.unwrap_or(0.0));
            let manifold =
                build(spec.n, fiber, spec.length, w, f, second).map_err(|e| geometry(&e))?;
            Ok(BuiltManifold {
                manifold,
                perturbation: None,
            })
        }
        ManifoldKind::Custom => {
            let w = spec
                .w
                .as_ref()
                .ok_or_else(|| semantic(format!("{path}.w"), "required for kind custom"))?
                .to_profile(&format!("{path}.w"))?;
            let f = match &spec.f {
                Some(f) => f.to_profile(&format!("{path}.f"))?,
                None => Profile::constant(spec.f0.unwrap_or(0.0)),
            };
            if spec.f.is_some() && spec.f0.is_some() {
                return Err(semantic(
                    format!("{path}.f0"),
                    "give either f or f0, not both",
                ));
            }
            let fiber = match spec.fiber {
                None => FiberSpec::unit_sphere(spec.n - 1),
                Some(c) => FiberSpec {
                    dim: spec.n - 1,
                    einstein_constant: c.einstein_constant,
                    total_volume: c
                        .total_volume
                        .unwrap_or_else(|| unit_sphere_volume(spec.n - 1)),
                },
            };
            if !(fiber.total_volume > 0.0) {
                return Err(semantic(
                    format!("{path}.fiber.total_volume"),
                    "must be positive",
                ));
            }
            let manifold =
                build(spec.n, fiber, spec.length, w, f, second).map_err(|e| geometry(&e))?;
            Ok(BuiltManifold {
                manifold,
                perturbation: None,
            })
        }
    }
}

fn check_finite(path: &str, name: &str, v: Option<f64>) -> Result<(), ConfigError> {
    match v {
        Some(x) if !x.is_finite() => Err(semantic(
            format!("{path}.{name}"),
            format!("{x} is not finite"),
        )),
        _ => Ok(()),
    }
}

fn check_name(path: &str, name: &str) -> Result<(), ConfigError> {
    if KNOWN_CHECKS.contains(&name) {
        Ok(())
    } else {
        Err(semantic(
            path,
            format!(
                "unknown check {name:?}; known checks: {}",
                KNOWN_CHECKS.join(", ")
            ),
        ))
    }
}

impl SuiteConfig {
    /// Enforces the constraints serde cannot express.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.settings;
        if s.grid < 2 {
            return Err(semantic("settings.grid", "must be at least 2"));
        }
        if s.volume_samples < 2 {
            return Err(semantic("settings.volume_samples", "must be at least 2"));
        }
        for (name, v) in [
            ("gate_tolerance", s.gate_tolerance),
            ("conclusion_tolerance", s.conclusion_tolerance),
            ("limit_tolerance", s.limit_tolerance),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(semantic(
                    format!("settings.{name}"),
                    "must be nonnegative and finite",
                ));
            }
        }
        for (name, spec) in &self.manifolds {
            build_manifold(name, spec)?;
        }
        for (i, c) in self.checks.iter().enumerate() {
            self.validate_check(i, c)?;
        }
        if let Some(sweep) = &self.sweep {
            if sweep.checks.is_empty() {
                return Err(semantic("sweep.checks", "must be nonempty"));
            }
            for (i, name) in sweep.checks.iter().enumerate() {
                let path = format!("sweep.checks[{i}]");
                check_name(&path, name)?;
                if !PARAMETER_CHECKS.contains(&name.as_str()) {
                    return Err(semantic(
                        path,
                        format!(
                            "{name} needs a manifold; sweeps take {}",
                            PARAMETER_CHECKS.join(", ")
                        ),
                    ));
                }
            }
            for (field, len) in [
                ("p", sweep.p.len()),
                ("N", sweep.big_n.len()),
                ("kappa", sweep.kappa.len()),
                ("lambda", sweep.lambda.len()),
                ("D", sweep.d.len()),
            ] {
                if len == 0 {
                    return Err(semantic(format!("sweep.{field}"), "grid must be nonempty"));
                }
            }
            for (field, values) in [
                ("p", &sweep.p),
                ("kappa", &sweep.kappa),
                ("lambda", &sweep.lambda),
                ("D", &sweep.d),
            ] {
                if let Some(x) = values.iter().find(|x| !x.is_finite()) {
                    return Err(semantic(
                        format!("sweep.{field}"),
                        format!("{x} is not finite"),
                    ));
                }
            }
            if let Some(p) = sweep.p.iter().find(|p| !(**p > 1.0)) {
                return Err(semantic("sweep.p", format!("p = {p} must lie in (1, ∞)")));
            }
            if let Some(d) = sweep.d.iter().find(|d| !(**d > 0.0)) {
                return Err(semantic("sweep.D", format!("D = {d} must be positive")));
            }
        }
        Ok(())
    }

    fn validate_check(&self, i: usize, c: &CheckSpec) -> Result<(), ConfigError> {
        let path = format!("checks[{i}]");
        check_name(&format!("{path}.check"), &c.check)?;
        for (name, v) in [
            ("kappa", c.kappa),
            ("lambda", c.lambda),
            ("p", c.p),
            ("D", c.d),
            ("a", c.a),
            ("b", c.b),
            ("tolerance", c.tolerance),
        ] {
            check_finite(&path, name, v)?;
        }
        if let Some(p) = c.p {
            if !(p > 1.0) {
                return Err(semantic(
                    format!("{path}.p"),
                    format!("p = {p} must lie in (1, ∞)"),
                ));
            }
        }
        if let Some(t) = c.tolerance {
            if !(t >= 0.0) {
                return Err(semantic(format!("{path}.tolerance"), "must be nonnegative"));
            }
        }
        if let Some(g) = c.grid {
            if g < 2 {
                return Err(semantic(format!("{path}.grid"), "must be at least 2"));
            }
        }
        let parametric = PARAMETER_CHECKS.contains(&c.check.as_str());
        if parametric {
            if let Some(m) = &c.manifold {
                return Err(semantic(
                    format!("{path}.manifold"),
                    format!("{} takes no manifold, got {m:?}", c.check),
                ));
            }
            if c.big_n.is_none() {
                return Err(semantic(
                    format!("{path}.N"),
                    format!("required for {}", c.check),
                ));
            }
            if c.check == "spectrum_limit" {
                if c.lambda.is_none() {
                    return Err(semantic(
                        format!("{path}.lambda"),
                        "required for spectrum_limit",
                    ));
                }
                if c.big_n.is_some_and(|n| n.is_infinite()) {
                    return Err(semantic(
                        format!("{path}.N"),
                        "spectrum_limit needs a finite N",
                    ));
                }
                if let Some(grid) = &c.d_grid {
                    if grid.is_empty() || grid.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
                        return Err(semantic(
                            format!("{path}.D_grid"),
                            "must be nonempty with positive finite entries",
                        ));
                    }
                }
            } else {
                if c.d.is_none_or(|d| !(d > 0.0)) {
                    return Err(semantic(
                        format!("{path}.D"),
                        "a positive D is required for kasue_eigen_bounds",
                    ));
                }
                if c.big_n.is_some_and(|n| !n.is_infinite())
                    && (c.kappa.is_none() || c.lambda.is_none())
                {
                    return Err(semantic(path, "kappa and lambda are required for finite N"));
                }
            }
            return Ok(());
        }

        let name = c.manifold.as_ref().ok_or_else(|| {
            semantic(
                format!("{path}.manifold"),
                format!("required for {}", c.check),
            )
        })?;
        let spec = self.manifolds.get(name).ok_or_else(|| {
            semantic(
                format!("{path}.manifold"),
                format!("undefined manifold {name:?}"),
            )
        })?;
        let (n0, k0, l0) = spec.default_params();
        if c.big_n.or(n0).is_none() {
            return Err(semantic(
                format!("{path}.N"),
                format!("required: manifold {name:?} does not fix N"),
            ));
        }
        if c.kappa.or(k0).is_none() {
            return Err(semantic(
                format!("{path}.kappa"),
                format!("required: manifold {name:?} does not fix kappa"),
            ));
        }
        if c.lambda.or(l0).is_none() {
            return Err(semantic(
                format!("{path}.lambda"),
                format!("required: manifold {name:?} does not fix lambda"),
            ));
        }
        let length = spec.length;
        if let Some(radii) = &c.radii {
            if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0 && *r <= length)) {
                return Err(semantic(
                    format!("{path}.radii"),
                    format!("radii must be nonempty and lie in (0, L = {length}]"),
                ));
            }
        }
        if let Some(pairs) = &c.pairs {
            if pairs.is_empty()
                || pairs
                    .iter()
                    .any(|[r, big_r]| !(*r > 0.0 && r < big_r && *big_r <= length))
            {
                return Err(semantic(
                    format!("{path}.pairs"),
                    format!("pairs [r, R] need 0 < r < R <= L = {length}"),
                ));
            }
        }
        if c.check == "domain_volume_estimate" {
            let (a, b) = (c.a, c.b);
            match (a, b) {
                (Some(a), Some(b)) if a > 0.0 && a < b && b <= length => {}
                _ => {
                    return Err(semantic(
                        path,
                        format!("domain_volume_estimate needs 0 < a < b <= L = {length}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[manifolds.hyp]
kind = "rigidity"
n = 3
N = 3
kappa = -1
lambda = 1
L = 2

[[checks]]
check = "theta_comparison"
manifold = "hyp"
"#;

    #[test]
    fn minimal_config_applies_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.settings, Settings::default());
        assert_eq!(c.checks.len(), 1);
        assert_eq!(c.manifolds["hyp"].big_n, Some(EffectiveDim::Finite(3.0)));
    }

    #[test]
    fn round_trip() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(parse_config(&serialize_config(&c)).unwrap(), c);
    }

    #[test]
    fn length_beyond_ball_radius_is_semantic() {
        let text = MINIMAL
            .replace("kappa = -1\nlambda = 1", "kappa = 1\nlambda = 0")
            .replace("L = 2", "L = 1.6");
        match parse_config(&text).unwrap_err() {
            ConfigError::Semantic { path, message } => {
                assert_eq!(path, "manifolds.hyp.L");
                assert!(message.contains("C̄"), "{message}");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn unknown_check_lists_known() {
        let text = MINIMAL.replace("theta_comparison", "theta_comparisn");
        match parse_config(&text).unwrap_err() {
            ConfigError::Semantic { path, message } => {
                assert_eq!(path, "checks[0].check");
                assert!(message.contains("bishop_gromov"));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let text = MINIMAL.replace("n = 3", "n = = 3");
        match parse_config(&text).unwrap_err() {
            ConfigError::Syntax { line, .. } => assert_eq!(line, 4),
            e => panic!("{e}"),
        }
        let text = MINIMAL.replace("L = 2", "L = 2\nlength = 3");
        match parse_config(&text).unwrap_err() {
            ConfigError::Syntax { line, message, .. } => {
                assert_eq!(line, 9);
                assert!(message.contains("length"));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn custom_profiles_and_tables() {
        let text = r#"
[manifolds.remark]
kind = "custom"
n = 3
L = 1.5
w = "cosh(t)"
f = "2*t^2"

[manifolds.table]
kind = "custom"
n = 3
L = 1.0
w = { start = 0.0, end = 1.0, values = [1.0, 1.0, 1.0, 1.0, 1.0] }

[[checks]]
check = "theta_comparison"
manifold = "remark"
N = "inf"
kappa = 0
lambda = 0
"#;
        let c = parse_config(text).unwrap();
        assert!(matches!(
            c.manifolds["table"].w,
            Some(ProfileSpec::Table(_))
        ));
        assert_eq!(parse_config(&serialize_config(&c)).unwrap(), c);
        assert_eq!(c.checks[0].big_n, Some(EffectiveDim::Infinite));
    }

    #[test]
    fn sweep_grids_must_be_nonempty() {
        let text = "[sweep]\nchecks = [\"kasue_eigen_bounds\"]\nN = []\nD = [1.0]\n";
        match parse_config(text).unwrap_err() {
            ConfigError::Semantic { path, .. } => assert_eq!(path, "sweep.N"),
            e => panic!("{e}"),
        }
    }
}
