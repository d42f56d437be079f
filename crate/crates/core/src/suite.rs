//! Suite execution: expands a config into jobs and runs them in parallel,
//! returning reports in declaration order.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::config::{build_manifold, BuiltManifold, CheckSpec, ConfigError, SuiteConfig};
use crate::model_space::EffectiveDim;
use crate::verification::{
    check_bishop_gromov, check_domain_volume_estimate, check_eigenvalue_bound,
    check_heintze_karcher, check_inscribed_radius, check_kasue_eigen_bounds, check_spectrum_limit,
    check_theta_comparison, check_volume_growth_equality, CheckError, ReportParams, Settings,
    VerificationReport,
};

/// Environment variable capping the worker threads of `run_suite`.
pub const THREADS_ENV: &str = "COLLAR_THREADS";

/// One fully resolved check invocation.
#[derive(Debug, Clone)]
struct Job {
    spec: CheckSpec,
    settings: Settings,
}

fn job_settings(base: &Settings, spec: &CheckSpec) -> Settings {
    let mut s = *base;
    if let Some(g) = spec.grid {
        s.grid = g;
    }
    if let Some(t) = spec.tolerance {
        if spec.check == "spectrum_limit" {
            s.limit_tolerance = t;
        } else {
            s.conclusion_tolerance = t;
        }
    }
    s
}

fn expand(config: &SuiteConfig) -> Vec<Job> {
    let mut jobs: Vec<Job> = config
        .checks
        .iter()
        .map(|c| Job {
            spec: c.clone(),
            settings: job_settings(&config.settings, c),
        })
        .collect();
    if let Some(sweep) = &config.sweep {
        for name in &sweep.checks {
            for &p in &sweep.p {
                for &big_n in &sweep.big_n {
                    if name == "spectrum_limit" {
                        for &lambda in &sweep.lambda {
                            let spec = CheckSpec {
                                check: name.clone(),
                                big_n: Some(big_n),
                                lambda: Some(lambda),
                                p: Some(p),
                                d_grid: Some(sweep.d.clone()),
                                ..Default::default()
                            };
                            jobs.push(Job {
                                settings: config.settings,
                                spec,
                            });
                        }
                        continue;
                    }
                    for &kappa in &sweep.kappa {
                        for &lambda in &sweep.lambda {
                            for &d in &sweep.d {
                                let spec = CheckSpec {
                                    check: name.clone(),
                                    big_n: Some(big_n),
                                    kappa: Some(kappa),
                                    lambda: Some(lambda),
                                    p: Some(p),
                                    d: Some(d),
                                    ..Default::default()
                                };
                                jobs.push(Job {
                                    settings: config.settings,
                                    spec,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    jobs
}

fn run_job(
    config: &SuiteConfig,
    manifolds: &BTreeMap<String, BuiltManifold>,
    job: &Job,
) -> VerificationReport {
    let spec = &job.spec;
    let s = &job.settings;
    let p = spec.p.unwrap_or(2.0);
    let fallback = ReportParams {
        big_n: spec.big_n,
        kappa: spec.kappa,
        lambda: spec.lambda,
        p: spec.p,
        d: spec.d,
        a: spec.a,
        b: spec.b,
        ..Default::default()
    };

    let result: Result<VerificationReport, CheckError> = match spec.check.as_str() {
        "kasue_eigen_bounds" => check_kasue_eigen_bounds(
            p,
            spec.big_n.unwrap_or(EffectiveDim::Infinite),
            spec.kappa.unwrap_or(0.0),
            spec.lambda.unwrap_or(0.0),
            spec.d.unwrap_or(1.0),
            s,
        ),
        "spectrum_limit" => match spec.big_n {
            Some(EffectiveDim::Finite(v)) => {
                check_spectrum_limit(p, v, spec.lambda.unwrap_or(0.0), spec.d_grid.as_deref(), s)
            }
            _ => Err(CheckError::InvalidArguments(
                "spectrum_limit needs a finite N".into(),
            )),
        },
        name => {
            let mname = spec.manifold.as_deref().unwrap_or_default();
            let built = &manifolds[mname];
            let m = &built.manifold;
            let (n0, k0, l0) = config.manifolds[mname].default_params();
            let big_n = spec.big_n.or(n0).unwrap_or(EffectiveDim::Infinite);
            let kappa = spec.kappa.or(k0).unwrap_or(0.0);
            let lambda = spec.lambda.or(l0).unwrap_or(0.0);
            let pairs: Option<Vec<(f64, f64)>> = spec
                .pairs
                .as_ref()
                .map(|v| v.iter().map(|[a, b]| (*a, *b)).collect());
            let report = match name {
                "theta_comparison" => check_theta_comparison(m, big_n, kappa, lambda, s),
                "heintze_karcher" => {
                    check_heintze_karcher(m, big_n, kappa, lambda, spec.radii.as_deref(), s)
                }
                "bishop_gromov" => {
                    check_bishop_gromov(m, big_n, kappa, lambda, pairs.as_deref(), s)
                }
                "inscribed_radius" => check_inscribed_radius(m, kappa, lambda, big_n, s),
                "eigenvalue_bound" => check_eigenvalue_bound(m, p, big_n, kappa, lambda, s),
                "domain_volume_estimate" => check_domain_volume_estimate(
                    m,
                    big_n,
                    kappa,
                    lambda,
                    spec.a.unwrap_or(0.0),
                    spec.b.unwrap_or(0.0),
                    s,
                ),
                "volume_growth_equality" => {
                    check_volume_growth_equality(m, big_n, kappa, lambda, spec.radii.as_deref(), s)
                }
                other => Err(CheckError::InvalidArguments(format!(
                    "unknown check {other:?}"
                ))),
            };
            report.map(|r| {
                let mut r = r.with_seed(built.perturbation.as_ref().map(|p| p.seed));
                if let Some(rec) = &built.perturbation {
                    r.notes.push(format!(
                        "perturbation: κ' = {}, λ' = {}, L = {}, ε = {}, w = {}",
                        rec.kappa, rec.lambda, rec.length, rec.epsilon, rec.w
                    ));
                }
                r
            })
        }
    };
    let report =
        result.unwrap_or_else(|e| VerificationReport::errored(&spec.check, fallback, s, &e));
    match &spec.manifold {
        Some(name) => report.with_manifold(name),
        None => report,
    }
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()?
        .trim()
        .parse::<usize>()
        .ok()
        .filter(|n| *n > 0)
}

/// Runs every check in `config`; reports follow `[[checks]]` order, then the sweep.
///
/// Check-level numerical failures become `fail` reports with a note; only
/// configuration problems are errors.
pub fn run_suite(config: &SuiteConfig) -> Result<Vec<VerificationReport>, ConfigError> {
    config.validate()?;
    let mut manifolds = BTreeMap::new();
    for (name, spec) in &config.manifolds {
        manifolds.insert(name.clone(), build_manifold(name, spec)?);
    }
    let jobs = expand(config);
    let run = || {
        jobs.par_iter()
            .map(|job| run_job(config, &manifolds, job))
            .collect::<Vec<_>>()
    };
    match thread_cap() {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => Ok(pool.install(run)),
            Err(_) => Ok(run()),
        },
        None => Ok(run()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use crate::verification::Status;

    #[test]
    fn empty_suite_is_empty() {
        let reports = run_suite(&SuiteConfig::default()).unwrap();
        assert!(reports.is_empty());
    }

    #[test]
    fn order_follows_declaration_and_sweep() {
        let text = r#"
[manifolds.hyp]
kind = "rigidity"
n = 3
N = 3
kappa = -1
lambda = 1
L = 2

[[checks]]
check = "heintze_karcher"
manifold = "hyp"

[[checks]]
check = "theta_comparison"
manifold = "hyp"
N = 4
kappa = 0

[sweep]
checks = ["kasue_eigen_bounds"]
N = [2, 3]
kappa = [-1]
lambda = [1]
D = [0.5, 1]
"#;
        let config = parse_config(text).unwrap();
        let reports = run_suite(&config).unwrap();
        let names: Vec<_> = reports.iter().map(|r| r.check_name.as_str()).collect();
        assert_eq!(names[..2], ["heintze_karcher", "theta_comparison"]);
        assert_eq!(reports.len(), 6);
        assert_eq!(reports[0].status, Status::Pass);
        // Hyperbolic rigidity model does not satisfy Ric^4_f >= 0.
        assert_eq!(reports[1].status, Status::NotApplicable);
        assert!(reports[2..].iter().all(|r| r.status == Status::Pass));
        assert_eq!(reports[3].params.d, Some(1.0));
        assert_eq!(run_suite(&config).unwrap(), reports);
    }
}
