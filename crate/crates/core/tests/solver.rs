use std::sync::Arc;

use collar::model_space::s_kappa_lambda;
use collar::sturm_liouville::{
    fd_oracle_p2, free_eigenvalue, free_eigenvalue_closed_form, model_eigenvalue,
    principal_eigenvalue, rayleigh_quotient, DensityProfile,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Principal eigenvalue by inverse iteration on the discrete energy
/// `Σ h a_{i+1/2} |Δu/h|^p` over `Σ c_i a_i |u_i|^p` with `u_0 = 0`.
///
/// With a free right end the discrete Euler-Lagrange system is solved
/// exactly by summing the flux from the right.
fn inverse_iteration<A: Fn(f64) -> f64>(
    p: f64,
    a: A,
    d: f64,
    mesh: usize,
    iterations: usize,
) -> f64 {
    let h = d / mesh as f64;
    let a_mid: Vec<f64> = (0..mesh).map(|i| a((i as f64 + 0.5) * h)).collect();
    let a_node: Vec<f64> = (0..=mesh).map(|i| a(i as f64 * h)).collect();
    let weight = |i: usize| if i == mesh { 0.5 * h } else { h };
    let quotient = |u: &[f64]| {
        let num: f64 = (0..mesh)
            .map(|i| h * a_mid[i] * ((u[i + 1] - u[i]) / h).abs().powf(p))
            .sum();
        let den: f64 = (1..=mesh)
            .map(|i| weight(i) * a_node[i] * u[i].abs().powf(p))
            .sum();
        num / den
    };
    let mut u: Vec<f64> = (0..=mesh).map(|i| i as f64 * h).collect();
    for _ in 0..iterations {
        let mut flux = 0.0;
        let mut slopes = vec![0.0; mesh];
        for i in (0..mesh).rev() {
            let j = i + 1;
            flux += weight(j) * a_node[j] * u[j].abs().powf(p - 2.0) * u[j];
            let s = flux / a_mid[i];
            slopes[i] = s.signum() * s.abs().powf(1.0 / (p - 1.0));
        }
        let mut v = vec![0.0; mesh + 1];
        for i in 0..mesh {
            v[i + 1] = v[i] + h * slopes[i];
        }
        let top = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        u = v.into_iter().map(|x| x / top).collect();
    }
    quotient(&u)
}

fn model_density(big_n: f64, kappa: f64, lambda: f64) -> impl Fn(f64) -> f64 {
    move |t| s_kappa_lambda(kappa, lambda, t).value.powf(big_n - 1.0)
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn inverse_iteration_reproduces_closed_form() {
    for p in [1.5, 2.0, 3.0] {
        let exact = free_eigenvalue_closed_form(p, 1.0);
        let approx = inverse_iteration(p, |_| 1.0, 1.0, 4000, 300);
        assert!(rel(approx, exact) < 1e-5, "p = {p}: {approx} vs {exact}");
    }
}

#[test]
fn p3_matches_inverse_iteration() {
    let cases: [(f64, f64, f64, f64); 4] = [
        (4.0, -1.0, 0.5, 1.0),
        (3.0, 1.0, 0.0, 1.0),
        (5.0, -1.0, 1.0, 2.0),
        (3.0, 0.0, 0.5, 1.5),
    ];
    for (n, kappa, lambda, d) in cases {
        let mu = model_eigenvalue(3.0, n, kappa, lambda, d).unwrap().mu;
        let oracle = inverse_iteration(3.0, model_density(n, kappa, lambda), d, 4000, 400);
        assert!(
            rel(mu, oracle) < 1e-4,
            "(N, κ, λ, D) = {:?}: {mu} vs {oracle}",
            (n, kappa, lambda, d)
        );
    }
}

#[test]
fn p2_shooting_matches_finite_differences_on_seeded_densities() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..20 {
        let (c1, c2, c3) = (
            rng.gen_range(-2.0..2.0),
            rng.gen_range(0.0..0.8),
            rng.gen_range(0.5..4.0),
        );
        let d = rng.gen_range(0.5..3.0);
        let density = DensityProfile::function(move |t: f64| (c1 * t + c2 * (c3 * t).sin()).exp());
        let mu = principal_eigenvalue(2.0, &density, d).unwrap().mu;
        let fd = fd_oracle_p2(&density, d, 4000).unwrap();
        assert!(rel(mu, fd) < 1e-4, "{mu} vs {fd}");
    }
}

#[test]
fn sampled_density_tracks_closed_form_density() {
    let d = 1.0;
    let exact = model_eigenvalue(2.0, 3.0, -1.0, 1.0, d).unwrap().mu;
    let table = collar::profile::SampleTable::from_fn(0.0, d, 801, |t| (-2.0 * t).exp());
    let sampled = principal_eigenvalue(2.0, &DensityProfile::sampled(table).unwrap(), d)
        .unwrap()
        .mu;
    assert!(rel(sampled, exact) < 1e-6, "{sampled} vs {exact}");
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn rayleigh_quotient_of_eigenfunction_is_eigenvalue(
        p in 1.4f64..4.0, n in 2.0f64..6.0, kappa in -1.5f64..0.5, lambda in 0.0f64..1.0, d in 0.3f64..1.2,
    ) {
        let c_bar = collar::model_space::ball_radius_or_inf(kappa, lambda);
        prop_assume!(d < 0.95 * c_bar);
        let density = DensityProfile::model(n, kappa, lambda);
        let r = principal_eigenvalue(p, &density, d).unwrap();
        let q = rayleigh_quotient(p, &density, &r.phi, d).unwrap();
        prop_assert!(rel(q, r.mu) < 1e-5, "quotient {} vs μ {}", q, r.mu);
    }

    #[test]
    fn eigenfunction_sign_structure(p in 1.3f64..4.0, c1 in -2.0f64..2.0, d in 0.3f64..2.0) {
        let density = DensityProfile::function(move |t: f64| (c1 * t).exp());
        let r = principal_eigenvalue(p, &density, d).unwrap();
        prop_assert_eq!(r.phi.values[0], 0.0);
        prop_assert!(r.phi.values[1..].iter().all(|v| *v > 0.0));
        let n = r.dphi.len();
        prop_assert!(r.dphi[..n - 1].iter().all(|v| *v > 0.0));
        prop_assert!(r.endpoint_residual < 1e-6);
    }

    #[test]
    fn density_scale_invariance(p in 1.3f64..4.0, scale in 1e-3f64..1e3, d in 0.3f64..2.0) {
        let base = DensityProfile::model(4.0, -1.0, 0.5);
        let a = principal_eigenvalue(p, &base, d).unwrap().mu;
        let b = principal_eigenvalue(p, &base.scaled(scale), d).unwrap().mu;
        prop_assert!(rel(a, b) < 1e-10, "{} vs {}", a, b);
    }

    #[test]
    fn domain_monotonicity(p in 1.3f64..4.0, d1 in 0.3f64..1.5, extra in 0.05f64..1.0) {
        let density = DensityProfile::function(|t: f64| (-t).exp() * (1.0 + 0.3 * t * t));
        let a = principal_eigenvalue(p, &density, d1).unwrap().mu;
        let b = principal_eigenvalue(p, &density, d1 + extra).unwrap().mu;
        prop_assert!(a > b, "μ({}) = {} should exceed μ({}) = {}", d1, a, d1 + extra, b);
    }

    #[test]
    fn free_eigenvalue_scales_as_d_to_minus_p(p in 1.2f64..5.0, d in 0.2f64..5.0) {
        let mu = free_eigenvalue(p, d).unwrap().mu;
        prop_assert!(rel(mu, free_eigenvalue_closed_form(p, d)) < 1e-8);
        let unit = free_eigenvalue_closed_form(p, 1.0);
        prop_assert!(rel(mu * d.powf(p), unit) < 1e-12 + 1e-8);
    }
}

#[test]
fn function_density_shares_across_threads() {
    let density = DensityProfile::Function(Arc::new(|t: f64| 1.0 + t));
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let d = density.clone();
            std::thread::spawn(move || principal_eigenvalue(2.0, &d, 1.0).unwrap().mu)
        })
        .collect();
    let values: Vec<f64> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[0] == w[1]));
}
