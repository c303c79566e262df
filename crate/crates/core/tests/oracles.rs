//! Independent reimplementations checked against the library.

use approx::assert_relative_eq;
use citedyn::continuum::{
    closed_form_rate, cumulative_approx, eta_critical, lifetime_tau0, q_of_k, CumulativeOutcome,
    SmoothRate, StepRate,
};
use citedyn::hawkes::{ar2_rate, latent_rate, Ar2Coefficients};
use citedyn::reference::{
    compute_indirect_absolute, compute_indirect_reduced, convolution_form_check,
    exponential_kernel, ReferenceMatrix,
};
use citedyn::{EmpiricalCurves, KernelNorm, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::brute_rate;

#[test]
fn latent_rate_matches_direct_summation() {
    let curves = EmpiricalCurves::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let p = ModelParams {
            kernel_norm: if i % 2 == 0 {
                KernelNorm::Branching
            } else {
                KernelNorm::Table
            },
            ..ModelParams::default()
        };
        let t = rng.random_range(1..=25);
        let hi = if i % 10 == 0 { 500 } else { 20 };
        let hist: Vec<u64> = (0..t - 1).map(|_| rng.random_range(0..hi)).collect();
        let eta = rng.random_range(0.0..60.0);
        let got = latent_rate(eta, &hist, t, &p, &curves).unwrap();
        let want = brute_rate(eta, &hist, t, &p, curves.m_dir());
        worst = worst.max(((got - want) / want.max(1e-300)).abs());
    }
    assert!(worst < 1e-12, "worst relative error {worst:e}");
}

#[test]
fn latent_rate_hand_value_under_literal_kernel() {
    let curves = EmpiricalCurves::default();
    let p = ModelParams {
        kernel_norm: KernelNorm::Table,
        ..ModelParams::default()
    };
    let p0_2 = 0.34 * (1.0 + 0.82 * 2f64.log10());
    assert_relative_eq!(p0_2, 0.4239, epsilon = 1e-4);
    let want = 5.0 * curves.m_dir()[1] + p0_2 * 0.089 * 2.0;
    assert_relative_eq!(
        latent_rate(5.0, &[2], 2, &p, &curves).unwrap(),
        want,
        max_relative = 1e-12
    );
}

#[test]
fn latent_rate_rejects_years_past_horizon() {
    let curves = EmpiricalCurves::default();
    let p = ModelParams {
        horizon: 10,
        ..ModelParams::default()
    };
    assert!(latent_rate(1.0, &[0; 10], 11, &p, &curves).is_err());
}

#[test]
fn ar2_hand_value() {
    let curves = EmpiricalCurves::default();
    let p = ModelParams::default();
    let c = Ar2Coefficients::default();
    let got = ar2_rate(2.0, &[1, 3], 3, &p, &curves, c).unwrap();
    let want = 2.0 * curves.m_dir()[2] + (1.0 + 0.82 * 4f64.log10()) * (0.27 + 0.19);
    assert_relative_eq!(got, want, max_relative = 1e-12);
    assert_relative_eq!(
        ar2_rate(2.0, &[], 1, &p, &curves, c).unwrap(),
        2.0 * 0.23,
        max_relative = 1e-9
    );
}

#[test]
fn convolution_forms_agree_on_random_profiles() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let n = rng.random_range(2..=40);
        let mut r: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let s: f64 = r.iter().sum();
        r.iter_mut().for_each(|v| *v /= s);
        let kernel: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        let d = convolution_form_check(&r, &kernel, n).unwrap();
        assert!(d < 1e-12, "discrepancy {d:e}");
    }
}

#[test]
fn reduced_recursion_hand_values() {
    let mut r_dir = vec![0.0; 5];
    r_dir[0] = 1.0;
    let p = compute_indirect_reduced(&r_dir, &[0.1; 5], 5).unwrap();
    assert_relative_eq!(p.r_total[1], 0.1, epsilon = 1e-15);
    assert_relative_eq!(p.r_total[2], 0.02, epsilon = 1e-15);

    let refs = ReferenceMatrix::constant(2000, 10, 2.0);
    assert_relative_eq!(
        compute_indirect_absolute(&refs, &[0.25; 3], 2005, 3).unwrap(),
        3.0,
        epsilon = 1e-12
    );
}

#[test]
fn default_reference_composition() {
    let c = EmpiricalCurves::default();
    let k = exponential_kernel(20.5, 0.34, 1.2, 30);
    let p = compute_indirect_reduced(c.r_dir(), &k, 30).unwrap();
    let share = p.indirect_share();
    assert!((share - 0.65).abs() <= 0.10, "share {share}");
    let peak = |v: &[f64]| (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
    assert!(peak(&p.r_indir) > peak(&p.r_dir));
}

#[test]
fn cumulative_root_matches_fixed_point() {
    let curves = EmpiricalCurves::default();
    let p = ModelParams::default();
    let rhs: f64 = curves.m_dir().iter().take(30).sum::<f64>();
    for eta in [0.5, 1.0, 3.0, 8.0] {
        let CumulativeOutcome::Subcritical { k } =
            cumulative_approx(eta, &p, &curves, 30.0).unwrap()
        else {
            panic!("eta {eta} should be subcritical");
        };
        let mut x = eta * rhs;
        for _ in 0..10_000 {
            x = eta * rhs / (1.0 - q_of_k(x, &p) / p.gamma);
        }
        assert_relative_eq!(k, x, max_relative = 1e-8);
    }
    assert_eq!(
        cumulative_approx(0.0, &p, &curves, 30.0).unwrap(),
        CumulativeOutcome::Subcritical { k: 0.0 }
    );
    let crit = eta_critical(&p);
    assert!(matches!(
        cumulative_approx(crit.eta_crit * 1.01, &p, &curves, 30.0).unwrap(),
        CumulativeOutcome::Runaway { .. }
    ));
}

/// Composite Simpson on each unit interval where the step table is
/// constant.
fn simpson_oracle(m: &[f64], t: f64, decay: f64, n: usize) -> f64 {
    let mut total = 0.0;
    let mut a = 0.0;
    while a < t {
        let b = (a + 1.0).min(t);
        let v = m[a as usize];
        let h = (b - a) / n as f64;
        let g = |x: f64| v * (-decay * (t - x)).exp();
        let mut s = g(a) + g(b);
        for i in 1..n {
            s += g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        total += s * h / 3.0;
        a = b;
    }
    total
}

#[test]
fn closed_form_rate_matches_quadrature() {
    let curves = EmpiricalCurves::default();
    let m = curves.m_dir();
    let (q, gamma, t) = (0.38, 1.2, 10.0);
    let got = closed_form_rate(2.0, q, gamma, &StepRate::new(m), t).unwrap();
    let want = 2.0 * (m[9] + q * simpson_oracle(m, t, gamma - q, 2000));
    assert_relative_eq!(got, want, max_relative = 1e-6);
    assert_relative_eq!(
        closed_form_rate(2.0, 0.0, gamma, &StepRate::new(m), 4.5).unwrap(),
        2.0 * m[4],
        max_relative = 1e-15
    );
}

#[test]
fn degenerate_exponent_limit() {
    let c = 0.3;
    let m = vec![c; 30];
    let (eta, q, t) = (2.0, 0.7, 6.0);
    let got = closed_form_rate(eta, q, q, &StepRate::new(&m), t).unwrap();
    assert_relative_eq!(got, eta * c * (1.0 + q * t), max_relative = 1e-12);
}

fn smooth_m(t: f64) -> f64 {
    t * (-t / 3.0).exp() / 9.0
}

#[test]
fn small_gamma_gives_bass_form() {
    let (eta, gamma, q) = (4.0, 0.01, 0.005);
    let m = SmoothRate {
        f: smooth_m,
        refinement: 256,
    };
    let k = |t: f64| closed_form_rate(eta, q, gamma, &m, t).unwrap();
    for t in [2.0, 5.0, 10.0] {
        let cum = SmoothRate {
            f: |x: f64| k(x),
            refinement: 64,
        };
        let big_k = citedyn::continuum::DirectRate::integral(&cum, t);
        let bass = eta * smooth_m(t) + q * big_k;
        assert!(
            (k(t) / bass - 1.0).abs() < 0.05,
            "t={t}: {} vs {bass}",
            k(t)
        );
    }
}

#[test]
fn large_gamma_gives_autoregressive_form() {
    let (eta, gamma, q) = (4.0, 20.0, 2.0);
    let m = SmoothRate {
        f: smooth_m,
        refinement: 512,
    };
    let k = |t: f64| closed_form_rate(eta, q, gamma, &m, t).unwrap();
    for t in [2.0, 5.0, 10.0] {
        let ar = eta * smooth_m(t) + q / gamma * k(t - 1.0 / gamma);
        assert!((k(t) / ar - 1.0).abs() < 0.05, "t={t}: {} vs {ar}", k(t));
    }
}

#[test]
fn critical_fitness_behaviour() {
    let p = ModelParams::default();
    let c = eta_critical(&p);
    assert!(c.k_divergence > 300.0 && c.k_divergence < 1000.0, "{c:?}");
    assert!(c.k_crit < c.k_divergence);
    let a = 1.09 * 0.34;
    assert_relative_eq!(
        a * (1.0 + 0.82 * c.k_divergence.log10()),
        1.2,
        max_relative = 1e-12
    );

    let none = eta_critical(&ModelParams {
        q_prefactor: 0.0,
        ..p.clone()
    });
    assert!(none.eta_crit.is_infinite());

    let doubled = eta_critical(&ModelParams { gamma: 2.4, ..p });
    assert!(doubled.eta_crit > c.eta_crit);
}

#[test]
fn lifetime_values() {
    let curves = EmpiricalCurves::default();
    let p = ModelParams::default();
    assert_relative_eq!(
        lifetime_tau0(1.0, &p, &curves).unwrap(),
        1.0 / 0.23,
        max_relative = 1e-9
    );
    assert!(lifetime_tau0(100.0, &p, &curves).unwrap() > lifetime_tau0(10.0, &p, &curves).unwrap());
    let kd = eta_critical(&p).k_divergence;
    assert!(lifetime_tau0(kd * 1.0001, &p, &curves)
        .unwrap()
        .is_infinite());
    assert!(lifetime_tau0(kd * 0.999, &p, &curves).unwrap() > 100.0);
}
