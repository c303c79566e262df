//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p citedyn --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use citedyn::continuum::{
    cumulative_approx, eta_critical, lifetime_tau0, q_of_k, CumulativeOutcome,
};
use citedyn::hawkes::{latent_rate, simulate_ensemble_with, EnsembleConfig, PaperTrajectory};
use citedyn::io::{write_trajectories, Provenance};
use citedyn::metrics::{clustering_slope, validate, Bands, Check, MULTIPLICITY_SLOPE};
use citedyn::reference::{compute_indirect_reduced, convolution_form_check, exponential_kernel};
use citedyn::{EmpiricalCurves, KernelNorm, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::brute_rate;

const N_PAPERS: u64 = 40_195;
const HORIZON: usize = 25;
const SEED: u64 = 42;
const RUNTIME_TARGET_S: f64 = 60.0;

struct Suite {
    failed: usize,
}

impl Suite {
    fn report(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failed += 1;
        }
        println!(
            "{} {id:>2} {name}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
    }

    fn checks(&mut self, id: u32, name: &str, checks: &[&Check]) {
        let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        let detail = if checks.is_empty() {
            "no check produced".to_string()
        } else {
            checks
                .iter()
                .map(|c| {
                    format!(
                        "{} = {:.4} in [{}, {}] ({})",
                        c.name, c.value, c.lo, c.hi, c.detail
                    )
                })
                .collect::<Vec<_>>()
                .join("; ")
        };
        self.report(id, name, pass, detail);
    }
}

fn ensemble(workers: usize) -> (Vec<PaperTrajectory>, f64) {
    let params = ModelParams {
        horizon: HORIZON,
        ..ModelParams::default()
    };
    let mut cfg = EnsembleConfig::new(N_PAPERS, SEED, vec![5, 10, 15, 20, 25]);
    cfg.workers = Some(workers);
    let start = Instant::now();
    let e = simulate_ensemble_with(&cfg, &params, &EmpiricalCurves::default()).expect("simulation");
    (e.trajectories, start.elapsed().as_secs_f64())
}

fn csv_bytes(trajs: &[PaperTrajectory]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_trajectories(&mut buf, trajs, &Provenance::default()).expect("csv");
    buf
}

fn main() -> ExitCode {
    let mut suite = Suite { failed: 0 };
    let curves = EmpiricalCurves::default();
    let params = ModelParams {
        horizon: HORIZON,
        ..ModelParams::default()
    };

    let workers = std::thread::available_parallelism()
        .map_or(4, |n| n.get())
        .max(2);
    let (trajs, secs) = ensemble(workers);
    let report = validate(&trajs, &params, &curves, &Bands::default()).expect("battery");
    let find = |prefix: &str| -> Vec<&Check> {
        report
            .checks
            .iter()
            .filter(|c| c.name.starts_with(prefix))
            .collect()
    };

    // 1
    let unc = find("uncited_fraction_t25");
    suite.checks(1, "uncited fraction at t=25", &unc);
    suite.report(
        1,
        "runtime",
        secs <= RUNTIME_TARGET_S,
        format!("{N_PAPERS} papers x {HORIZON} years in {secs:.2} s on {workers} workers (target {RUNTIME_TARGET_S} s)"),
    );

    // 2
    let mut pa = find("pa_delta");
    pa.extend(find("pa_k0"));
    suite.checks(2, "preferential attachment", &pa);

    // 3
    suite.checks(
        3,
        "Fano number of low-mean bins",
        &find("fano_low_mean_bins"),
    );

    // 4
    suite.checks(
        4,
        "mean field against duality",
        &find("mean_field_max_rel_dev"),
    );

    // 5
    {
        let crit = eta_critical(&params);
        let ks: Vec<f64> = (0..=40)
            .map(|i| 10f64.powf(i as f64 / 10.0))
            .filter(|&k| k < crit.k_divergence)
            .collect();
        let tau: Vec<f64> = ks
            .iter()
            .map(|&k| lifetime_tau0(k, &params, &curves).expect("tau0"))
            .collect();
        let increasing = tau.windows(2).all(|w| w[1] > w[0]) && tau.iter().all(|t| t.is_finite());
        let beyond = lifetime_tau0(crit.k_divergence * 1.001, &params, &curves).expect("tau0");
        let tau1 = tau[0];
        let pass = increasing
            && beyond.is_infinite()
            && (300.0..=1000.0).contains(&crit.k_divergence)
            && (tau1 - 4.35).abs() <= 0.01;
        suite.report(
            5,
            "lifetime and runaway",
            pass,
            format!(
                "tau0 increasing on {} points: {increasing}; K_crit = {:.1} in [300, 1000]; tau0(1) = {tau1:.4} in 4.35 +- 0.01",
                ks.len(),
                crit.k_divergence
            ),
        );
    }

    // 6
    {
        let kernel = exponential_kernel(20.5, 0.34, 1.2, 30);
        let p = compute_indirect_reduced(curves.r_dir(), &kernel, 30).expect("reduced recursion");
        let share = p.indirect_share();
        suite.report(
            6,
            "indirect reference share",
            (share - 0.65).abs() <= 0.10,
            format!("share = {share:.4} in 0.65 +- 0.10"),
        );
    }

    // 7
    {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst_rate = 0.0f64;
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
            let hist: Vec<u64> = (0..t - 1).map(|_| rng.random_range(0..50)).collect();
            let eta = rng.random_range(0.0..60.0);
            let got = latent_rate(eta, &hist, t, &p, &curves).expect("rate");
            let want = brute_rate(eta, &hist, t, &p, curves.m_dir());
            worst_rate = worst_rate.max(((got - want) / want.max(1e-300)).abs());
        }
        let mut worst_conv = 0.0f64;
        for _ in 0..100 {
            let n = rng.random_range(2..=40);
            let mut r: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let s: f64 = r.iter().sum();
            r.iter_mut().for_each(|v| *v /= s);
            let kernel: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
            worst_conv =
                worst_conv.max(convolution_form_check(&r, &kernel, n).expect("convolution"));
        }
        let p = ModelParams::default();
        let rhs: f64 = curves.m_dir().iter().take(30).sum();
        let mut worst_root = 0.0f64;
        for eta in [0.5, 1.0, 3.0, 8.0, 15.0] {
            let CumulativeOutcome::Subcritical { k } =
                cumulative_approx(eta, &p, &curves, 30.0).expect("root")
            else {
                worst_root = f64::INFINITY;
                continue;
            };
            let mut x = eta * rhs;
            for _ in 0..10_000 {
                x = eta * rhs / (1.0 - q_of_k(x, &p) / p.gamma);
            }
            worst_root = worst_root.max((k / x - 1.0).abs());
        }
        suite.report(
            7,
            "oracle equivalence",
            worst_rate < 1e-12 && worst_conv < 1e-12 && worst_root < 1e-8,
            format!(
                "latent rate {worst_rate:.1e} < 1e-12; convolution {worst_conv:.1e} < 1e-12; cumulative root {worst_root:.1e} < 1e-8"
            ),
        );
    }

    // 8
    suite.checks(8, "autocorrelation grows with K", &find("autocorr_trend_t"));

    // 9
    {
        let ks: Vec<u64> = (0..=30)
            .map(|i| 10f64.powf(0.3 + 2.7 * i as f64 / 30.0).round() as u64)
            .collect();
        let slope = clustering_slope(0.054, 5.0, &ks, MULTIPLICITY_SLOPE).expect("slope");
        suite.report(
            9,
            "clustering scaling",
            (slope + 0.75).abs() <= 0.15,
            format!("log-log slope = {slope:.4} in -0.75 +- 0.15 over K = 2..1000"),
        );
    }

    // 10
    {
        let reference = csv_bytes(&trajs);
        let mut detail = Vec::new();
        let mut pass = true;
        for w in [1, 3] {
            let same = csv_bytes(&ensemble(w).0) == reference;
            pass &= same;
            detail.push(format!("{w} vs {workers} workers identical: {same}"));
        }
        suite.report(10, "determinism", pass, detail.join("; "));
    }

    println!("{} failed", suite.failed);
    if suite.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
