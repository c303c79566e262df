use std::io::Write;

use citedyn::hawkes::{simulate_ensemble, PaperTrajectory};
use citedyn::io::ingest_trajectories;
use citedyn::metrics::{
    binned_rate_stats, citation_distribution, clustering_from_motifs, clustering_slope,
    fano_and_pa_fit, multiplicity_trend, p0_consistency_check, pearson_autocorrelation, toy_s_of_k,
    uncited_fraction, BinEdges, MotifStats, PaFitSettings, MULTIPLICITY_SLOPE,
};
use citedyn::{EmpiricalCurves, ModelParams};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};

/// Papers whose next-year count is Poisson(c·(K+1)^delta), seeded by
/// Poisson(eta) first-year counts with lognormal eta.
fn synthetic_pa(n: usize, years: usize, c: f64, delta: f64, seed: u64) -> Vec<PaperTrajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ln = LogNormal::new(1.0, 1.0).unwrap();
    (0..n)
        .map(|i| {
            let mut k = vec![Poisson::new(ln.sample(&mut rng)).unwrap().sample(&mut rng) as u64];
            let mut cum = k[0];
            for _ in 1..years {
                let rate = c * ((cum + 1) as f64).powf(delta);
                let x = Poisson::new(rate).unwrap().sample(&mut rng) as u64;
                k.push(x);
                cum += x;
            }
            PaperTrajectory::from_counts(i as u64, None, None, k)
        })
        .collect()
}

#[test]
fn recovers_superlinear_attachment() {
    let trajs = synthetic_pa(40_000, 6, 0.1, 1.25, 1);
    let (_, fit) = fano_and_pa_fit(&trajs, &PaFitSettings::default()).unwrap();
    assert!((fit.delta - 1.25).abs() <= 0.05, "{fit:?}");
    assert_eq!(fit.k0, 1);
}

#[test]
fn linear_attachment_stays_linear() {
    for seed in 0..20 {
        let trajs = synthetic_pa(5_000, 8, 0.15, 1.0, 100 + seed);
        let (_, fit) = fano_and_pa_fit(&trajs, &PaFitSettings::default()).unwrap();
        assert!(
            (0.9..=1.1).contains(&fit.delta),
            "seed {seed}: delta {}",
            fit.delta
        );
    }
}

#[test]
fn constant_rate_has_no_attachment() {
    let p = ModelParams {
        fitness_mu: 4.0,
        fitness_sigma: 0.0,
        p0_base: 0.0,
        horizon: 25,
        ..ModelParams::default()
    };
    let e = simulate_ensemble(40195, &p, &EmpiricalCurves::default(), 3, &[]).unwrap();
    let (_, fit) = fano_and_pa_fit(&e.trajectories, &PaFitSettings::default()).unwrap();
    assert!(fit.delta.abs() < 0.05, "delta {}", fit.delta);
}

#[test]
fn fano_counts_bin_populations() {
    let trajs = synthetic_pa(2_000, 5, 0.1, 1.0, 4);
    let stats = binned_rate_stats(&trajs, &BinEdges::default()).unwrap();
    for t in 1..5 {
        let n: u64 = stats.bins.iter().filter(|b| b.t == t).map(|b| b.n).sum();
        assert_eq!(n, 2_000);
    }
    assert!(stats.bins.iter().all(|b| b.var_next >= 0.0));
}

#[test]
fn independent_years_are_uncorrelated() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pois = Poisson::new(2.0).unwrap();
    let n = 20_000;
    let trajs: Vec<PaperTrajectory> = (0..n)
        .map(|i| {
            PaperTrajectory::from_counts(
                i,
                None,
                None,
                (0..10).map(|_| pois.sample(&mut rng) as u64).collect(),
            )
        })
        .collect();
    let one_bin = BinEdges::new(vec![0]).unwrap();
    let bins = pearson_autocorrelation(&trajs, 10, &one_bin, 10).unwrap();
    let c = bins[0].c.unwrap();
    assert!(c.abs() < 3.0 / (n as f64).sqrt(), "c = {c}");
}

#[test]
fn repeated_years_are_fully_correlated() {
    let trajs: Vec<PaperTrajectory> = (0..500u64)
        .map(|i| {
            let x = i % 7;
            PaperTrajectory::from_counts(i, None, None, vec![1, x, x])
        })
        .collect();
    let one_bin = BinEdges::new(vec![0]).unwrap();
    let bins = pearson_autocorrelation(&trajs, 3, &one_bin, 10).unwrap();
    assert!((bins[0].c.unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn metrics_ignore_paper_order() {
    let e = simulate_ensemble(
        3000,
        &ModelParams::default(),
        &EmpiricalCurves::default(),
        5,
        &[],
    )
    .unwrap();
    let mut shuffled = e.trajectories.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
    let s = PaFitSettings::default();
    assert_eq!(
        fano_and_pa_fit(&e.trajectories, &s).unwrap(),
        fano_and_pa_fit(&shuffled, &s).unwrap()
    );
    assert_eq!(
        pearson_autocorrelation(&e.trajectories, 20, &s.edges, 10).unwrap(),
        pearson_autocorrelation(&shuffled, 20, &s.edges, 10).unwrap()
    );
    assert_eq!(
        citation_distribution(&e.trajectories, 30).unwrap(),
        citation_distribution(&shuffled, 30).unwrap()
    );
    assert_eq!(
        uncited_fraction(&e.trajectories),
        uncited_fraction(&shuffled)
    );
}

#[test]
fn distribution_and_uncited_basics() {
    let one = vec![PaperTrajectory::from_counts(0, None, None, vec![0, 2, 3])];
    assert_eq!(citation_distribution(&one, 3).unwrap(), vec![1; 6]);
    assert_eq!(uncited_fraction(&one), vec![1.0, 0.0, 0.0]);
    let silent: Vec<PaperTrajectory> = (0..10)
        .map(|i| PaperTrajectory::from_counts(i, None, None, vec![0; 5]))
        .collect();
    assert!(uncited_fraction(&silent).iter().all(|&u| u == 1.0));
}

#[test]
fn replayed_file_matches_hand_tally() {
    let counts = |id: u64, t: u64| (id * 7 + t * t * 3) % 5 * (id % 3);
    let mut rows = Vec::new();
    for id in 0..100u64 {
        let mut cum = 0;
        for t in 1..=10u64 {
            cum += counts(id, t);
            rows.push(format!("{id},,,{t},{},{cum}", counts(id, t)));
        }
    }
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(3));
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "paper_id,eta,seed,t,k,K").unwrap();
    for r in &rows {
        writeln!(f, "{r}").unwrap();
    }
    f.flush().unwrap();
    let store = ingest_trajectories(f.path()).unwrap();
    assert_eq!(store.trajectories.len(), 100);

    let totals: Vec<u64> = (0..100)
        .map(|id| (1..=10).map(|t| counts(id, t)).sum())
        .collect();
    let dist = citation_distribution(&store.trajectories, 10).unwrap();
    let max = *totals.iter().max().unwrap();
    assert_eq!(dist.len() as u64, max + 1);
    for k in 0..=max {
        let tally = totals.iter().filter(|&&x| x >= k).count() as u64;
        assert_eq!(dist[k as usize], tally, "k = {k}");
    }
}

#[test]
fn table_motifs_agree_up_to_neglected_terms() {
    let f = vec![0.88, 0.09, 0.02];
    let pi = vec![0.054, 0.28, 0.57];
    let m = MotifStats::normalized(f, pi.clone(), 5.0).unwrap();
    let (n2, k) = (5.0, 40);
    let c = clustering_from_motifs(&m, k).unwrap();
    let fs = m.f();
    let neglected = 2.0 * n2 / (k - 1) as f64
        * (2.0 * fs[1] * (pi[1] - 4.0 * pi[0]) + fs[2] * (3.0 * pi[2] - 15.0 * pi[0]));
    assert!((c.full - c.doublet - neglected).abs() < 1e-12);
    assert!((c.full - c.doublet).abs() <= neglected.abs() + 1e-12);

    let zero = MotifStats::normalized(vec![0.9, 0.1], vec![0.0, 0.0], 5.0).unwrap();
    let z = clustering_from_motifs(&zero, 10).unwrap();
    assert_eq!((z.full, z.doublet), (0.0, 0.0));
    assert!(clustering_from_motifs(&zero, 1).is_err());
}

#[test]
fn clustering_falls_like_a_power_of_k() {
    let ks: Vec<u64> = (0..=30)
        .map(|i| 10f64.powf(0.3 + 2.7 * i as f64 / 30.0).round() as u64)
        .collect();
    let slope = clustering_slope(0.054, 5.0, &ks, MULTIPLICITY_SLOPE).unwrap();
    assert!((slope + 0.75).abs() <= 0.15, "slope {slope}");
}

#[test]
fn saturation_toy_model() {
    assert_eq!(toy_s_of_k(2.0, 0.0, 10.0).unwrap(), 1.0);
    let s = toy_s_of_k(1.0, 1.0, 1.0).unwrap();
    assert!((s - 1.0 / (1.0 - (-1f64).exp())).abs() < 1e-12);
    assert!((s - 1.5820).abs() < 1e-4);
}

#[test]
fn overlap_of_multiplicity_and_kernel() {
    let s: Vec<f64> = (1..=20).map(|i| 1.0 + 0.05 * i as f64).collect();
    let p0: Vec<f64> = s.iter().map(|s| 0.44 * (1.0 + 3.0 * (s - 1.0))).collect();
    let o = p0_consistency_check(&s, &p0).unwrap();
    assert!((o.scale - 0.44).abs() < 1e-12 && o.residual < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let u = rand_distr::Uniform::new(0.0, 1.0).unwrap();
    let a: Vec<f64> = (0..200).map(|_| 1.0 + u.sample(&mut rng)).collect();
    let b: Vec<f64> = (0..200).map(|_| u.sample(&mut rng)).collect();
    let o = p0_consistency_check(&a, &b).unwrap();
    assert!(o.residual > 0.5 * o.p0_spread, "{o:?}");
    assert!(p0_consistency_check(&[1.2; 5], &[0.3, 0.4, 0.5, 0.6, 0.7]).is_err());

    // s(K) trend chained through P0(s) reproduces the log kernel
    let p = ModelParams::default();
    let ks: Vec<f64> = (0..=30).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
    let s: Vec<f64> = ks
        .iter()
        .map(|&k| multiplicity_trend(k, MULTIPLICITY_SLOPE))
        .collect();
    let p0: Vec<f64> = ks
        .iter()
        .map(|&k| p.p0_base * (1.0 + p.p0_slope * k.log10()))
        .collect();
    let o = p0_consistency_check(&s, &p0).unwrap();
    for (si, pi) in s.iter().zip(&p0) {
        let rebuilt = o.scale * (1.0 + 3.0 * (si - 1.0));
        assert!((rebuilt / pi - 1.0).abs() < 0.10, "{rebuilt} vs {pi}");
    }
}
