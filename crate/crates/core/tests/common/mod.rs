//! Oracles shared by the integration tests.
#![allow(dead_code)]

use citedyn::{KernelNorm, ModelParams};

const F: [f64; 5] = [0.089, 0.138, 0.046, 0.012, 0.0035];

pub fn f_ext(d: usize, decay: f64) -> f64 {
    if d <= 5 {
        F[d - 1]
    } else {
        F[4] * (-decay * (d - 5) as f64).exp()
    }
}

/// Sum of F over all lags including the geometric tail.
pub fn f_sum(decay: f64) -> f64 {
    let r = (-decay).exp();
    F.iter().sum::<f64>() + F[4] * r / (1.0 - r)
}

pub fn brute_rate(eta: f64, hist: &[u64], t: usize, p: &ModelParams, m: &[f64]) -> f64 {
    let decay = p.gamma - p.beta;
    let scale = match p.kernel_norm {
        KernelNorm::Table => 1.0,
        KernelNorm::Branching => p.q_prefactor / (p.gamma * f_sum(decay)),
    };
    let big_k: u64 = hist[..t - 1].iter().sum();
    let p0 = p.p0_base * (1.0 + p.p0_slope * (big_k.max(1) as f64).log10());
    let mut s = eta * m[t - 1];
    for tau in 1..t {
        s += p0 * scale * f_ext(t - tau, decay) * hist[tau - 1] as f64;
    }
    s
}
