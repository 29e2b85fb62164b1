//! Stochastic-volatility sampling on simulated data.
//!
//! Simulates shocks w_t ~ N(0, exp(h_t)) with a known AR(1) log-variance
//! path, then recovers the path and parameters with the auxiliary-mixture
//! sampler (10-component normal mixture for log chi-squared, Omori et al.
//! 2007) wrapped in an ancillarity–sufficiency interweaving sweep.
//!
//! Run with: cargo run --example svol_demo

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use revunc::stats;
use revunc::svol::{asis_sweep, log_squared, simulate_h_path, SvParams, SvPriors, SvState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let truth = SvParams { mu: -1.0, phi: 0.95, tau: 0.25 };
    let n = 600;

    let (h0, h_true) = simulate_h_path(&truth, n, &mut rng);
    let w: Vec<f64> = h_true
        .iter()
        .map(|h| (h / 2.0).exp() * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let log_sq = log_squared(&w);
    println!("simulated {n} shocks with mu={}, phi={}, tau={}", truth.mu, truth.phi, truth.tau);

    let priors = SvPriors::default();
    let mut state = SvState::flat(n, SvParams { mu: 0.0, phi: 0.9, tau: 0.2 }, 0.0);
    state.h0 = h0;

    let (burn, keep) = (1_000, 4_000);
    let mut h_sum = vec![0.0; n];
    let mut mu_draws = Vec::with_capacity(keep);
    let mut phi_draws = Vec::with_capacity(keep);
    let mut tau_draws = Vec::with_capacity(keep);
    for it in 0..burn + keep {
        asis_sweep(&log_sq, &mut state, &priors, &mut rng)?;
        if it >= burn {
            for (s, h) in h_sum.iter_mut().zip(&state.h) {
                *s += h;
            }
            mu_draws.push(state.params.mu);
            phi_draws.push(state.params.phi);
            tau_draws.push(state.params.tau);
        }
    }

    let h_mean: Vec<f64> = h_sum.iter().map(|s| s / keep as f64).collect();
    let corr = correlation(&h_mean, &h_true);
    println!("\nposterior means after {keep} retained sweeps:");
    println!("  mu  = {:>7.3}   (truth {:.3})", stats::mean(&mu_draws), truth.mu);
    println!("  phi = {:>7.3}   (truth {:.3})", stats::mean(&phi_draws), truth.phi);
    println!("  tau = {:>7.3}   (truth {:.3})", stats::mean(&tau_draws), truth.tau);
    println!("  corr(posterior-mean h, true h) = {corr:.3}");

    println!("\nlog-variance path, every 60th quarter:");
    println!("{:>6} {:>9} {:>9}", "t", "true h", "post mean");
    for t in (0..n).step_by(60) {
        println!("{:>6} {:>9.3} {:>9.3}", t, h_true[t], h_mean[t]);
    }
    Ok(())
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (stats::mean(a), stats::mean(b));
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for (x, y) in a.iter().zip(b) {
        num += (x - ma) * (y - mb);
        da += (x - ma).powi(2);
        db += (y - mb).powi(2);
    }
    num / (da * db).sqrt()
}
