//! Rate-check pilot: median sup error of the covariance estimate for
//! Brownian motion at n in {200, 800, 3200}, r = 50, plus the fitted
//! log-error slope against log(n / log n).
//!
//! Usage: cargo run --release -p finrank-core --example rate_pilot [reps]

use finrank_core::simulate::{observe, simulate_paths, ProcessSpec};
use finrank_core::smooth::{default_bandwidths, estimate_cov, KernelKind, SmootherConfig};
use finrank_core::{mix_seed, true_covariance};

fn main() {
    let reps: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(20);
    let grid = 101;
    let spec = ProcessSpec::Brownian {
        fine_grid_size: 1001,
    };
    let truth = true_covariance(&spec, grid).unwrap();
    let ns = [200usize, 800, 3200];
    let mut medians = Vec::new();
    for &n in &ns {
        let mut sups = Vec::new();
        for rep in 0..reps {
            let seed = mix_seed(161803, (n * 1000 + rep) as u64);
            let paths = simulate_paths(&spec, n, seed).unwrap();
            let obs = observe(&paths, 50, 0.1, seed).unwrap();
            let (h_mu, h_g) = default_bandwidths(n, 50);
            let cfg = SmootherConfig::new(KernelKind::Epanechnikov, h_mu, h_g, grid);
            let c_hat = estimate_cov(&obs, &cfg).unwrap();
            // also locate the worst grid point
            sups.push(truth.sup_distance(&c_hat));
        }
        sups.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let med = if reps % 2 == 1 {
            sups[reps / 2]
        } else {
            0.5 * (sups[reps / 2 - 1] + sups[reps / 2])
        };
        let (h, _) = default_bandwidths(n, 50);
        println!(
            "n={n:5} h={h:.4} sup: p10={:.4} med={med:.4} p90={:.4}",
            sups[(reps as f64 * 0.1) as usize],
            sups[((reps as f64 * 0.9) as usize).min(reps - 1)],
        );
        medians.push(med);
    }
    // slope of log(median) vs log(n / log n)
    let xs: Vec<f64> = ns
        .iter()
        .map(|&n| ((n as f64) / (n as f64).ln()).ln())
        .collect();
    let ys: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
    let mx = xs.iter().sum::<f64>() / 3.0;
    let my = ys.iter().sum::<f64>() / 3.0;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    println!("medians: {medians:?}");
    println!("slope = {:.4}", sxy / sxx);
}
