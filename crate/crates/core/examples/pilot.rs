//! Calibration pilot for the rate constant c_R.
//!
//! Runs the estimator over the acceptance schedule (n = 25, 200, 675, 1600,
//! 3125 with r = 50, noise 0.1) on the rank-2 cosine scenario and on
//! Brownian motion, and prints per-update medians of: the sup and
//! Hilbert-Schmidt estimation errors, the estimate's residual tail beyond
//! k(j) ranks, and the leading estimated eigenvalues. These are the inputs
//! to the documented c_R calibration rules (see the README); the pinned
//! constants in the acceptance suite came from this binary.
//!
//! Usage: cargo run --release -p finrank-core --example pilot [replicates]

use finrank_core::simulate::{observe, simulate_paths, BasisSpec, ProcessSpec};
use finrank_core::smooth::{default_bandwidths, estimate_cov, KernelKind, SmootherConfig};
use finrank_core::spectral::{eigendecompose, tail_hs};
use finrank_core::{mix_seed, true_covariance};

const UPDATE_TIMES: [usize; 5] = [25, 200, 675, 1600, 3125];
const R: usize = 50;
const NOISE: f64 = 0.1;
const GRID: usize = 101;

struct UpdateStats {
    sup: Vec<f64>,
    hs: Vec<f64>,
    tail_k: Vec<f64>,
    alpha2: Vec<f64>,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn quantile(v: &mut [f64], q: f64) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((v.len() as f64 - 1.0) * q).round() as usize;
    v[idx]
}

fn run_scenario(name: &str, spec: &ProcessSpec, replicates: usize, master: u64) {
    let truth = true_covariance(spec, GRID).unwrap();
    let mut stats: Vec<UpdateStats> = (0..UPDATE_TIMES.len())
        .map(|_| UpdateStats {
            sup: Vec::new(),
            hs: Vec::new(),
            tail_k: Vec::new(),
            alpha2: Vec::new(),
        })
        .collect();

    for rep in 0..replicates {
        let seed = mix_seed(master, rep as u64);
        let paths = simulate_paths(spec, *UPDATE_TIMES.last().unwrap(), seed).unwrap();
        let obs_all = observe(&paths, R, NOISE, seed).unwrap();
        for (u, &n) in UPDATE_TIMES.iter().enumerate() {
            let prefix = finrank_core::ObservationSet {
                curves: obs_all.curves[..n].to_vec(),
                noise_sd: obs_all.noise_sd,
                seed: obs_all.seed,
            };
            let (h_mu, h_g) = default_bandwidths(n, R);
            let cfg = SmootherConfig::new(KernelKind::Epanechnikov, h_mu, h_g, GRID);
            let c_hat = estimate_cov(&prefix, &cfg).unwrap();
            let d = eigendecompose(&c_hat).unwrap();
            let k_j = u + 1; // k(j) = j on this schedule
            stats[u].sup.push(truth.sup_distance(&c_hat));
            stats[u].hs.push(truth.hs_distance(&c_hat));
            stats[u].tail_k.push(tail_hs(&d, k_j));
            stats[u].alpha2.push(d.eigenvalues[1].abs());
        }
    }

    println!("== {name} ({replicates} replicates) ==");
    println!(
        "{:>6} {:>4} {:>9} {:>9} {:>12} {:>12} {:>9}",
        "n", "k", "sup_med", "hs_med", "tail_k_med", "tail_k_p10", "alpha2"
    );
    for (u, &n) in UPDATE_TIMES.iter().enumerate() {
        let s = &mut stats[u];
        println!(
            "{:>6} {:>4} {:>9.4} {:>9.4} {:>12.5} {:>12.5} {:>9.4}",
            n,
            u + 1,
            median(&mut s.sup),
            median(&mut s.hs),
            median(&mut s.tail_k),
            quantile(&mut s.tail_k, 0.1),
            median(&mut s.alpha2),
        );
    }
    // the documented upper-bound rule evaluated at the two pilot sizes
    for &n in &[200usize, 3125] {
        let u = UPDATE_TIMES.iter().position(|&m| m == n).unwrap();
        let rate = (n as f64).ln() * ((n as f64).ln() / n as f64).sqrt();
        println!(
            "  c_R(sup rule) at n={n}: {:.4}",
            median(&mut stats[u].sup) / rate
        );
    }
    println!();
}

fn main() {
    let replicates: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(20);
    let rank2 = ProcessSpec::FiniteRank {
        basis: BasisSpec::cosine(2),
        score_variances: vec![1.0, 0.5],
        mean: None,
        fine_grid_size: 1001,
    };
    run_scenario("rank-2 cosine", &rank2, replicates, 314159);
    let bm = ProcessSpec::Brownian {
        fine_grid_size: 1001,
    };
    run_scenario("brownian", &bm, replicates, 271828);
}
