//! Coarse sweep of the regularization weight for the default experiment.
//!
//! For every λ on a fixed grid and every seed, solves the TV problem with the
//! experiment's reference solver and reports the reconstruction SNR against
//! the phantom. The λ with the best mean SNR is the shipped default.
//!
//! ```text
//! cargo run --release --example lambda_sweep [iterations] [seeds]
//! ```

use tvpar::experiment::{build_problem, reference_config, ExperimentConfig};
use tvpar::{metrics, solvers, SignalGrid};

const LAMBDAS: [f64; 10] = [0.001, 0.0015, 0.002, 0.0025, 0.003, 0.0035, 0.004, 0.005, 0.007, 0.01];

fn main() -> tvpar::Result<()> {
    let mut args = std::env::args().skip(1);
    let iterations: usize = args.next().map_or(Ok(1000), |s| s.parse()).expect("iterations");
    let seeds: u64 = args.next().map_or(Ok(5), |s| s.parse()).expect("seeds");

    println!("lambda  {}  mean_snr_db", (1..=seeds).map(|s| format!("seed{s:<3}")).collect::<Vec<_>>().join(" "));
    let mut best = (f64::NEG_INFINITY, 0.0);
    for lambda in LAMBDAS {
        let mut snrs = Vec::new();
        for seed in 1..=seeds {
            let cfg = ExperimentConfig {
                lambda,
                seed,
                reference_iterations: iterations,
                ..Default::default()
            };
            let problem = build_problem(&cfg)?;
            let solver = reference_config(&cfg, problem.lipschitz.value);
            let x0 = SignalGrid::zeros(problem.phantom.dims())?;
            let out = solvers::run(&problem.instance, &solver, x0, None)?;
            snrs.push(metrics::snr_db(&problem.phantom, &out.state.x)?);
        }
        let mean = snrs.iter().sum::<f64>() / snrs.len() as f64;
        let cols: Vec<String> = snrs.iter().map(|s| format!("{s:7.3}")).collect();
        println!("{lambda:<7} {}  {mean:.3}", cols.join(" "));
        if mean > best.0 {
            best = (mean, lambda);
        }
    }
    println!("best lambda = {} (mean SNR {:.3} dB)", best.1, best.0);
    Ok(())
}
