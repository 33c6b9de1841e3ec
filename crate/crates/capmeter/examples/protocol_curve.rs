//! Runs the bootstrap × fold × seed protocol for a k-nearest-neighbour
//! classifier on synthetic data and prints the averaged held-out energy
//! curve, then checks the smallest N against leave-one-out.
//!
//! `cargo run --release --example protocol_curve`

use capmeter::learners::{gen_synthetic, knn_learner, SyntheticConfig};
use capmeter::protocol::{estimate_avg_energy, log_grid, loocv_avg_energy, run_protocol, ProtocolConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = gen_synthetic(&SyntheticConfig::new(10, 1.0, 3), 4_000)?;
    let learner = knn_learner(7, 1.0)?;
    let config = ProtocolConfig { n_boots: 3, k_folds: 5, m_seeds: 1, n_grid: log_grid(30, 2_000, 8), master_seed: 11 };
    let run = run_protocol(&data, "synthetic", &learner, &config, 0)?;
    let curve = estimate_avg_energy(&run.records)?;

    println!("{} records, {} clamped losses", run.records.len(), run.clamp_events);
    println!("{:>6} {:>10} {:>10}", "N", "U", "stderr");
    for p in &curve.points {
        println!("{:>6} {:>10.5} {:>10.5}", p.n, p.u_mean, p.u_stderr);
    }

    let small = data.subset(&(0..30).collect::<Vec<_>>());
    println!("leave-one-out U on the first 30 rows: {:.5}", loocv_avg_energy(&learner, &small)?);
    Ok(())
}
