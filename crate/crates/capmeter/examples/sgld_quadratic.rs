//! Langevin chains on the quadratic test energy, compared against the
//! closed-form chain energy `1 - Z(N+1)/Z(N)` and its finite-difference
//! capacity.
//!
//! `cargo run --release --example sgld_quadratic`

use capmeter::sgld::{
    oracle_capacity_fd, oracle_probability_complement, run_incremental_protocol, QuadraticTestEnergy, SgldConfig,
};
use capmeter::{HessianSpectrum, PriorKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = HessianSpectrum::new(vec![1.0, 1.0], 1.0, None)?;
    let prior = PriorKind::GaussianIsotropic(1.0);
    let config = SgldConfig {
        step_size: 1e-3,
        chains: 10,
        equilibration_epochs: 20,
        samples_per_window: 200,
        n_schedule: vec![5, 10, 20, 40],
        seed: 1,
        prior,
        batch_size: 1,
        min_steps_per_epoch: 500,
    };
    let run = run_incremental_protocol(&QuadraticTestEnergy::new(&spec)?, "quadratic", &config)?;

    println!("{:>4} {:>10} {:>10}", "N", "U_sgld", "U_exact");
    for p in &run.curve.points {
        println!("{:>4} {:>10.5} {:>10.5}", p.n, p.u_mean, oracle_probability_complement(&spec, prior, p.n as u64)?);
    }
    println!("{:>4} {:>10} {:>10}", "N", "C_sgld", "C_exact");
    for (c, pair) in run.capacities.iter().zip(config.n_schedule.windows(2)) {
        let exact = oracle_capacity_fd(&spec, prior, pair[0] as u64, (pair[1] - pair[0]) as u64)?;
        println!("{:>4} {:>10.4} {:>10.4}", c.at_n, c.value, exact);
    }
    Ok(())
}
