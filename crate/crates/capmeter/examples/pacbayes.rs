//! PAC-Bayes effective dimension and the analytic bound for a decaying
//! Hessian spectrum, with the prior precision that ties the bound's
//! complexity term to the learning capacity.
//!
//! `cargo run --release --example pacbayes`

use capmeter::oracle::{pacbayes_bound, pacbayes_effective_dim, pacbayes_epsilon_default};
use capmeter::HessianSpectrum;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kappa = 0.5;
    let eigenvalues: Vec<f64> = (0..200).map(|i| (-kappa * i as f64).exp()).collect();
    let base = HessianSpectrum::new(eigenvalues, 1.0, None)?;
    let choice = pacbayes_epsilon_default(&base)?;
    println!("capacity-matched epsilon = {:.4e} (raw {:.4e}, clamped: {})", choice.epsilon, choice.raw, choice.clamped);
    // a tiny epsilon makes every log term negative; use a unit prior for the table
    let spec = base.with_epsilon(1.0)?;
    println!("epsilon = 1");

    println!("{:>10} {:>8} {:>12}", "N", "p(N,ε)", "bound");
    for n in [10u64, 100, 1_000, 10_000, 100_000, 1_000_000] {
        let dim = pacbayes_effective_dim(&spec, n)?;
        let bound = pacbayes_bound(&spec, n, kappa, 1.0)?;
        println!("{n:>10} {dim:>8} {bound:>12.6}");
    }
    Ok(())
}
