//! Compares MLP widths by learning capacity and test loss at a fixed
//! sample size: Kendall τ between the two and the capacity–loss
//! regression.
//!
//! `cargo run --release --example model_selection`

use capmeter::estimators::{capacity_loss_regression, fit_sigmoid_capacity, kendall_tau};
use capmeter::learners::{gen_synthetic, mlp_learner, SyntheticConfig};
use capmeter::protocol::{estimate_avg_energy, log_grid, run_protocol, ProtocolConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 500;
    let data = gen_synthetic(&SyntheticConfig::new(20, 1.0, 1), 4_000)?;
    let config = ProtocolConfig { n_boots: 2, k_folds: 5, m_seeds: 3, n_grid: log_grid(50, n, 8), master_seed: 7 };
    let mut points = Vec::new();
    println!("{:>6} {:>10} {:>10}", "width", "C(500)", "U(500)");
    for width in [4, 8, 16, 32, 64] {
        let learner = mlp_learner(width, 50, 0.05, 32)?;
        let curve = estimate_avg_energy(&run_protocol(&data, "synthetic", &learner, &config, 0)?.records)?;
        let capacity = fit_sigmoid_capacity(&curve, None)?.capacity_at(n).value;
        let loss = curve.at(n).expect("N is on the grid").u_mean;
        println!("{width:>6} {capacity:>10.3} {loss:>10.5}");
        points.push((capacity, loss));
    }
    let (caps, losses): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    println!("Kendall tau(capacity, loss) = {:.3}", kendall_tau(&caps, &losses)?);
    let r = capacity_loss_regression(&points)?;
    println!("loss = {:.4} + {:.3e} · C  (p = {:.3})", r.intercept, r.slope, r.p_value);
    Ok(())
}
