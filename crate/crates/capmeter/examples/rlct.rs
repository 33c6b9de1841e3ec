//! Volume-ratio estimates of the real log-canonical threshold. Regular
//! quadratics give `p/2`; the singular energy `w₁² w₂²` gives a smaller
//! value than its parameter count suggests.
//!
//! `cargo run --release --example rlct`

use capmeter::oracle::{rlct_volume_estimate, UniformBox};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let samples = 1_000_000;
    for dim in [1usize, 2, 4] {
        let energy = |w: &[f64]| 0.5 * w.iter().map(|x| x * x).sum::<f64>();
        // the sublevel set {H < 2·eps} stays inside the box, so the volume ratio is exactly 2^{p/2}
        let est = rlct_volume_estimate(energy, &UniformBox::symmetric(dim, 1.0), 0.05, 2.0, samples, 1)?;
        println!("quadratic p={dim}: K = {:.3} ± {:.3} (expected {})", est.value, est.stderr, dim as f64 / 2.0);
    }
    let singular = |w: &[f64]| (w[0] * w[1]).powi(2);
    let est = rlct_volume_estimate(singular, &UniformBox::symmetric(2, 1.0), 1e-4, 2.0, samples, 2)?;
    println!("singular w1²w2²: K = {:.3} ± {:.3} (a regular model would give 1)", est.value, est.stderr);
    Ok(())
}
