//! Exact learning capacity of a quadratic energy, three ways: the closed
//! form, the harmonic-mean approximation, and `N²` times the second integer
//! difference of `log Z`.
//!
//! `cargo run --release --example quadratic_oracle`

use capmeter::oracle::{quad_capacity_exact, quad_capacity_hm, quad_log_z};
use capmeter::HessianSpectrum;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = HessianSpectrum::new(vec![10.0, 1.0, 0.1, 0.01, 0.001], 0.1, None)?;
    let prior = spec.gaussian_prior();
    println!("p = {}, epsilon = {}", spec.p(), spec.epsilon());
    println!("harmonic-mean approximation: {:.4}", quad_capacity_hm(&spec)?);
    println!("{:>8} {:>12} {:>12}", "N", "exact", "2nd diff");
    for n in [2u32, 10, 100, 1_000, 10_000, 100_000] {
        let n = n as f64;
        let second = quad_log_z(&spec, prior, n + 1.0)? - 2.0 * quad_log_z(&spec, prior, n)?
            + quad_log_z(&spec, prior, n - 1.0)?;
        println!("{n:>8} {:>12.6} {:>12.6}", quad_capacity_exact(&spec, n)?, n * n * second);
    }
    println!("capacity climbs towards p/2 = {} as each eigenvalue unfreezes", spec.p() as f64 / 2.0);
    Ok(())
}
