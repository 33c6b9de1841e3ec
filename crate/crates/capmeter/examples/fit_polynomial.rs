//! Monotone polynomial fit of a regular-model energy curve
//! `Ū = u∞ + K/N` (plus noise) and its analytic capacity, next to the
//! sigmoid readout of the same curve.
//!
//! `cargo run --release --example fit_polynomial`

use capmeter::estimators::{capacity_from_polynomial, fit_monotone_polynomial, fit_sigmoid_capacity, DEFAULT_DEGREE};
use capmeter::protocol::log_grid;
use capmeter::{rng, EnergyCurve};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k = 10.0;
    let ns = log_grid(50, 5_000, 12);
    let mut noise = rng::stream(9, &[]);
    let stderrs: Vec<f64> = ns.iter().map(|&n| 0.02 / (n as f64).sqrt()).collect();
    let means: Vec<f64> =
        ns.iter().zip(&stderrs).map(|(&n, s)| 0.2 + k / n as f64 + s * rng::std_normal(&mut noise)).collect();
    let curve = EnergyCurve::from_values(&ns, &means, &stderrs)?;

    let poly = fit_monotone_polynomial(&curve, DEFAULT_DEGREE)?;
    println!("active constraints: {}, max violation {:.1e}", poly.active_constraints, poly.max_violation);
    println!("{:>6} {:>10}", "N", "C_poly");
    for &n in &ns {
        println!("{n:>6} {:>10.3}", poly.capacity(n as f64));
    }
    let c_poly = capacity_from_polynomial(&poly, 5_000)?;
    let c_sig = fit_sigmoid_capacity(&curve, None)?.capacity_at(5_000);
    println!(
        "C(5000): polynomial {:.2} ± {:.2}, sigmoid {:.2} ± {:.2}, truth {k}",
        c_poly.value, c_poly.stderr, c_sig.value, c_sig.stderr
    );
    Ok(())
}
