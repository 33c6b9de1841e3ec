//! Recovers a known sigmoid capacity model from a noisy energy curve and
//! turns the fitted midpoint into data-collection guidance.
//!
//! `cargo run --release --example fit_sigmoid`

use capmeter::estimators::{energy_from_sigmoid, fit_sigmoid_capacity, freezing_threshold, SigmoidParams};
use capmeter::protocol::log_grid;
use capmeter::rng;
use capmeter::EnergyCurve;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = SigmoidParams { a: 100.0, b: 20.0, c: 3.0, u_inf: 0.1 };
    let ns = log_grid(100, 100_000, 15);
    let mut noise = rng::stream(5, &[]);
    let sigma = 0.005;
    let means = ns
        .iter()
        .map(|&n| Ok(energy_from_sigmoid(&truth, n as f64)? + sigma * rng::std_normal(&mut noise)))
        .collect::<Result<Vec<f64>, capmeter::estimators::EstimatorError>>()?;
    let curve = EnergyCurve::from_values(&ns, &means, &vec![sigma; ns.len()])?;

    let model = fit_sigmoid_capacity(&curve, None)?;
    let p = model.params;
    println!("truth:  a={} b={} c={} u_inf={}", truth.a, truth.b, truth.c, truth.u_inf);
    println!(
        "fitted: a={:.2}±{:.2} b={:.2}±{:.2} c={:.3}±{:.3} u_inf={:.4}±{:.4}",
        p.a,
        model.stderr(0),
        p.b,
        model.stderr(1),
        p.c,
        model.stderr(2),
        p.u_inf,
        model.stderr(3)
    );
    let threshold = freezing_threshold(&p)?;
    println!("n_star = {:.0} (truth {:.0})", threshold.n_star, (truth.b / truth.c).exp());
    for n in [200.0, 2_000.0, 50_000.0] {
        println!("at N = {n}: {}", threshold.guidance(n).describe());
    }
    let cap = model.capacity_at(100_000);
    println!("C(100000) = {:.2} ± {:.2}", cap.value, cap.stderr);
    Ok(())
}
