//! Step versus MLE fits for the ordered structure on the same p-values.
//!
//! ```text
//! cargo run --example ordered_weights
//! ```

use sabha::optim::AdmmConfig;
use sabha::procedures::{constraint_sum, PValues};
use sabha::weights::{ordered_mle_weights, ordered_step_weights};

fn main() -> sabha::Result<()> {
    let n = 200;
    // first 60 hypotheses are strong signals; the rest are spread-out nulls
    let p: Vec<f64> = (0..n)
        .map(|i| {
            if i < 60 {
                1e-4
            } else {
                ((i * 61) % 199) as f64 / 199.0
            }
        })
        .collect();
    let p = PValues::new(p)?;
    let (tau, eps) = (0.5, 0.1);

    let step = ordered_step_weights(&p, tau, eps);
    let mle = ordered_mle_weights(&p, tau, eps, &AdmmConfig::default())?;
    for (name, q) in [("step", &step), ("mle", &mle)] {
        let levels: Vec<String> = [0, 50, 100, 150, 199]
            .iter()
            .map(|&i| format!("{:.3}", q.q[i]))
            .collect();
        println!(
            "{name:<5} q = [{}]  constraint {:.2} <= {n}",
            levels.join(", "),
            constraint_sum(&p, &q.q, tau)
        );
    }
    Ok(())
}
