//! Group-constant weights, with groups read from labels.
//!
//! ```text
//! cargo run --example grouped_weights
//! ```

use sabha::optim::AdmmConfig;
use sabha::procedures::{sabha, MethodConfig, PValues};
use sabha::structure::Grouping;
use sabha::weights::grouped_weights;

fn main() -> sabha::Result<()> {
    // three groups of 100: mostly signal, mixed, mostly null
    let share = [0.7, 0.3, 0.0];
    let mut labels = Vec::new();
    let mut p = Vec::new();
    for (g, &s) in share.iter().enumerate() {
        for i in 0..100 {
            labels.push(g);
            let u = (i as f64 + 0.5) / 100.0;
            p.push(if u < s { 1e-3 * u } else { u });
        }
    }
    let grouping = Grouping::from_labels(labels)?;
    let p = PValues::new(p)?;
    let cfg = MethodConfig::new(0.1, 0.5)?;
    let q = grouped_weights(&p, cfg.tau, 0.1, &grouping, &AdmmConfig::default())?;
    for g in 0..grouping.n_groups() {
        let i = grouping.labels().iter().position(|&l| l == g).unwrap();
        println!("group {g}: q = {:.3}", q.q[i]);
    }
    let r = sabha(&p, &cfg, &q)?;
    println!("rejections: {}", r.n_rejections());
    Ok(())
}
