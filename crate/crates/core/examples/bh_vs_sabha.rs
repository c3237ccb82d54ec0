//! BH, Storey-BH and SABHA with ordered weights on a sequence whose signals
//! sit near the front.
//!
//! ```text
//! cargo run --example bh_vs_sabha
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sabha::optim::AdmmConfig;
use sabha::procedures::{bh, sabha, storey_bh, MethodConfig, PValues};
use sabha::stats::upper_tail_z;
use sabha::structure::StructureSpec;
use sabha::weights::estimate_weights;

fn main() -> sabha::Result<()> {
    let n = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut is_null = Vec::with_capacity(n);
    let p: Vec<f64> = (0..n)
        .map(|i| {
            // signal density decays along the sequence
            let signal = rng.random::<f64>() < 0.6 * (1.0 - i as f64 / n as f64).powi(3);
            is_null.push(!signal);
            let z: f64 = rng.sample(StandardNormal);
            upper_tail_z(z + if signal { 2.5 } else { 0.0 })
        })
        .collect();
    let p = PValues::new(p)?;
    let cfg = MethodConfig::new(0.1, 0.5)?;

    let q = estimate_weights(
        &p,
        cfg.tau,
        &StructureSpec::ordered_mle(0.1)?,
        &AdmmConfig::default(),
    )?;
    let runs = [
        bh(&p, cfg.alpha)?,
        storey_bh(&p, &cfg)?,
        sabha(&p, &cfg, &q)?,
    ];

    println!("{:<12} {:>8} {:>8}", "method", "rejected", "fdp");
    for r in &runs {
        let false_hits = r.rejected.iter().filter(|&&i| is_null[i]).count();
        let fdp = false_hits as f64 / r.n_rejections().max(1) as f64;
        println!("{:<12} {:>8} {:>8.3}", r.method, r.n_rejections(), fdp);
    }
    println!(
        "weights at 1, 250, 500, 1000: {:.3} {:.3} {:.3} {:.3}",
        q.q[0], q.q[249], q.q[499], q.q[999]
    );
    Ok(())
}
