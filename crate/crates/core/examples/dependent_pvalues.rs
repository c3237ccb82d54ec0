//! Correlated one-sided p-values from an AR(1) Gaussian sequence, and the
//! dependent-case FDR bound for the ordered structure.
//!
//! ```text
//! cargo run --release --example dependent_pvalues
//! ```

use sabha::complexity::{fdr_bound_dependent, rad_mc, DependentBoundParams};
use sabha::procedures::{bh, sabha, MethodConfig};
use sabha::simulation::{ar1_covariance, condition_number, make_dependent_scenario};
use sabha::structure::StructureSpec;
use sabha::weights::ordered_step_weights;

fn main() -> sabha::Result<()> {
    let n = 2000;
    let rho = 0.5;
    let mu: Vec<f64> = (0..n).map(|i| if i < 200 { 3.0 } else { 0.0 }).collect();
    let (_, p) = make_dependent_scenario(n, rho, &mu, 11)?;
    let cfg = MethodConfig::new(0.1, 0.5)?;

    let q = ordered_step_weights(&p, cfg.tau, 0.1);
    let a = bh(&p, cfg.alpha)?;
    let b = sabha(&p, &cfg, &q)?;
    let false_hits =
        |r: &sabha::procedures::RejectionResult| r.rejected.iter().filter(|&&i| i >= 200).count();
    println!(
        "bh     rejected {:>4}  false {:>3}",
        a.n_rejections(),
        false_hits(&a)
    );
    println!(
        "sabha  rejected {:>4}  false {:>3}",
        b.n_rejections(),
        false_hits(&b)
    );

    let kappa = condition_number(&ar1_covariance(200, rho)?)?;
    let spec = StructureSpec::ordered_step(0.1)?;
    let (rad, _) = rad_mc(&spec, n, 2000, 3)?;
    let params = DependentBoundParams {
        kappa,
        c: 0.1,
        epsilon: 0.1,
        prob_small_khat: 0.0,
    };
    let bound = fdr_bound_dependent(cfg.alpha, cfg.tau, rad.estimate, &params, n)?;
    println!(
        "condition number (200 x 200 block) {kappa:.2}, complexity {:.4}, fdr bound {bound:.3}",
        rad.estimate
    );
    Ok(())
}
