//! Monte Carlo complexity against the analytic bounds, and the FDR bound
//! that follows from it.
//!
//! ```text
//! cargo run --release --example complexity_bounds
//! ```

use sabha::complexity::{complexity_report, fdr_bound_independent, SupKind};
use sabha::structure::{Graph, Grouping, StructureSpec};

fn main() -> sabha::Result<()> {
    let n = 400;
    let eps = 0.1;
    let specs = [
        ("ordered", StructureSpec::ordered_step(eps)?),
        (
            "grouped x8",
            StructureSpec::grouped(eps, Grouping::contiguous(&[50; 8])?)?,
        ),
        (
            "tv grid m=5",
            StructureSpec::tv_graph(eps, Graph::grid(20, 20)?, 5.0)?,
        ),
    ];
    println!(
        "{:<12} {:>10} {:>10} {:>10}  sup",
        "class", "mc", "stderr", "bound"
    );
    for (name, spec) in specs {
        let r = complexity_report(&spec, n, 4000, 1)?;
        let kind = match r.sup_kind {
            SupKind::Exact => "exact",
            SupKind::UpperBound => "upper",
        };
        println!(
            "{name:<12} {:>10.4} {:>10.4} {:>10.4}  {kind}   fdr <= {:.4}",
            r.rad_estimate,
            r.rad_stderr,
            r.analytic_bound,
            fdr_bound_independent(0.1, 0.5, r.rad_estimate)
        );
    }
    Ok(())
}
