//! A reduced grid experiment: FDR and power per method, written as CSV and
//! two SVG charts into `target/grid_experiment/`.
//!
//! ```text
//! cargo run --release --example grid_experiment [trials]
//! ```

use std::fs::File;
use std::path::Path;

use sabha::simulation::{run_trials, Experiment};
use sabha::svg::summary_charts;

fn main() -> sabha::Result<()> {
    let trials = std::env::args()
        .nth(1)
        .map_or(10, |s| s.parse().expect("trials must be an integer"));
    let exp = Experiment {
        n_trials: trials,
        mu_sig: vec![0.5, 1.5, 2.5, 3.5],
        ..Experiment::standard(7)
    };
    let table = run_trials(&exp, None)?;

    let out = Path::new("target/grid_experiment");
    std::fs::create_dir_all(out)?;
    table.write_csv(File::create(out.join("summary.csv"))?)?;
    let (power, fdp) = summary_charts(&table);
    std::fs::write(out.join("power.svg"), power)?;
    std::fs::write(out.join("fdp.svg"), fdp)?;

    for row in &table.rows {
        println!(
            "{:<14} mu={:.1}  fdr {:.3} ± {:.3}  power {:.3}",
            row.method.to_string(),
            row.mu_sig,
            row.mean_fdp,
            row.stderr_fdp,
            row.mean_power
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}
