//! Total-variation weights on the 15 x 15 grid scenario, printed as a map.
//!
//! ```text
//! cargo run --release --example tv_grid [mu_sig] [m]
//! ```

use sabha::optim::AdmmConfig;
use sabha::procedures::{sabha, MethodConfig};
use sabha::simulation::{fdp_of, make_grid_scenario, power_of, GridScenario};
use sabha::weights::tv_l1_weights;

fn main() -> sabha::Result<()> {
    let mut args = std::env::args().skip(1);
    let mu: f64 = args
        .next()
        .map_or(Ok(2.5), |s| s.parse())
        .expect("mu_sig must be a number");
    let m: f64 = args
        .next()
        .map_or(Ok(10.0), |s| s.parse())
        .expect("m must be a number");

    let grid = GridScenario::standard();
    let graph = grid.graph();
    let draw = make_grid_scenario(mu, 2024)?;
    let cfg = MethodConfig::new(0.1, 0.5)?;
    let q = tv_l1_weights(&draw.p, cfg.tau, 0.1, &graph, m, &AdmmConfig::default())?;

    for r in 0..grid.side {
        let row: String = (0..grid.side)
            .map(|c| match q.q[r * grid.side + c] {
                v if v < 0.4 => '#',
                v if v < 0.7 => '+',
                v if v < 0.9 => '.',
                _ => ' ',
            })
            .collect();
        println!("|{row}|");
    }
    println!(
        "total variation {:.2} (budget {m})",
        graph.total_variation(&q.q)
    );

    let res = sabha(&draw.p, &cfg, &q)?;
    println!(
        "rejected {}  fdp {:.3}  power {:.3}",
        res.n_rejections(),
        fdp_of(&res, &draw.nulls),
        power_of(&res, &draw.nulls, grid.n())
    );
    Ok(())
}
