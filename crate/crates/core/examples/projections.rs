//! The projection operators used inside the weight solver.
//!
//! ```text
//! cargo run --example projections
//! ```

use sabha::optim::{proj_feasible_g, proj_group_mean, proj_isotonic, proj_l1_ball};
use sabha::structure::Grouping;

fn show(name: &str, v: &[f64]) {
    let s: Vec<String> = v.iter().map(|x| format!("{x:6.3}")).collect();
    println!("{name:<10} [{}]", s.join(" "));
}

fn main() -> sabha::Result<()> {
    let z = [0.9, 0.2, 0.5, 0.1, 0.8, 0.3];
    show("z", &z);
    show("isotonic", &proj_isotonic(&z));
    show("l1 <= 1", &proj_l1_ball(&z, 1.0));
    show(
        "groups",
        &proj_group_mean(&z, &Grouping::contiguous(&[3, 3])?),
    );
    // only indices 1, 3 exceed tau; their reciprocals must sum to at most n (1 - tau)
    let ind = [false, true, false, true, false, false];
    show("feasible", &proj_feasible_g(&z, &ind, 0.5, z.len()));
    Ok(())
}
