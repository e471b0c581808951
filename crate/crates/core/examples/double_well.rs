//! The near-degenerate pair of the double well V = -7x^2 + x^4.
//!
//! cargo run --release --example double_well

use schrospec::oracle::{solve_reference, DEFAULT_GRID_POINTS};

fn main() {
    let sol = solve_reference(-14.0, 1.0, 4, DEFAULT_GRID_POINTS).expect("oracle");
    for (n, e) in sol.energies.iter().enumerate() {
        println!("E_{n} = {e:.10}  nodes = {}", sol.nodes(n));
    }
    println!("tunnelling split E_1 - E_0 = {:.3e}", sol.energies[1] - sol.energies[0]);
    // Left-well amplitude of the two lowest states at the well minimum.
    let x0 = -(7.0f64 / 2.0).sqrt();
    println!("psi_0({x0:.3}) = {:.5}, psi_1({x0:.3}) = {:.5}", sol.eval(0, x0), sol.eval(1, x0));
}
