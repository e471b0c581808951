//! Finite-difference reference energies for the anharmonic family.
//!
//! cargo run --release --example oracle_spectrum

use schrospec::oracle::{solve_reference, DEFAULT_GRID_POINTS};

fn main() {
    println!("{:>8} {}", "lambda", "E_0 .. E_5");
    for lambda in [0.0, 0.005, 0.08, 0.64, 2.56, 10.24] {
        let sol = solve_reference(1.0, lambda, 6, DEFAULT_GRID_POINTS).expect("oracle");
        let es: Vec<String> = sol.energies.iter().map(|e| format!("{e:.8}")).collect();
        println!("{lambda:>8} {}  (X = {:.2})", es.join(" "), sol.half_width());
    }
}
