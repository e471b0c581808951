//! Second-order perturbation theory against the oracle, state by state.
//!
//! cargo run --release --example perturbative_gap

use schrospec::oracle::{perturbative_energy, solve_reference, DEFAULT_GRID_POINTS};

fn main() {
    println!("{:>3} {:>8} {:>12} {:>12} {:>10}", "n", "lambda", "E_pert", "E_oracle", "gap");
    for lambda in [0.005, 0.04, 0.64, 1.28, 10.24] {
        let sol = solve_reference(1.0, lambda, 6, DEFAULT_GRID_POINTS).expect("oracle");
        for (n, &e) in sol.energies.iter().enumerate() {
            let p = perturbative_energy(n, lambda);
            println!("{n:>3} {lambda:>8} {p:>12.6} {e:>12.6} {:>10.3e}", (p - e) / p);
        }
    }
}
