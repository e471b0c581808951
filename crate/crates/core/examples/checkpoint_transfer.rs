//! Saves a trained ground state and restarts from it at a new coupling
//! with transfer weights.
//!
//! cargo run --release --example checkpoint_transfer

use schrospec::losses::{ProblemSpec, StateArchive};
use schrospec::networks::{checkpoint_path, save_checkpoint};
use schrospec::oracle::{solve_reference, DEFAULT_GRID_POINTS};
use schrospec::trainer::{train_state, TrainConfig};

fn main() {
    let dir = std::env::temp_dir().join("schrospec_transfer");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = TrainConfig::desk();

    let harmonic = ProblemSpec::harmonic(0);
    let first = train_state(&harmonic, &cfg, &StateArchive::new()).expect("train");
    let path = checkpoint_path(&dir, 0, 0.0);
    save_checkpoint(&first.model, &harmonic, &path).expect("save");
    println!("λ=0: E={:.6} after {} epochs -> {}", first.energy(), first.trace.len(), path.display());

    let lambda = 0.04;
    let target = ProblemSpec::new(1.0, lambda, 0);
    let transfer = TrainConfig { transfer_from: Some(path), ..cfg.for_transfer() };
    let second = train_state(&target, &transfer, &StateArchive::new()).expect("transfer");
    let exact = solve_reference(1.0, lambda, 1, DEFAULT_GRID_POINTS).unwrap().energies[0];
    println!(
        "λ={lambda}: E={:.6} (oracle {exact:.6}) after {} epochs, converged={}",
        second.energy(),
        second.trace.len(),
        second.converged()
    );
}
