//! A short transfer-learning sweep over λ starting from a trained harmonic
//! ground state.
//!
//! cargo run --release --example lambda_sweep

use schrospec::oracle::{solve_reference, DEFAULT_GRID_POINTS};
use schrospec::trainer::{sweep_lambda, train_cascade, Family, SolvedModels, TrainConfig};

fn main() {
    let cfg = TrainConfig::desk();
    let base = train_cascade(&Family::new(1.0, 0.0), &cfg, 0, |_| Ok(())).expect("base");
    let models: Vec<_> = base.outcomes.iter().map(|o| o.model.clone()).collect();
    let mut solved = SolvedModels::default();
    let family = |l: f64| Family::new(1.0, l);
    sweep_lambda(&family, &[0.005, 0.02, 0.08], &models, &cfg, &mut solved, |p| {
        let exact = solve_reference(1.0, p.lambda, 1, DEFAULT_GRID_POINTS).unwrap().energies[0];
        for o in &p.outcomes {
            println!(
                "λ={:<6} n={} E={:.6} oracle={exact:.6} epochs={} converged={}",
                p.lambda,
                o.spec.n,
                o.energy(),
                o.trace.len(),
                o.converged()
            );
        }
        Ok(())
    })
    .expect("sweep");
}
