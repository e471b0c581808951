//! Trains the two lowest harmonic states at desk scale and scores them
//! against the analytic solutions.
//!
//! cargo run --release --example harmonic_pinn

use schrospec::metrics::{energy_error, fidelity, FidelityConfig};
use schrospec::oracle::HarmonicState;
use schrospec::trainer::{train_cascade, Family, TrainConfig};

fn main() {
    let cfg = TrainConfig::desk();
    let result = train_cascade(&Family::new(1.0, 0.0), &cfg, 1, |o| {
        println!("n={} done after {} epochs, E={:.6}", o.spec.n, o.trace.len(), o.energy());
        Ok(())
    })
    .expect("training");
    for o in &result.outcomes {
        let exact = HarmonicState::new(o.spec.n, 1.0);
        let f = fidelity(&exact, &o.model, o.spec.half_width, FidelityConfig::default()).expect("fidelity");
        println!(
            "n={} converged={} err_E={:.2e} fidelity={:.6} ± {:.1e}",
            o.spec.n,
            o.converged(),
            energy_error(exact.energy(), o.energy()).unwrap(),
            f.mean,
            f.std
        );
    }
}
