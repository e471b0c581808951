//! Monte-Carlo fidelity between a reference state and an approximation.
//!
//! cargo run --release --example fidelity

use schrospec::metrics::{fidelity, FidelityConfig, FnWavefunction};
use schrospec::oracle::HarmonicState;

fn main() {
    let exact = HarmonicState::new(1, 1.0);
    for width in [1.0, 1.05, 1.2, 1.5] {
        let guess = FnWavefunction(move |x: f64| -3.0 * x * (-x * x / (2.0 * width * width)).exp());
        let f = fidelity(&exact, &guess, 5.0, FidelityConfig::default()).expect("fidelity");
        println!("width {width:<5} fidelity {:.6} ± {:.1e} over {} batches", f.mean, f.std, f.resamples);
    }
}
