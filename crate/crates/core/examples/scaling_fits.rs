//! Power-law fits E = b λ^a in the small and large coupling regions, and
//! where the two lines cross.
//!
//! cargo run --release --example scaling_fits

use schrospec::analysis::{analyze, default_lambda_grid, EnergySample, Family, RegionCutoffs};
use schrospec::oracle::{solve_reference, DEFAULT_GRID_POINTS};

fn main() {
    let mut samples = Vec::new();
    for (omega_sq, family) in [(1.0, Family::Anharmonic), (0.0, Family::Quartic)] {
        for lambda in default_lambda_grid() {
            let sol = solve_reference(omega_sq, lambda, 6, DEFAULT_GRID_POINTS).expect("oracle");
            for (n, &energy) in sol.energies.iter().enumerate() {
                samples.push(EnergySample { n, lambda, energy, family, source: "oracle".into() });
            }
        }
    }
    let result = analyze(&samples, RegionCutoffs::default()).expect("fit");
    for f in &result.fits {
        println!("{:<12} n={} a={:.4} b={:.4} residual={:.1e}", f.region, f.n, f.a, f.b, f.residual);
    }
    for c in &result.critical {
        println!("n={} lambda_c={:.4} E_c={:.4}", c.n, c.lambda_c, c.e_c);
    }
}
