//! Jet second derivatives and tape gradients against finite differences.
//!
//! cargo run --release --example autodiff_check

use schrospec::losses::{total_loss, ProblemSpec, Scenario, ScheduleState, StateArchive, WeightSchedule};
use schrospec::networks::{ModelPair, ModelShape};
use schrospec::sampling::{BatchSampler, BatchSpec};
use schrospec::trainer::evaluate_step;

fn main() {
    let shape = ModelShape { psi_hidden: vec![16, 16], energy_hidden: vec![8] };
    let model = ModelPair::init(&shape, 7).expect("init");
    let spec = ProblemSpec::new(1.0, 0.3, 0);

    let h = 1e-3;
    for x in [-2.0, 0.1, 1.7] {
        let v = |x: f64| model.evaluate(x).unwrap().psi;
        let fd = (v(x + h) - 2.0 * v(x) + v(x - h)) / (h * h);
        println!("x={x:>5}: psi'' jet={:.9} fd={fd:.9}", model.evaluate(x).unwrap().d2psi);
    }

    let xs = BatchSampler::new(BatchSpec { count: 64, ..BatchSpec::new(spec.half_width) }, 1).sample();
    let schedule = WeightSchedule::default();
    let state = ScheduleState { epoch: 0, scenario: Scenario::Fresh };
    let archive = StateArchive::new();
    let step = evaluate_step(&model, &spec, &xs, &[], &schedule, state).expect("step");
    let grad = step.psi_grad.flatten();
    let mut flat = model.psi_net.flatten();
    let eps = 1e-6;
    for k in [0, grad.len() / 2, grad.len() - 1] {
        let mut loss = |d: f64| {
            flat[k] += d;
            let m = ModelPair { psi_net: model.psi_net.with_flat(&flat).unwrap(), ..model.clone() };
            flat[k] -= d;
            total_loss(&m, &xs, &spec, &archive, &schedule, state).unwrap().total
        };
        let fd = (loss(eps) - loss(-eps)) / (2.0 * eps);
        println!("dL/dtheta[{k}]: tape={:.8e} fd={fd:.8e}", grad[k]);
    }
}
