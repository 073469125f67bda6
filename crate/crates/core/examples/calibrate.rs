//! Sweeps one gate row under given noise constants and prints the operating range.
//!
//! usage: calibrate <cnot|toffoli> <fixed_T> <b_ac_T> <j_ueV> <phonon> <upsilon> <start> <stop> <points> [refine]

use std::time::Instant;

use qdgate_core::analysis::{grid, operating_range, SweepSpec, Thresholds};
use qdgate_core::device::Gate;
use qdgate_core::noise::NoiseConfig;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let num = |i: usize| args[i].parse::<f64>().expect("numeric argument");
    let gate = if args[0] == "toffoli" { Gate::Toffoli } else { Gate::Cnot };
    let exchange = vec![num(3); gate.n_qubits() - 1];
    let axis = grid(num(6), num(7), num(8) as usize, true).unwrap();
    let mut spec = SweepSpec::new(gate, num(1), exchange, num(2), axis);
    spec.refine = args.get(9).is_some_and(|s| s == "refine");
    let noise = NoiseConfig { phonon: num(4), upsilon: num(5), ..Default::default() };
    let start = Instant::now();
    let res = operating_range(&spec, &noise, &Thresholds::default()).unwrap();
    for p in &res.points {
        let w = p.worst();
        println!("{:.5} {} worst {} q{} margin {:+.4}", p.gradient, if p.pass() { "PASS" } else { "fail" }, w.initial, w.weakest_qubit, w.margin);
    }
    println!("range {:?}", res.range);
    println!("elapsed {:.1}s", start.elapsed().as_secs_f64());
}
