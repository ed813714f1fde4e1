//! Two-cantilever NOON sequence: entanglement after the first step and the
//! overlap with (|2,0⟩ − |0,2⟩)/√2 at the end.

use rydmech::{
    dynamics::SolverOptions,
    physmodel::PhysicalParams,
    protocols::{ build_noon_protocol, explain, run_protocol, ProtocolOptions },
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let script = build_noon_protocol(&PhysicalParams::noon(), &ProtocolOptions::default())?;
    print!("{}", explain(&script));
    let run = run_protocol(&script, &SolverOptions::default())?;
    for (k, v) in &run.summary.metrics {
        if k.starts_with("step1") {
            println!("{k:<22} {v:.4}");
        }
    }
    println!("final fidelity         {:.4}", run.summary.fidelity.unwrap_or(f64::NAN));
    Ok(())
}
