//! Prepares (|g,0⟩ − |g,2⟩)/√2 with and without dissipation.

use rydmech::{
    dynamics::SolverOptions,
    physmodel::PhysicalParams,
    protocols::{ build_superposition_protocol, run_protocol, ProtocolOptions },
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lossy = PhysicalParams::state_engineering();
    let ideal = PhysicalParams { gamma_s: 0.0, gamma_p: 0.0, mech_damping: Some(0.0), ..lossy.clone() };
    for (label, params) in [("with dissipation", lossy), ("ideal", ideal)] {
        let script = build_superposition_protocol(&params, &ProtocolOptions::default())?;
        let run = run_protocol(&script, &SolverOptions::default())?;
        println!("{label:<17} F = {:.4}", run.summary.fidelity.unwrap_or(f64::NAN));
    }
    Ok(())
}
