//! Climbs the Fock ladder to m = 4 and prints each rung's population peak.

use rydmech::{
    dynamics::SolverOptions,
    physmodel::PhysicalParams,
    protocols::{ build_fock_protocol, explain, run_protocol, ProtocolOptions },
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let script = build_fock_protocol(4, &PhysicalParams::state_engineering(), &ProtocolOptions::default())?;
    print!("{}", explain(&script));
    let run = run_protocol(&script, &SolverOptions { samples: 2000, ..SolverOptions::default() })?;
    for m in 0..=4 {
        let col = run.result.column(&format!("pop_g_m{m}")).expect("recorded");
        println!("peak |g,{m}⟩ population {:.4}", col.iter().cloned().fold(0.0, f64::max));
    }
    println!("fidelity {:.4} after {:.3} μs", run.summary.fidelity.unwrap_or(f64::NAN), script.total_time() * 1e6);
    Ok(())
}
