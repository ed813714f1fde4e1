//! Config-driven sweep of the superposition fidelity over 𝒢, run in parallel.

use rydmech::cli::{ csv_text, parse_config, run };

const CONFIG: &str = "
experiment = sweep
sweep.experiment = superpose
sweep.param = coupling_g
sweep.values = 50 kHz, 100 kHz, 150 kHz, 200 kHz, 300 kHz
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let report = run(&parse_config(CONFIG)?)?;
    print!("{}", csv_text(&report));
    Ok(())
}
