//! Continuous cooling at 𝒢/2π = 1 MHz, T = 0.1 K: P₀(t) and the converged
//! effective temperature.

use rydmech::{
    dynamics::SolverOptions,
    physmodel::PhysicalParams,
    protocols::{ build_cooling_protocol, run_protocol, ProtocolOptions },
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = PhysicalParams::cooling();
    let opts = ProtocolOptions { cool_time: 10e-6, ..ProtocolOptions::default() };
    let script = build_cooling_protocol(&params, &opts)?;
    let run = run_protocol(&script, &SolverOptions { samples: 10, ..SolverOptions::default() })?;
    let p0 = run.result.column("p0").expect("recorded");
    let n = run.result.column("n_mean").expect("recorded");
    println!("{:>10} {:>10} {:>10}", "t (μs)", "P0", "<n>");
    for ((t, p), n) in run.result.times.iter().zip(p0).zip(n) {
        println!("{:>10.3} {p:>10.6} {n:>10.4}", t * 1e6);
    }
    let m = &run.summary.metrics;
    println!("steady P0     {:.6}", m["steady_p0"]);
    println!("steady T_eff  {:.4e} K", m["steady_t_eff_k"]);
    println!("fitted rate   {:.4e} Hz", m.get("cooling_rate_fit_hz").copied().unwrap_or(f64::NAN));
    println!("support       {} of {} entries", run.result.diagnostics.support_size, script.space.total_dim().pow(2));
    Ok(())
}
