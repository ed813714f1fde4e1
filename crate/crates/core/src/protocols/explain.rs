use std::{ f64::consts::TAU, fmt::Write };

use super::ProtocolScript;
use crate::dynamics::{ CouplingForm, Frame };

fn hz(w: f64) -> f64 { w / TAU }

/// Human-readable segment table: durations, drives, couplings and rates.
pub fn explain(script: &ProtocolScript) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "protocol: {}", script.label);
    let _ = writeln!(out, "space: {}", script.space);
    let _ = writeln!(out, "{:>3}  {:<14} {:>12} {:>12}  {:<36} {:<36} {}", "#", "segment", "start [us]", "length [us]", "drives (Ω/2π)", "couplings (𝒢/2π)", "local channels (Γ/2π)");
    let mut t = 0.0;
    for (k, seg) in script.segments.iter().enumerate() {
        let drives = seg
            .drives
            .iter()
            .map(|d| {
                let det = if d.detuning != 0.0 { format!(" Δ={:.3} MHz", hz(d.detuning) / 1e6) } else { String::new() };
                format!("{} {}-{} {:.3} MHz{det}", d.label, d.lower, d.upper, hz(d.rabi) / 1e6)
            })
            .collect::<Vec<_>>()
            .join(", ");
        let form = match seg.form {
            CouplingForm::Rwa => "",
            CouplingForm::Full => " full",
        };
        let couplings = seg
            .couplings
            .iter()
            .map(|c| format!("m{} {}-{} {:.3} kHz{form}", c.mode + 1, c.lower, c.upper, hz(c.strength) / 1e3))
            .collect::<Vec<_>>()
            .join(", ");
        let local = seg
            .channels
            .iter()
            .map(|c| format!("{} {:.3} kHz", c.label, hz(c.rate) / 1e3))
            .collect::<Vec<_>>()
            .join(", ");
        let frame = if matches!(seg.frame, Frame::Lab { .. }) { " [lab]" } else { "" };
        let _ = writeln!(
            out,
            "{:>3}  {:<14} {:>12.5} {:>12.5}  {:<36} {:<36} {}",
            k + 1,
            format!("{}{frame}", seg.label),
            t * 1e6,
            seg.duration * 1e6,
            if drives.is_empty() { "-".into() } else { drives },
            if couplings.is_empty() { "-".into() } else { couplings },
            if local.is_empty() { "-".into() } else { local },
        );
        t += seg.duration;
    }
    let _ = writeln!(out, "total: {:.5} us", t * 1e6);
    let _ = writeln!(out, "channels:");
    if script.channels.is_empty() {
        let _ = writeln!(out, "  none");
    }
    for c in &script.channels {
        let _ = writeln!(out, "  {:<20} Γ/2π = {:.6e} Hz", c.label, hz(c.rate));
    }
    for (name, k) in &script.checkpoints {
        let _ = writeln!(out, "checkpoint `{name}` after segment {k}");
    }
    for w in &script.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}
