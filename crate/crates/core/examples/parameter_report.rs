//! Closed-form parameter estimates for a single charge and for 3000 charges.

use rydmech::physmodel::{ units, PhysicalParams };

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (label, charges) in [("single charge", 1.0), ("3000 charges", 3000.0)] {
        let p = PhysicalParams { charge: units::e_to_coulomb(charges), ..PhysicalParams::estimates() };
        println!("{label}");
        for (name, value, unit) in p.report()?.rows() {
            println!("  {name:<36} {value:>14.6e} {unit}");
        }
    }
    Ok(())
}
