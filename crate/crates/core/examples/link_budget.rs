//! Channel loss budget of the four reference links across distance.
//!
//! Run with `cargo run --example link_budget`.

use satqkd::channel::{alt_uplink_transmittance, db_from_transmittance, AltUplinkParams};
use satqkd::presets::WAVELENGTH_M;
use satqkd::ScenarioPreset;

fn main() -> satqkd::Result<()> {
    println!("{:<15} {:>9} {:>10} {:>10} {:>10}", "link", "km", "diffr dB", "atm dB", "total dB");
    for preset in ScenarioPreset::ALL {
        let link = preset.link();
        let peak = link.peak_distance_m() / 1e3;
        for km in [peak, 500.0, 1000.0, 5000.0, 20000.0] {
            let at = link.with_distance_km(km);
            println!(
                "{:<15} {:>9.1} {:>10.2} {:>10.2} {:>10.2}",
                preset.name(),
                km,
                db_from_transmittance(at.diffraction()?)?,
                db_from_transmittance(at.atmosphere.transmittance())?,
                db_from_transmittance(at.transmittance()?)?
            );
        }
    }

    let p = AltUplinkParams::default();
    println!("\nfar-field uplink budget (1 m / 30 cm apertures, 1 dB atmosphere)");
    for km in [500.0, 1000.0, 5000.0] {
        let d = alt_uplink_transmittance(km * 1e3, WAVELENGTH_M, &p)?;
        println!("{km:>9.0} km  {:>8.2} dB", db_from_transmittance(d)?);
    }
    Ok(())
}
