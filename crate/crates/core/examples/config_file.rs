//! Describe a custom link in TOML, resolve it against a preset, and find its
//! critical distance.
//!
//! Run with `cargo run --release --example config_file [path.toml]`.

use satqkd::optimizer::{critical_distance, DistanceGrid, SweepSpec};
use satqkd::{ProtocolKind, ScenarioConfig};

const SAMPLE: &str = r#"
name = "large-ground-station"
base = "uplink5db"
tx_primary_radius_m = 1.0
tx_secondary_radius_m = 0.1
turb_loss_db = 8.0
"#;

fn main() -> satqkd::Result<()> {
    let config = match std::env::args().nth(1) {
        Some(path) => ScenarioConfig::load(path.as_ref())?,
        None => ScenarioConfig::from_toml_str(SAMPLE)?,
    };
    let scenario = config.resolve()?;
    println!("{}", ScenarioConfig::from_scenario(&scenario).to_toml_string());
    for protocol in ProtocolKind::ALL {
        let spec = SweepSpec::new(protocol, scenario.link, scenario.detector, DistanceGrid::new(1.0, 1.0, 1.0));
        match critical_distance(&spec)? {
            Some(c) => println!("{protocol:<13} {:>8.0} km", c.distance_m / 1e3),
            None => println!("{protocol:<13}     none"),
        }
    }
    Ok(())
}
