//! Optimised rate-versus-distance curves for all protocols, written as CSV.
//!
//! Run with `cargo run --release --example key_rate_curves [scenario] [out.csv]`.

use std::path::PathBuf;

use satqkd::cli::{cmd_sweep, SweepRequest};
use satqkd::{ProtocolKind, ScenarioPreset};

fn main() -> satqkd::Result<()> {
    let mut args = std::env::args().skip(1);
    let preset = ScenarioPreset::from_name(&args.next().unwrap_or_else(|| "uplink5db".into()))?;
    let out = PathBuf::from(args.next().unwrap_or_else(|| "key_rate_curves.csv".into()));

    let mut req = SweepRequest::new(preset.scenario(), ProtocolKind::ALL.to_vec());
    req.step_km = 100.0;
    cmd_sweep(&req, &out)?;
    println!("wrote {} ({preset}, 100 km steps)", out.display());
    Ok(())
}
