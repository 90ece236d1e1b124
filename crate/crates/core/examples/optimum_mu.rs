//! Optimal signal and decoy intensities versus distance on the 5 dB uplink.
//!
//! Run with `cargo run --release --example optimum_mu [scenario] [points]`.

use satqkd::optimizer::{critical_distance, sweep_curve, DistanceGrid, SweepSpec};
use satqkd::{ProtocolKind, ScenarioPreset};

fn fmt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.3}"))
}

fn main() -> satqkd::Result<()> {
    let mut args = std::env::args().skip(1);
    let preset = ScenarioPreset::from_name(&args.next().unwrap_or_else(|| "uplink5db".into()))?;
    let points: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(12);
    let scenario = preset.scenario();
    let (start, _) = preset.default_range_km();

    for protocol in ProtocolKind::ALL {
        let probe = SweepSpec::new(protocol, scenario.link, scenario.detector, DistanceGrid::new(start, start, 1.0));
        let Some(limit) = critical_distance(&probe)? else {
            println!("{protocol}: never secure on {preset}");
            continue;
        };
        let grid = DistanceGrid::with_points(start, limit.distance_m / 1e3, points);
        let spec = SweepSpec { distances: grid, ..probe };
        println!("{protocol} on {preset} (critical distance {:.0} km)", limit.distance_m / 1e3);
        println!("  {:>9} {:>7} {:>7} {:>7} {:>12}", "km", "mu", "nu1", "nu2", "rate");
        for p in sweep_curve(&spec)? {
            println!(
                "  {:>9.1} {:>7} {:>7} {:>7} {:>12.4e}",
                p.distance_m / 1e3,
                fmt(p.best_mu),
                fmt(p.best_nu1),
                fmt(p.best_nu2),
                p.best_rate
            );
        }
    }
    Ok(())
}
