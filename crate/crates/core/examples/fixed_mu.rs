//! Rate lost by pinning the signal intensity to its value at the longest
//! secure distance, compared with re-optimising at every distance.
//!
//! Run with `cargo run --release --example fixed_mu`.

use satqkd::optimizer::{max_distance_mu, sweep_curve, DistanceGrid, SweepSpec};
use satqkd::{ProtocolKind, ScenarioPreset};

fn main() -> satqkd::Result<()> {
    let s = ScenarioPreset::Uplink5Db.scenario();
    let grid = DistanceGrid::with_points(10.0, 8000.0, 50);
    for protocol in ProtocolKind::ALL {
        let spec = SweepSpec::new(protocol, s.link, s.detector, grid);
        let Some(mu) = max_distance_mu(&spec)? else { continue };
        let free = sweep_curve(&spec)?;
        let fixed = sweep_curve(&spec.with_fixed_mu(Some(mu)))?;
        let losses: Vec<(f64, f64)> = free
            .iter()
            .zip(&fixed)
            .filter(|(f, _)| f.secure())
            .map(|(f, x)| (f.distance_m / 1e3, 1.0 - x.best_rate / f.best_rate))
            .collect();
        let worst = losses.iter().map(|l| l.1).fold(0.0, f64::max);
        let first = losses.first().copied().unwrap_or((0.0, 0.0));
        println!(
            "{protocol:<13} mu pinned at {mu:.3}: {:.1}% lost at {:.0} km, worst {:.1}%",
            100.0 * first.1,
            first.0,
            100.0 * worst
        );
    }
    Ok(())
}
