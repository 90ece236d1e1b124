//! Decoy-state yield and error bounds next to the true values they bound.
//!
//! Run with `cargo run --example decoy_bounds`.

use satqkd::keyrate::{
    decoy_bounds_bb84, decoy_bounds_sarg04, simulate_decoy_observables, yield_n, DetectionModel,
};

fn main() -> satqkd::Result<()> {
    println!("{:>9} {:>11} {:>11} {:>11} {:>11} {:>11} {:>11}", "loss", "Y1", "Y1 bb84", "Y1 sarg", "Y2", "Y2 sarg", "e2 sarg");
    for db in [10.0, 20.0, 30.0, 40.0] {
        let det = DetectionModel::new(5e-5, 10f64.powf(-db / 10.0));
        let o = simulate_decoy_observables(&[0.5, 0.05, 0.0], &det)?;
        let bb84 = decoy_bounds_bb84(&o[0], &o[1], &o[2])?;
        let o = simulate_decoy_observables(&[0.5, 0.05, 0.1, 0.0], &det)?;
        let sarg = decoy_bounds_sarg04(&o[0], &o[1], &o[2], &o[3])?;
        println!(
            "{:>6} dB {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4}",
            db,
            yield_n(1, &det),
            bb84.y1_lower,
            sarg.y1_lower,
            yield_n(2, &det),
            sarg.y2_lower,
            sarg.e2_upper
        );
    }
    Ok(())
}
