//! Eve's information fraction versus channel loss at fixed intensity, and the
//! loss at which she learns everything.
//!
//! Run with `cargo run --example eve_information`.

use satqkd::adversary::{mutual_info_bb84, mutual_info_sarg04, IrudParams};
use satqkd::channel::transmittance_from_db;
use satqkd::cli::crossing_loss_db;
use satqkd::ProtocolKind;

fn main() -> satqkd::Result<()> {
    let irud = IrudParams::default();
    println!("{:>8} {:>14} {:>14}", "loss dB", "bb84 mu=0.1", "sarg04 mu=0.2");
    for db in (0..=30).step_by(2) {
        let d = transmittance_from_db(db as f64);
        let bb84 = mutual_info_bb84(0.1, d)?.i_eve;
        let (sarg, strategy) = mutual_info_sarg04(0.2, d, &irud)?;
        println!("{db:>8} {bb84:>14.4} {:>14.4}  {:?}", sarg.i_eve, strategy.regime);
    }
    for (protocol, mu) in [(ProtocolKind::Bb84, 0.1), (ProtocolKind::Sarg04, 0.2)] {
        if let Some(db) = crossing_loss_db(protocol, mu, &irud)? {
            println!("{protocol}: Eve's information reaches 1 at {db:.2} dB (mu = {mu})");
        }
    }
    Ok(())
}
