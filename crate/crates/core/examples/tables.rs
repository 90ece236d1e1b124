//! Critical distances and maximum rates for every link and protocol, next to
//! the reference values.
//!
//! Run with `cargo run --release --example tables`.

use satqkd::adversary::IrudParams;
use satqkd::cli::cmd_tables;

fn main() -> satqkd::Result<()> {
    print!("{}", cmd_tables(&IrudParams::default())?);
    Ok(())
}
