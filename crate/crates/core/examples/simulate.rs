//! Run a Monte-Carlo experiment from a JSON config, as the `simulate`
//! subcommand does.
//!
//! cargo run --example simulate -- crates/core/examples/configs/null_calibration.json

use infocrit::sim::{run, SimConfig};

fn main() -> infocrit::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/null_calibration.json").into());
    let cfg = SimConfig::from_path(&path)?;
    let report = run(&cfg)?;
    print!("{}", report.to_table());
    Ok(())
}
