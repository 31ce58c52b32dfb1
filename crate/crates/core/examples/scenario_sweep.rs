//! A full scenario sweep driven by a JSON config, as the `sdmeq run` command
//! does, with the results written as CSV to stdout.
//!
//! `cargo run --release --example scenario_sweep [config.json]`

use std::path::PathBuf;

use sdmeq::experiment::{run_scenario, write_csv, RunOptions, ScenarioConfig};

fn main() -> sdmeq::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/quickstart.json")));
    let cfg = ScenarioConfig::load(&path)?;
    eprintln!("{}: {} realizations, taps {:?}", cfg.name, cfg.realizations, cfg.equalizer.taps);
    let rows = run_scenario(&cfg, RunOptions::default())?;
    write_csv(std::io::stdout().lock(), &rows)?;
    Ok(())
}
