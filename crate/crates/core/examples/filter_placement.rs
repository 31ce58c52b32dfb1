//! Where optical filters sit relative to the noise decides what they cost:
//! harmonic SNR against noise level for filters at the transmitter, at the
//! receiver and after every span.
//!
//! `cargo run --release --example filter_placement`

use std::path::Path;

use sdmeq::experiment::{run_filter_study, Placement, RunOptions, ScenarioConfig};

fn main() -> sdmeq::Result<()> {
    let mut cfg = ScenarioConfig::load(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/filter_study.json")))?;
    cfg.equalizer.taps = vec![60];
    cfg.filter_study.n0_half_db = vec![-20.0, -15.0, -10.0, -5.0];
    let rows = run_filter_study(&cfg, RunOptions::default())?;
    let f = cfg.filter_study.filter;
    println!(
        "{} spans, super-Gaussian order {} with {:.0} GHz bandwidth, M = 60",
        cfg.path.links.len(),
        f.order,
        f.bandwidth_3db / 1e9
    );
    print!("{:>12}", "N0/2 dB");
    for n in &cfg.filter_study.n0_half_db {
        print!("{n:>9.1}");
    }
    println!();
    for p in [Placement::None, Placement::Tx, Placement::Rx, Placement::Distributed] {
        print!("{:>12}", format!("{p:?}").to_lowercase());
        for &n in &cfg.filter_study.n0_half_db {
            let row = rows.iter().find(|r| r.placement == Some(p) && r.n0_half_db == n).unwrap();
            print!("{:>9.3}", row.harmonic_snr_db);
        }
        println!();
    }
    Ok(())
}
