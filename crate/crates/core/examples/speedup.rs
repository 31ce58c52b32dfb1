//! Wall-clock cost of a closed-form prediction against a Monte Carlo LMS
//! estimate of the same number, on the single-mode high-MDL scenario where
//! the LMS records are long enough to converge.
//!
//! `cargo run --release --example speedup`

use std::path::Path;

use sdmeq::experiment::{bench, ScenarioConfig};

fn main() -> sdmeq::Result<()> {
    let mut cfg = ScenarioConfig::load(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/lms_n1_high.json")))?;
    cfg.equalizer.taps = vec![40, 100];
    let report = bench(&cfg)?;
    for p in &report.points {
        let t = &p.theory;
        println!("M = {}:", p.m);
        println!(
            "  theory   {:8.4} s  (channel {:.4}, discretize {:.4}, solve {:.4})  {:.3} dB",
            t.total, t.channel, t.discretize, t.solve, p.theory_harmonic_snr_db
        );
        println!(
            "  LMS      {:8.4} s  ({} symbols sent, {} equalized, {} step sizes)  {:.3} dB",
            p.mc_sweep,
            p.n_syms,
            p.n_equalized,
            p.lms_per_mu.len(),
            p.lms_harmonic_snr_db
        );
        println!("  speed-up {:8.1}x  single step size {:.1}x", p.ratio_sweep, p.ratio_single);
        println!(
            "  scaled to {} symbols: {:.1} s of simulation, {:.0}x",
            p.full_scale_syms, p.full_scale_mc_sweep, p.full_scale_ratio_sweep
        );
    }
    Ok(())
}
