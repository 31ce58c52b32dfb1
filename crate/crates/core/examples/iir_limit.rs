//! How fast a finite equalizer approaches the infinite-length bound.
//!
//! `cargo run --release --example iir_limit`

use sdmeq::experiment::{realization_channel, ScenarioConfig};
use sdmeq::mmse::{iir_limit, DelayChoice, IirOptions, MmseSolver};
use sdmeq::{from_db, to_db};

fn main() -> sdmeq::Result<()> {
    for (n_modes, mdl) in [(1, 0.7), (1, 3.8), (4, 3.8)] {
        let mut cfg = ScenarioConfig::default();
        cfg.path.links[0].n_modes = n_modes;
        cfg.path.links[0].sigma_mdl_db = mdl;
        let dc = realization_channel(&cfg, 0)?;
        let n0 = from_db(-10.0);
        let iir = iir_limit(&dc, n0, &IirOptions::default())?;
        let bound = to_db(iir.harmonic_snr);
        println!(
            "N = {n_modes}, MDL {mdl} dB: long-equalizer limit {bound:.3} dB at M = {}{}",
            iir.taps,
            if iir.converged { "" } else { " (not converged)" }
        );
        for m in [10, 20, 40, 60, 100, 200] {
            let p = MmseSolver::new(&dc, m, n0)?.performance(DelayChoice::Auto)?;
            println!("  M = {m:4}: {:7.3} dB, {:+.3} dB from the limit", to_db(p.harmonic_snr), to_db(p.harmonic_snr) - bound);
        }
    }
    Ok(())
}
