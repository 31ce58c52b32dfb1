//! Applying the closed-form tap bank to a simulated waveform, without any
//! adaptation.
//!
//! `cargo run --release --example fixed_taps`

use std::path::Path;

use sdmeq::channel::compose_path;
use sdmeq::experiment::{draw_links, realization_channel, ScenarioConfig};
use sdmeq::mmse::MmseSolver;
use sdmeq::rng::{Purpose, SeedTree};
use sdmeq::simulator::{run_static, transmit, FrameLayout};
use sdmeq::to_db;

fn main() -> sdmeq::Result<()> {
    let cfg = ScenarioConfig::load(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/static_taps.json")))?;
    let n0 = cfg.n0_half()[0];
    let tree = SeedTree::new(cfg.seed);
    println!("real    M  theory dB  static dB    gap");
    for r in 0..2 {
        let pr = compose_path(&cfg.path, &draw_links(&cfg, r)?)?;
        let dc = realization_channel(&cfg, r)?;
        let tx = transmit(
            &pr,
            &cfg.signal.pulse()?,
            cfg.signal.s,
            cfg.discretize.receiver_for(cfg.signal.s),
            n0,
            &cfg.mc,
            &mut tree.stream(r, Purpose::Symbols),
            &mut tree.stream(r, Purpose::Noise(0)),
        )?;
        for &m in &cfg.equalizer.taps {
            let sol = MmseSolver::new(&dc, m, n0)?.solve(cfg.equalizer.delta)?;
            let layout = FrameLayout {
                s: cfg.signal.s,
                taps: m,
                delta: sol.delta,
                lead: dc.lead(),
            };
            let res = run_static(&tx, &sol.taps, &layout, &cfg.mc)?;
            let (t, s) = (to_db(sol.harmonic_snr), to_db(res.harmonic_snr));
            println!("{r:4} {m:4}  {t:9.3}  {s:9.3}  {:+.3}", s - t);
        }
    }
    Ok(())
}
