//! From a frequency response to the fractionally spaced tap sequence the
//! equalizer theory works on.
//!
//! `cargo run --release --example discretize_channel`

use sdmeq::discretize::{discretize, DiscretizeOptions};
use sdmeq::experiment::{draw_links, equalizer_channel, ScenarioConfig};
use sdmeq::linalg::frob2;

fn main() -> sdmeq::Result<()> {
    let mut cfg = ScenarioConfig::default();
    cfg.path.links[0].n_modes = 2;
    let pulse = cfg.signal.pulse()?;
    let pr = sdmeq::channel::compose_path(&cfg.path, &draw_links(&cfg, 0)?)?;
    let h = equalizer_channel(&pr)?;

    for s in [1, 2] {
        for keep in [1.0 - 1e-2, 1.0 - 1e-4, 1.0 - 1e-6] {
            let opts = DiscretizeOptions {
                energy_keep: keep,
                ..cfg.discretize
            };
            let dc = discretize(&h, &pulse, s, &opts)?;
            println!(
                "s={s} keep 1-{:.0e}: nu = {:3}, lead = {:4}, taps {}x{}, energy {:.4}",
                1.0 - keep,
                dc.nu(),
                dc.lead(),
                dc.tap(0).nrows(),
                dc.tap(0).ncols(),
                dc.energy()
            );
        }
    }

    // Where the energy sits along the memory.
    let dc = discretize(&h, &pulse, 2, &cfg.discretize)?;
    let e: Vec<f64> = dc.taps().iter().map(frob2).collect();
    let total: f64 = e.iter().sum();
    let chunk = (e.len() / 10).max(1);
    println!("\nenergy profile over {} symbol taps (s=2):", e.len());
    for (i, c) in e.chunks(chunk).enumerate() {
        let frac = c.iter().sum::<f64>() / total;
        println!("  taps {:3}..{:3} {:6.2}% {}", i * chunk, i * chunk + c.len(), 100.0 * frac, "#".repeat((frac * 100.0) as usize));
    }
    Ok(())
}
