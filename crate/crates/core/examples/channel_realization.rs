//! One realization of a strongly coupled SDM link: mode-dependent loss across
//! the band and the colour of the accumulated ASE on a multi-span path.
//!
//! `cargo run --release --example channel_realization`

use std::path::Path;

use sdmeq::channel::{compose_path, is_white, noise_covariance};
use sdmeq::experiment::{draw_links, ScenarioConfig};
use sdmeq::to_db;

fn mdl_db(h: &sdmeq::CMatrix) -> f64 {
    let sv = h.clone().singular_values();
    let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    to_db(hi * hi / (lo * lo))
}

fn main() -> sdmeq::Result<()> {
    let cfg = ScenarioConfig::load(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/lms_n4_high.json")))?;
    let links = draw_links(&cfg, 0)?;
    let pr = compose_path(&cfg.path, &links)?;
    let h = &pr.total;
    println!("{}: {} bins over {:.0} GHz, dimension {}", cfg.name, h.n_bins(), h.grid().span() / 1e9, h.dim());
    println!("mean power gain {:.6}", h.mean_power_gain());
    let mdl: Vec<f64> = h.matrices().iter().map(mdl_db).collect();
    let mean = mdl.iter().sum::<f64>() / mdl.len() as f64;
    let max = mdl.iter().copied().fold(0.0, f64::max);
    println!("MDL across the band: mean {mean:.2} dB, max {max:.2} dB");
    for i in (0..h.n_bins()).step_by(h.n_bins() / 8) {
        println!("  {:+6.1} GHz  {:5.2} dB", h.grid().frequency(i) / 1e9, mdl[i]);
    }

    // Four spans, each amplifier adding its share of the noise: the spans
    // downstream of an injection shape its spectrum.
    let mut multi = cfg.clone();
    multi.path.links = vec![cfg.path.links[0].clone(); 4];
    let pr = compose_path(&multi.path, &draw_links(&multi, 0)?)?;
    let wn = noise_covariance(&pr.downstream, &pr.fractions, 0.1)?;
    println!("\n4-span path, noise white: {}", is_white(&wn, 0.1, 1e-6));
    let mut lossless = multi.clone();
    for l in &mut lossless.path.links {
        l.sigma_mdl_db = 0.0;
    }
    let pr = compose_path(&lossless.path, &draw_links(&lossless, 0)?)?;
    let wn = noise_covariance(&pr.downstream, &pr.fractions, 0.1)?;
    println!("same path without MDL, noise white: {}", is_white(&wn, 0.1, 1e-6));
    Ok(())
}
