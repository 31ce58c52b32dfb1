//! Closed-form SNR of finite-length MMSE equalizers: the tap-count penalty,
//! the latency search and per-mode SNRs.
//!
//! `cargo run --release --example theory_snr [export-dir]`
//!
//! With an argument, the M = 60 tap bank is written there as `m60.json` plus
//! `m60.taps.bin`.

use std::path::Path;

use sdmeq::experiment::{realization_channel, ScenarioConfig};
use sdmeq::mmse::{harmonic_snr_of, DelayChoice, MmseSolver};
use sdmeq::{from_db, to_db};

fn main() -> sdmeq::Result<()> {
    let cfg = ScenarioConfig::load(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/lms_n4_high.json")))?;
    let dc = realization_channel(&cfg, 0)?;
    let n0 = from_db(-10.0);
    println!("{}: dimension {}, s = {}, memory {} taps", cfg.name, dc.dim(), dc.s(), dc.nu());

    println!("\n   M  delta  harmonic SNR dB");
    for m in [10, 20, 40, 60, 100, 200] {
        let p = MmseSolver::new(&dc, m, n0)?.performance(DelayChoice::Auto)?;
        println!("{m:4}  {:5}  {:8.3}", p.delta, to_db(p.harmonic_snr));
    }

    // Every latency from one factorization.
    let solver = MmseSolver::new(&dc, 40, n0)?;
    let curve: Vec<f64> = solver
        .error_covariance_all_delays()
        .iter()
        .map(|ree| harmonic_snr_of(ree).map(to_db))
        .collect::<sdmeq::Result<_>>()?;
    let best = curve.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("\nM = 40 over {} latencies:", curve.len());
    for (d, v) in curve.iter().enumerate().step_by(8) {
        println!("  delta {d:3}  {v:8.3} dB {}", "#".repeat(((v - best + 6.0).max(0.0) * 5.0) as usize));
    }

    let sol = MmseSolver::new(&dc, 60, n0)?.solve(DelayChoice::Auto)?;
    let per_mode: Vec<String> = sol.snr.iter().map(|&x| format!("{:.2}", to_db(x))).collect();
    println!("\nM = 60 per-mode SNR dB: {}", per_mode.join(" "));
    if let Some(dir) = std::env::args().nth(1) {
        sdmeq::container::export_solution(Path::new(&dir), "m60", &sol)?;
        println!("wrote {dir}/m60.json and {dir}/m60.taps.bin");
    }
    Ok(())
}
