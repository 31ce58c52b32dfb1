//! Monte Carlo check of the closed form: a supervised LMS equalizer trained
//! on a simulated waveform against the predicted SNR, on the same channel.
//!
//! `cargo run --release --example lms_validation`

use sdmeq::channel::{compose_path, LinkSpec};
use sdmeq::experiment::{draw_links, realization_channel, reference_link, ScenarioConfig};
use sdmeq::mmse::{DelayChoice, MmseSolver};
use sdmeq::rng::{Purpose, SeedTree};
use sdmeq::simulator::{run_lms, transmit, FrameLayout, McConfig};
use sdmeq::{from_db, to_db};

fn main() -> sdmeq::Result<()> {
    let mut cfg = ScenarioConfig::default();
    cfg.path.links[0] = LinkSpec {
        n_modes: 1,
        sigma_mdl_db: 3.8,
        ..reference_link()
    };
    let n0 = from_db(-10.0);
    let mc = McConfig {
        n_syms: 150_000,
        syms_per_tap: Some(3000),
        ..McConfig::default()
    };
    let pr = compose_path(&cfg.path, &draw_links(&cfg, 0)?)?;
    let dc = realization_channel(&cfg, 0)?;
    let tree = SeedTree::new(cfg.seed);
    let tx = transmit(
        &pr,
        &cfg.signal.pulse()?,
        cfg.signal.s,
        cfg.discretize.receiver_for(cfg.signal.s),
        n0,
        &mc,
        &mut tree.stream(0, Purpose::Symbols),
        &mut tree.stream(0, Purpose::Noise(0)),
    )?;
    println!("   M  theory dB  LMS dB    gap   mu     symbols");
    for m in [20, 40] {
        let p = MmseSolver::new(&dc, m, n0)?.performance(DelayChoice::Auto)?;
        let layout = FrameLayout {
            s: cfg.signal.s,
            taps: m,
            delta: p.delta,
            lead: dc.lead(),
        };
        let res = run_lms(&tx, &layout, &mc)?;
        let (t, l) = (to_db(p.harmonic_snr), to_db(res.harmonic_snr));
        println!(
            "{m:4}  {t:9.3}  {l:6.3}  {:+.3}  {:.3}  {}",
            l - t,
            res.mu_used.unwrap_or(f64::NAN),
            mc.symbols_for(m)
        );
        let traj = &res.mse_trajectory;
        let step = (traj.len() / 6).max(1);
        let shown: Vec<String> = traj.iter().step_by(step).map(|x| format!("{x:.4}")).collect();
        println!("      MSE trajectory: {}", shown.join(" "));
    }
    Ok(())
}
