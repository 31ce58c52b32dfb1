//! Waveform simulator against the closed-form engine.

use sdmeq::channel::compose_path;
use sdmeq::experiment::{draw_links, reference_link, ScenarioConfig};
use sdmeq::mmse::{DelayChoice, MmseSolver};
use sdmeq::rng::{Purpose, SeedTree};
use sdmeq::simulator::{
    add_awgn, run_lms, run_static, rx_frontend, transmit, FrameLayout, McConfig, Transmission, Waveform,
};
use sdmeq::{from_db, to_db, C64};

fn single_mode(mdl: f64, dmd: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.path.links[0] = sdmeq::channel::LinkSpec {
        n_modes: 1,
        sigma_mdl_db: mdl,
        sigma_dmd: dmd,
        ..reference_link()
    };
    cfg
}

fn send(cfg: &ScenarioConfig, mc: &McConfig, n0: f64, seed: u64) -> Transmission {
    let pr = compose_path(&cfg.path, &draw_links(cfg, 0).unwrap()).unwrap();
    let tree = SeedTree::new(seed);
    transmit(
        &pr,
        &cfg.signal.pulse().unwrap(),
        cfg.signal.s,
        cfg.discretize.receiver_for(cfg.signal.s),
        n0,
        mc,
        &mut tree.stream(0, Purpose::Symbols),
        &mut tree.stream(0, Purpose::Noise(0)),
    )
    .unwrap()
}

fn theory(cfg: &ScenarioConfig, m: usize, n0: f64) -> (FrameLayout, sdmeq::mmse::EqualizerSolution) {
    let dc = sdmeq::experiment::realization_channel(cfg, 0).unwrap();
    let sol = MmseSolver::new(&dc, m, n0).unwrap().solve(DelayChoice::Auto).unwrap();
    let layout = FrameLayout {
        s: cfg.signal.s,
        taps: m,
        delta: sol.delta,
        lead: dc.lead(),
    };
    (layout, sol)
}

#[test]
fn lms_run_is_reproducible() {
    let cfg = single_mode(3.8, 35.1e-12);
    let mc = McConfig {
        n_syms: 40_000,
        ..McConfig::default()
    };
    let n0 = from_db(-10.0);
    let (layout, _) = theory(&cfg, 20, n0);
    let a = run_lms(&send(&cfg, &mc, n0, 5), &layout, &mc).unwrap();
    let b = run_lms(&send(&cfg, &mc, n0, 5), &layout, &mc).unwrap();
    assert_eq!(a.snr_per_mode, b.snr_per_mode);
    assert_eq!(a.harmonic_snr, b.harmonic_snr);
    assert_eq!(a.mse_trajectory, b.mse_trajectory);
    assert_eq!(a.mu_used, b.mu_used);
    let c = run_lms(&send(&cfg, &mc, n0, 6), &layout, &mc).unwrap();
    assert_ne!(a.snr_per_mode, c.snr_per_mode);
}

#[test]
fn lms_error_settles() {
    let cfg = single_mode(0.7, 35.1e-12);
    let mc = McConfig {
        n_syms: 60_000,
        ..McConfig::default()
    };
    let n0 = from_db(-10.0);
    let (layout, _) = theory(&cfg, 20, n0);
    let res = run_lms(&send(&cfg, &mc, n0, 2), &layout, &mc).unwrap();
    let t = &res.mse_trajectory;
    assert_eq!(t.len(), 60);
    assert!(t[t.len() - 1] < 0.5 * t[0], "{t:?}");
}

#[test]
fn static_taps_reach_theory() {
    for (mdl, dmd) in [(0.0, 0.0), (0.7, 35.1e-12), (3.8, 35.1e-12)] {
        let cfg = single_mode(mdl, dmd);
        let mc = McConfig {
            n_syms: 100_000,
            discard: 0.0,
            ..McConfig::default()
        };
        let n0 = from_db(-10.0);
        let (layout, sol) = theory(&cfg, 40, n0);
        let res = run_static(&send(&cfg, &mc, n0, 3), &sol.taps, &layout, &mc).unwrap();
        let gap = to_db(res.harmonic_snr) - to_db(sol.harmonic_snr);
        assert!(gap.abs() < 0.1, "mdl {mdl}: MC {} vs theory {}", to_db(res.harmonic_snr), to_db(sol.harmonic_snr));
        assert_eq!(res.mu_used, None);
    }
}

#[test]
fn flat_unitary_link_reaches_matched_filter_bound() {
    let cfg = single_mode(0.0, 0.0);
    let (_, sol) = theory(&cfg, 20, 0.1);
    assert!((to_db(sol.harmonic_snr) - 10.0).abs() < 0.01, "{}", to_db(sol.harmonic_snr));
}

#[test]
fn receiver_noise_has_the_modelled_variance() {
    let cfg = ScenarioConfig::default();
    let pulse = cfg.signal.pulse().unwrap();
    let n0 = 0.05;
    for s in [1, 2] {
        let n = 200_000 * 4;
        let silent = Waveform::new(4.0 * pulse.symbol_rate, pulse.symbol_rate, 0.0, vec![vec![C64::new(0.0, 0.0); n]]).unwrap();
        let noisy = add_awgn(&mut SeedTree::new(1).stream(0, Purpose::Other(s as u32)), silent, n0, pulse.symbol_rate);
        let rx = rx_frontend(noisy, &pulse, s, cfg.discretize.receiver_for(s)).unwrap();
        let x = &rx.channels[0];
        let var = x.iter().map(|z| z.norm_sqr()).sum::<f64>() / x.len() as f64;
        let want = s as f64 * n0;
        assert!((var / want - 1.0).abs() < 0.02, "s={s}: {var} vs {want}");
    }
}
