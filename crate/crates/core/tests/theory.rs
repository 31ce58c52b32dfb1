//! Closed-form engine against independent oracles.

mod common;

use common::{dense_wiener, dual_ree, random_channel, rng, spectral_iir_harmonic_snr};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use sdmeq::channel::{haar_unitary, FreqResponse};
use sdmeq::discretize::{discretize, DiscreteChannel};
use sdmeq::experiment::{draw_links, equalizer_channel, ScenarioConfig};
use sdmeq::linalg::max_abs_diff;
use sdmeq::mmse::{iir_limit, DelayChoice, IirOptions, MmseSolver};
use sdmeq::{to_db, CMatrix, C64};

fn scenario(n_modes: usize, mdl: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.path.links[0].n_modes = n_modes;
    cfg.path.links[0].sigma_mdl_db = mdl;
    cfg
}

#[test]
fn long_equalizer_meets_spectral_bound() {
    for (n_modes, mdl) in [(1, 0.7), (1, 3.8), (4, 0.7), (4, 3.8)] {
        let cfg = scenario(n_modes, mdl);
        let pulse = cfg.signal.pulse().unwrap();
        let pr = sdmeq::channel::compose_path(&cfg.path, &draw_links(&cfg, 0).unwrap()).unwrap();
        let h = equalizer_channel(&pr).unwrap();
        let dc = discretize(&h, &pulse, 2, &cfg.discretize).unwrap();
        let iir = iir_limit(&dc, 0.1, &IirOptions::default()).unwrap();
        let oracle = spectral_iir_harmonic_snr(&h, &pulse, 0.1);
        let gap = to_db(iir.harmonic_snr) - to_db(oracle);
        assert!(gap.abs() < 0.05, "N={n_modes} mdl={mdl}: FIR {} vs spectral {}", to_db(iir.harmonic_snr), to_db(oracle));
        let short = MmseSolver::new(&dc, 40, 0.1).unwrap().performance(DelayChoice::Auto).unwrap();
        assert!(short.harmonic_snr <= iir.harmonic_snr * (1.0 + 1e-9));
    }
}

#[test]
fn ideal_channel_error_covariance() {
    let cfg = ScenarioConfig::default();
    let pulse = cfg.signal.pulse().unwrap();
    let grid = cfg.signal.grid().unwrap();
    let dc = discretize(&FreqResponse::identity(grid, 8), &pulse, 2, &cfg.discretize).unwrap();
    let sol = MmseSolver::new(&dc, 20, 0.1).unwrap().solve(DelayChoice::Auto).unwrap();
    let want = CMatrix::identity(8, 8) * C64::new(0.1 / 1.1, 0.0);
    assert!(max_abs_diff(&sol.ree, &want) < 1e-4);
    // The banded route against the full dense inverse of P^H P + s N0/2 I.
    let p = sdmeq::mmse::assemble_block_channel(&dc, 20);
    let n = p.ncols();
    let a = p.adjoint() * &p + CMatrix::identity(n, n) * C64::new(0.2, 0.0);
    let inv = a.try_inverse().unwrap();
    let blk = inv.view((sol.delta * 8, sol.delta * 8), (8, 8)) * C64::new(0.2, 0.0);
    assert!(max_abs_diff(&sol.ree, &blk.into_owned()) < 1e-12);
}

#[test]
fn every_latency_matches_single_solve() {
    let mut g = rng(11);
    for _ in 0..10 {
        let (d, s, nu, m) = (2, g.random_range(1..=2), g.random_range(0..=4), g.random_range(1..=7));
        let dc = random_channel(&mut g, d, s, nu);
        let solver = MmseSolver::new(&dc, m, 0.05).unwrap();
        let all = solver.error_covariance_all_delays();
        assert_eq!(all.len(), m + nu);
        for (delta, ree) in all.iter().enumerate() {
            assert!(max_abs_diff(ree, &solver.error_covariance(delta).unwrap()) < 1e-12);
        }
    }
}

#[test]
fn unitary_mixing_keeps_snr_multiset() {
    let cfg = scenario(2, 3.8);
    let pulse = cfg.signal.pulse().unwrap();
    let pr = sdmeq::channel::compose_path(&cfg.path, &draw_links(&cfg, 1).unwrap()).unwrap();
    let q = haar_unitary(&mut rng(3), 4).unwrap();
    let mixed = FreqResponse::new(*pr.total.grid(), pr.total.matrices().iter().map(|h| &q * h).collect()).unwrap();
    let sorted = |h: &FreqResponse| {
        let dc = discretize(h, &pulse, 2, &cfg.discretize).unwrap();
        let p = MmseSolver::new(&dc, 30, 0.1).unwrap().performance(DelayChoice::Fixed(40)).unwrap();
        let mut v: Vec<f64> = p.snr.iter().map(|&x| to_db(x)).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    for (a, b) in sorted(&pr.total).iter().zip(sorted(&mixed)) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}

fn cgauss(g: &mut impl Rng, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(g);
    let im: f64 = StandardNormal.sample(g);
    C64::new(s * re, s * im)
}

/// Draw `(x_{k-Delta}, Y_k)` pairs of the stacked model with QPSK symbols.
fn samples(dc: &DiscreteChannel, m: usize, n0: f64, delta: usize, n: usize, seed: u64) -> (CMatrix, CMatrix) {
    let p = sdmeq::mmse::assemble_block_channel(dc, m);
    let d = dc.dim();
    let sigma = dc.s() as f64 * n0;
    let mut g = rng(seed);
    let mut xs = CMatrix::zeros(d, n);
    let mut ys = CMatrix::zeros(p.nrows(), n);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for k in 0..n {
        let x = CMatrix::from_fn(p.ncols(), 1, |_, _| {
            C64::new(if g.random::<bool>() { h } else { -h }, if g.random::<bool>() { h } else { -h })
        });
        let noise = CMatrix::from_fn(p.nrows(), 1, |_, _| cgauss(&mut g, sigma));
        ys.set_column(k, &(&p * &x + noise).column(0));
        xs.set_column(k, &x.rows(delta * d, d).column(0));
    }
    (xs, ys)
}

fn empirical_mse(w: &CMatrix, xs: &CMatrix, ys: &CMatrix) -> f64 {
    let e = xs - w * ys;
    e.iter().map(|z| z.norm_sqr()).sum::<f64>() / xs.ncols() as f64
}

#[test]
fn taps_minimize_empirical_mse() {
    // High SNR keeps the sampling noise of the gradient below the curvature
    // of a 1e-3 step.
    let dc = random_channel(&mut rng(21), 2, 2, 1);
    let (m, n0, delta) = (2, 1e-4, 1);
    let w = MmseSolver::new(&dc, m, n0).unwrap().equalizer_taps(delta).unwrap();
    let (xs, ys) = samples(&dc, m, n0, delta, 100_000, 22);
    let base = empirical_mse(&w, &xs, &ys);
    for i in 0..w.nrows() {
        for j in 0..w.ncols() {
            for step in [C64::new(1e-3, 0.0), C64::new(-1e-3, 0.0), C64::new(0.0, 1e-3), C64::new(0.0, -1e-3)] {
                let mut wp = w.clone();
                wp[(i, j)] += step;
                assert!(empirical_mse(&wp, &xs, &ys) > base, "entry ({i},{j}) step {step}");
            }
        }
    }
}

#[test]
fn sample_covariance_taps_converge() {
    let dc = random_channel(&mut rng(31), 2, 2, 1);
    let (m, n0, delta) = (2, 0.1, 1);
    let w = MmseSolver::new(&dc, m, n0).unwrap().equalizer_taps(delta).unwrap();
    let (xs, ys) = samples(&dc, m, n0, delta, 1_000_000, 32);
    let mut errors = Vec::new();
    for n in [10_000usize, 100_000, 1_000_000] {
        let x = xs.columns(0, n);
        let y = ys.columns(0, n);
        let rxy = x * y.adjoint();
        let ryy = y * y.adjoint();
        let w_hat = rxy * ryy.try_inverse().unwrap();
        errors.push(max_abs_diff(&w_hat, &w));
    }
    assert!(errors[2] < 1e-2, "{errors:?}");
    assert!(errors[2] < errors[0], "{errors:?}");
}

#[test]
fn dual_form_on_scenario_channel() {
    let cfg = scenario(1, 0.7);
    let pulse = cfg.signal.pulse().unwrap();
    let pr = sdmeq::channel::compose_path(&cfg.path, &draw_links(&cfg, 0).unwrap()).unwrap();
    let dc = discretize(&pr.total, &pulse, 2, &cfg.discretize).unwrap();
    let m = 12;
    let solver = MmseSolver::new(&dc, m, 0.1).unwrap();
    let (delta, ree) = solver.best_delay().unwrap();
    let (w, rxy) = dense_wiener(&dc, m, 0.1, delta);
    assert!(max_abs_diff(&ree, &dual_ree(&w, &rxy)) < 1e-10);
}

#[test]
fn memory_limit_names_tap_count() {
    let dc = random_channel(&mut rng(1), 8, 2, 50);
    match MmseSolver::with_memory_limit(&dc, 4096, 0.1, 1 << 20) {
        Err(sdmeq::Error::MemoryLimit(msg)) => assert!(msg.contains("M = 4096")),
        other => panic!("{other:?}"),
    }
}
