//! Wall-clock comparison of the closed-form path against the Monte Carlo
//! simulator on the same realization.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::run::{draw_links, equalizer_channel};
use crate::channel::{compose_path, PathResponse};
use crate::discretize::{discretize, DiscreteChannel};
use crate::mmse::{MmseSolver, Performance};
use crate::rng::{Purpose, SeedTree};
use crate::simulator::{run_lms, transmit, FrameLayout, McConfig};
use crate::{to_db, Error, Result};

/// Median over repetitions of each theory stage, seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub channel: f64,
    pub discretize: f64,
    pub solve: f64,
    /// Median of the per-repetition totals.
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchPoint {
    pub m: usize,
    pub n0_half_db: f64,
    /// Transmitted record length.
    pub n_syms: usize,
    /// Symbols the equalizer adapted over.
    pub n_equalized: usize,
    pub theory: StageTimes,
    /// Median time to simulate and receive the record.
    pub transmit: f64,
    /// Median LMS time for each step of the grid.
    pub lms_per_mu: Vec<f64>,
    /// Transmission plus one LMS run (mean over the grid).
    pub mc_single: f64,
    /// Transmission plus the whole step-size sweep.
    pub mc_sweep: f64,
    pub ratio_single: f64,
    pub ratio_sweep: f64,
    /// Costs scaled linearly to `full_scale_syms` transmitted and equalized
    /// symbols.
    pub full_scale_syms: usize,
    pub full_scale_mc_sweep: f64,
    pub full_scale_ratio_single: f64,
    pub full_scale_ratio_sweep: f64,
    pub theory_harmonic_snr_db: f64,
    pub lms_harmonic_snr_db: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub scenario: String,
    pub repetitions: usize,
    pub points: Vec<BenchPoint>,
    /// Sum of Monte Carlo times over sum of theory times.
    pub aggregate_ratio_single: f64,
    pub aggregate_ratio_sweep: f64,
    pub aggregate_full_scale_ratio_sweep: f64,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median stage times of the closed-form path (channel synthesis,
/// discretization, factorization with the latency search) on realization `r`,
/// with the products of the last repetition.
pub fn time_theory(
    cfg: &ScenarioConfig,
    r: u64,
    m: usize,
    n0_half: f64,
) -> Result<(StageTimes, (PathResponse, DiscreteChannel, Performance))> {
    let pulse = cfg.signal.pulse()?;
    let mut stages = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    let mut last = None;
    for _ in 0..cfg.bench.repetitions.max(1) {
        let t0 = Instant::now();
        let pr = compose_path(&cfg.path, &draw_links(cfg, r)?)?;
        let h = equalizer_channel(&pr)?;
        let t1 = Instant::now();
        let dc = discretize(&h, &pulse, cfg.signal.s, &cfg.discretize)?;
        let t2 = Instant::now();
        let perf = MmseSolver::new(&dc, m, n0_half)?.performance(cfg.equalizer.delta)?;
        let t3 = Instant::now();
        stages[0].push((t1 - t0).as_secs_f64());
        stages[1].push((t2 - t1).as_secs_f64());
        stages[2].push((t3 - t2).as_secs_f64());
        stages[3].push((t3 - t0).as_secs_f64());
        last = Some((pr, dc, perf));
    }
    let times = StageTimes {
        channel: median(&stages[0]),
        discretize: median(&stages[1]),
        solve: median(&stages[2]),
        total: median(&stages[3]),
    };
    Ok((times, last.expect("at least one repetition")))
}

/// Time theory and LMS on realization 0 at the first noise level, once per
/// tap count. Runs are sequential so the timings do not compete for cores.
pub fn bench(cfg: &ScenarioConfig) -> Result<BenchReport> {
    cfg.validate()?;
    if !(cfg.engines.theory && cfg.engines.lms) {
        return Err(Error::config("engines", "bench needs both theory and lms"));
    }
    cfg.mc.validate()?;
    let reps = cfg.bench.repetitions;
    let n0 = cfg.n0_half()[0];
    let n0_db = cfg.n0_half_db[0];
    let pulse = cfg.signal.pulse()?;
    let s = cfg.signal.s;
    let tree = SeedTree::new(cfg.seed);
    let mut points = Vec::new();
    for &m in &cfg.equalizer.taps {
        let (theory_times, (pr, dc, perf)) = time_theory(cfg, 0, m, n0)?;
        let layout = FrameLayout {
            s,
            taps: m,
            delta: perf.delta,
            lead: dc.lead(),
        };
        let mut tx_times = Vec::new();
        let mut lms_times = vec![Vec::new(); cfg.mc.mu_grid.len()];
        let mut best = f64::NEG_INFINITY;
        for _ in 0..reps {
            let t0 = Instant::now();
            let tx = transmit(
                &pr,
                &pulse,
                s,
                cfg.discretize.receiver_for(s),
                n0,
                &cfg.mc,
                &mut tree.stream(0, Purpose::Symbols),
                &mut tree.stream(0, Purpose::Noise(0)),
            )?;
            tx_times.push(t0.elapsed().as_secs_f64());
            for (k, &mu) in cfg.mc.mu_grid.iter().enumerate() {
                let single = McConfig {
                    mu_grid: vec![mu],
                    ..cfg.mc.clone()
                };
                let t = Instant::now();
                match run_lms(&tx, &layout, &single) {
                    Ok(res) => best = best.max(res.harmonic_snr),
                    Err(Error::Divergence { .. }) => {}
                    Err(e) => return Err(e),
                }
                lms_times[k].push(t.elapsed().as_secs_f64());
            }
        }
        let transmit_t = median(&tx_times);
        let lms_per_mu: Vec<f64> = lms_times.iter().map(|t| median(t)).collect();
        let sweep: f64 = lms_per_mu.iter().sum();
        let mc_single = transmit_t + sweep / lms_per_mu.len() as f64;
        let mc_sweep = transmit_t + sweep;
        let full = cfg.bench.full_scale_syms as f64;
        let n_eq = cfg.mc.symbols_for(m);
        let tx_scale = full / cfg.mc.n_syms as f64;
        let lms_scale = full / n_eq as f64;
        let full_single = transmit_t * tx_scale + sweep * lms_scale / lms_per_mu.len() as f64;
        let full_sweep = transmit_t * tx_scale + sweep * lms_scale;
        let t = theory_times.total;
        points.push(BenchPoint {
            m,
            n0_half_db: n0_db,
            n_syms: cfg.mc.n_syms,
            n_equalized: n_eq,
            transmit: transmit_t,
            lms_per_mu,
            mc_single,
            mc_sweep,
            ratio_single: mc_single / t,
            ratio_sweep: mc_sweep / t,
            full_scale_syms: cfg.bench.full_scale_syms,
            full_scale_mc_sweep: full_sweep,
            full_scale_ratio_single: full_single / t,
            full_scale_ratio_sweep: full_sweep / t,
            theory: theory_times,
            theory_harmonic_snr_db: to_db(perf.harmonic_snr),
            lms_harmonic_snr_db: to_db(best.max(0.0)),
        });
    }
    let sum = |f: fn(&BenchPoint) -> f64| points.iter().map(f).sum::<f64>();
    let theory_sum = sum(|p| p.theory.total);
    Ok(BenchReport {
        scenario: cfg.name.clone(),
        repetitions: reps,
        aggregate_ratio_single: sum(|p| p.mc_single) / theory_sum,
        aggregate_ratio_sweep: sum(|p| p.mc_sweep) / theory_sum,
        aggregate_full_scale_ratio_sweep: sum(|p| p.full_scale_mc_sweep) / theory_sum,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn bench_requires_both_engines() {
        let cfg = ScenarioConfig::default();
        assert!(matches!(bench(&cfg), Err(Error::Config { .. })));
    }
}
