//! Monte Carlo runs: transmit a QPSK record through a path, then equalize it
//! with LMS (step-size sweep) or with a fixed tap bank.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::equalizer::{absolute_step, empirical_harmonic_snr, estimate_snr, lms_equalize, static_equalize};
use super::{add_awgn, gen_qpsk, rrc_shape, rx_frontend, ChannelFir, EqualizerRun, FrameLayout, MuSchedule, Waveform};
use crate::channel::{is_white, noise_covariance, whitening_filter, PathResponse};
use crate::pulse::{PulseSpec, ReceiverFilter};
use crate::{CMatrix, Error, Result, C64};

/// Monte Carlo settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McConfig {
    pub n_syms: usize,
    /// Oversampling of the transmit waveform.
    pub s_sim: usize,
    /// Normalized LMS steps: the absolute step is `mu / E||Y_k||^2`.
    pub mu_grid: Vec<f64>,
    pub schedule: MuSchedule,
    /// Equalize only the first `syms_per_tap * M` symbols of the record
    /// (never more than `n_syms`). Adaptation time grows with the tap count,
    /// so one record can serve several tap counts at matched accuracy.
    pub syms_per_tap: Option<usize>,
    /// Fraction of the equalized symbols discarded as convergence transient.
    pub discard: f64,
    /// Symbols per point of the MSE trajectory.
    pub trajectory_block: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_syms: 100_000,
            s_sim: 4,
            mu_grid: vec![0.015, 0.03, 0.06],
            schedule: MuSchedule::Steps {
                at: vec![0.3, 0.5],
                factor: 0.3,
            },
            syms_per_tap: None,
            discard: 0.6,
            trajectory_block: 1000,
        }
    }
}

impl McConfig {
    /// Symbols equalized for a `taps`-tap equalizer.
    pub fn symbols_for(&self, taps: usize) -> usize {
        self.syms_per_tap.map_or(self.n_syms, |k| (k * taps).min(self.n_syms))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_syms == 0 {
            return Err(Error::config("mc.n_syms", "must be positive"));
        }
        if self.s_sim < 2 {
            return Err(Error::config("mc.s_sim", "must be at least 2"));
        }
        if self.mu_grid.is_empty() || self.mu_grid.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::config("mc.mu_grid", "needs at least one positive step"));
        }
        if self.syms_per_tap == Some(0) {
            return Err(Error::config("mc.syms_per_tap", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.discard) {
            return Err(Error::config("mc.discard", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Outcome of one Monte Carlo equalizer run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCResult {
    pub snr_per_mode: Vec<f64>,
    pub harmonic_snr: f64,
    pub mse_trajectory: Vec<f64>,
    /// Normalized step of the retained run; `None` for fixed taps.
    pub mu_used: Option<f64>,
    pub delta_used: usize,
    /// Seconds spent equalizing, over the whole step-size sweep.
    pub wall_time: f64,
}

/// Transmitted symbols and the received record at the equalizer rate.
#[derive(Clone, Debug)]
pub struct Transmission {
    pub symbols: Vec<Vec<C64>>,
    pub rx: Waveform,
}

/// Simulate one record through `path`.
///
/// White ASE (a single injection, or any set of injections whose total
/// covariance is proportional to the identity) is added at the receiver.
/// Otherwise every injection is drawn separately and sent through its
/// downstream response, and the receiver applies the whitening filter to
/// signal plus noise, which is the model the theory whitens.
#[allow(clippy::too_many_arguments)]
pub fn transmit<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    path: &PathResponse,
    pulse: &PulseSpec,
    s: usize,
    receiver: ReceiverFilter,
    n0_half: f64,
    cfg: &McConfig,
    symbol_rng: &mut R1,
    noise_rng: &mut R2,
) -> Result<Transmission> {
    cfg.validate()?;
    let d = path.total.dim();
    let symbols = gen_qpsk(symbol_rng, cfg.n_syms, d)?;
    let tx = rrc_shape(&symbols, pulse, cfg.s_sim)?;
    let (rate, len) = (tx.sample_rate, tx.len());
    let wn = noise_covariance(&path.downstream, &path.fractions, n0_half)?;
    let received = if n0_half == 0.0 || is_white(&wn, n0_half, 1e-9) {
        let y = super::apply_channel_freq(&tx, &path.total)?;
        drop(tx);
        add_awgn(noise_rng, y, n0_half, pulse.symbol_rate)
    } else {
        let f = whitening_filter(&wn, n0_half)?;
        let mut y = super::apply_channel_freq(&tx, &path.total.then(&f)?)?;
        let silent = Waveform::new(rate, tx.symbol_rate, 0.0, vec![vec![C64::new(0.0, 0.0); len]; d])?;
        drop(tx);
        for (down, &frac) in path.downstream.iter().zip(&path.fractions) {
            let n = add_awgn(noise_rng, silent.clone(), n0_half * frac, pulse.symbol_rate);
            let n = ChannelFir::from_response(&down.then(&f)?, rate, f64::INFINITY)?.apply(&n)?;
            for (yc, nc) in y.channels.iter_mut().zip(&n.channels) {
                for (a, b) in yc.iter_mut().zip(nc) {
                    *a += b;
                }
            }
        }
        y.bandwidth = 0.5 * y.sample_rate;
        y
    };
    Ok(Transmission {
        symbols,
        rx: rx_frontend(received, pulse, s, receiver)?,
    })
}

fn summarize(run: &EqualizerRun, discard: f64) -> Result<(Vec<f64>, f64)> {
    let snr = estimate_snr(&run.errors, discard)?;
    let h = empirical_harmonic_snr(&snr);
    Ok((snr, h))
}

struct MuRun {
    mu_norm: f64,
    snr: Vec<f64>,
    harmonic: f64,
    trajectory: Vec<f64>,
}

/// LMS over every normalized step of `cfg.mu_grid` (in parallel), keeping the
/// best harmonic SNR. Steps that diverge are skipped; an error is returned
/// only if all of them do.
pub fn run_lms(tx: &Transmission, layout: &FrameLayout, cfg: &McConfig) -> Result<MCResult> {
    cfg.validate()?;
    let t0 = Instant::now();
    let runs: Vec<Result<MuRun>> = cfg
        .mu_grid
        .par_iter()
        .map(|&mu_norm| {
            let mu = absolute_step(&tx.rx, layout.s, layout.taps, mu_norm)?;
            let run = lms_equalize(
                &tx.rx,
                &tx.symbols,
                layout,
                mu,
                &cfg.schedule,
                cfg.trajectory_block,
                Some(cfg.symbols_for(layout.taps)),
            )?;
            let (snr, h) = summarize(&run, cfg.discard)?;
            Ok(MuRun {
                mu_norm,
                snr,
                harmonic: h,
                trajectory: run.mse_trajectory,
            })
        })
        .collect();
    let mut best: Option<MuRun> = None;
    let mut last_err = None;
    for r in runs {
        match r {
            Ok(v) => {
                if best.as_ref().is_none_or(|b| v.harmonic > b.harmonic) {
                    best = Some(v);
                }
            }
            Err(e @ Error::Divergence { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    let best = best.ok_or_else(|| last_err.unwrap_or(Error::Divergence { mu: f64::NAN }))?;
    Ok(MCResult {
        snr_per_mode: best.snr,
        harmonic_snr: best.harmonic,
        mse_trajectory: best.trajectory,
        mu_used: Some(best.mu_norm),
        delta_used: layout.delta,
        wall_time: t0.elapsed().as_secs_f64(),
    })
}

/// Equalize with the fixed tap bank `w`.
pub fn run_static(tx: &Transmission, w: &CMatrix, layout: &FrameLayout, cfg: &McConfig) -> Result<MCResult> {
    let t0 = Instant::now();
    let run = static_equalize(
        &tx.rx,
        &tx.symbols,
        w,
        layout,
        cfg.trajectory_block,
        Some(cfg.symbols_for(layout.taps)),
    )?;
    let (snr, h) = summarize(&run, cfg.discard)?;
    Ok(MCResult {
        snr_per_mode: snr,
        harmonic_snr: h,
        mse_trajectory: run.mse_trajectory,
        mu_used: None,
        delta_used: layout.delta,
        wall_time: t0.elapsed().as_secs_f64(),
    })
}
