//! Scenario sweeps and the filter-placement study.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Placement, ScenarioConfig};
use crate::channel::{compose_path, is_white, link_responses, noise_covariance, whiten, FreqResponse, PathResponse};
use crate::discretize::{discretize, DiscreteChannel};
use crate::mmse::{iir_limit, MmseSolver};
use crate::rng::{Purpose, SeedTree};
use crate::simulator::{run_lms, run_static, transmit, FrameLayout, MCResult};
use crate::{to_db, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Theory,
    Lms,
    Static,
    Iir,
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Theory => "theory",
            Engine::Lms => "lms",
            Engine::Static => "static",
            Engine::Iir => "iir",
        }
    }
}

/// One result: an engine evaluated on one realization, tap count and noise
/// level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub realization: u64,
    pub engine: Engine,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub placement: Option<Placement>,
    /// Tap count; for the IIR reference, the largest count evaluated.
    pub m: usize,
    pub n0_half_db: f64,
    pub delta: usize,
    pub snr_db: Vec<f64>,
    pub harmonic_snr_db: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mu: Option<f64>,
    /// Hash of the end-to-end channel response the row was computed on.
    pub channel_checksum: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mse_trajectory: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    /// Record wall times in the rows.
    pub timing: bool,
    /// Keep the LMS MSE trajectories in the rows.
    pub trajectories: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            timing: true,
            trajectories: false,
        }
    }
}

/// Link responses of realization `r`, drawn from its own channel stream.
pub fn draw_links(cfg: &ScenarioConfig, r: u64) -> Result<Vec<FreqResponse>> {
    let grid = cfg.signal.grid()?;
    let sections = cfg
        .path
        .draw_sections(&mut SeedTree::new(cfg.seed).stream(r, Purpose::Channel))?;
    link_responses(&cfg.path, &sections, &grid)
}

/// The channel seen by the equalizer: the path response, followed by the
/// whitening filter when the accumulated noise is colored. The result does
/// not depend on the noise level.
pub fn equalizer_channel(pr: &PathResponse) -> Result<FreqResponse> {
    let wn = noise_covariance(&pr.downstream, &pr.fractions, 1.0)?;
    if is_white(&wn, 1.0, 1e-9) {
        Ok(pr.total.clone())
    } else {
        whiten(&pr.total, &wn, 1.0)
    }
}

/// Discrete channel the theory engine sees for realization `r`.
pub fn realization_channel(cfg: &ScenarioConfig, r: u64) -> Result<DiscreteChannel> {
    Ok(prepare(cfg, &cfg.path, &draw_links(cfg, r)?)?.dc)
}

struct Prepared {
    pr: PathResponse,
    dc: DiscreteChannel,
    checksum: String,
    t_discretize: f64,
}

fn prepare(cfg: &ScenarioConfig, path: &crate::channel::PathSpec, links: &[FreqResponse]) -> Result<Prepared> {
    let pr = compose_path(path, links)?;
    let t0 = Instant::now();
    let h = equalizer_channel(&pr)?;
    let dc = discretize(&h, &cfg.signal.pulse()?, cfg.signal.s, &cfg.discretize)?;
    Ok(Prepared {
        checksum: format!("{:016x}", pr.total.checksum()),
        pr,
        dc,
        t_discretize: t0.elapsed().as_secs_f64(),
    })
}

struct RowBase<'a> {
    cfg: &'a ScenarioConfig,
    r: u64,
    placement: Option<Placement>,
    checksum: &'a str,
    opts: RunOptions,
}

impl RowBase<'_> {
    #[allow(clippy::too_many_arguments)]
    fn row(&self, engine: Engine, m: usize, n0_db: f64, delta: usize, snr: &[f64], harmonic: f64, wall: f64) -> ResultRow {
        ResultRow {
            scenario: self.cfg.name.clone(),
            realization: self.r,
            engine,
            placement: self.placement,
            m,
            n0_half_db: n0_db,
            delta,
            snr_db: snr.iter().map(|&x| to_db(x)).collect(),
            harmonic_snr_db: to_db(harmonic),
            mu: None,
            channel_checksum: self.checksum.to_string(),
            wall_time_s: self.opts.timing.then_some(wall),
            mse_trajectory: None,
        }
    }

    fn mc_row(&self, engine: Engine, m: usize, n0_db: f64, res: MCResult, t_tx: f64) -> ResultRow {
        let mut row = self.row(engine, m, n0_db, res.delta_used, &res.snr_per_mode, res.harmonic_snr, t_tx + res.wall_time);
        row.mu = res.mu_used;
        if self.opts.trajectories {
            row.mse_trajectory = Some(res.mse_trajectory);
        }
        row
    }
}

/// Every enabled engine on realization `r`, rows ordered by engine, then
/// noise level, then tap count.
pub fn run_realization(cfg: &ScenarioConfig, r: u64, opts: RunOptions) -> Result<Vec<ResultRow>> {
    let links = draw_links(cfg, r)?;
    let prep = prepare(cfg, &cfg.path, &links)?;
    let base = RowBase {
        cfg,
        r,
        placement: None,
        checksum: &prep.checksum,
        opts,
    };
    let engines = cfg.engines;
    let pulse = cfg.signal.pulse()?;
    let s = cfg.signal.s;
    let tree = SeedTree::new(cfg.seed);
    let mut rows = Vec::new();
    for (j, (&n0, &n0_db)) in cfg.n0_half().iter().zip(&cfg.n0_half_db).enumerate() {
        let tx = if engines.needs_simulation() {
            let t0 = Instant::now();
            let tx = transmit(
                &prep.pr,
                &pulse,
                s,
                cfg.discretize.receiver_for(s),
                n0,
                &cfg.mc,
                &mut tree.stream(r, Purpose::Symbols),
                &mut tree.stream(r, Purpose::Noise(j as u32)),
            )?;
            Some((tx, t0.elapsed().as_secs_f64()))
        } else {
            None
        };
        for &m in &cfg.equalizer.taps {
            let t0 = Instant::now();
            let solver = MmseSolver::new(&prep.dc, m, n0)?;
            let sol = if engines.static_taps {
                let sol = solver.solve(cfg.equalizer.delta)?;
                (sol.snr.clone(), sol.harmonic_snr, sol.delta, Some(sol.taps))
            } else {
                let p = solver.performance(cfg.equalizer.delta)?;
                (p.snr, p.harmonic_snr, p.delta, None)
            };
            let t_theory = prep.t_discretize + t0.elapsed().as_secs_f64();
            let (snr, harmonic, delta, taps) = sol;
            if engines.theory {
                rows.push(base.row(Engine::Theory, m, n0_db, delta, &snr, harmonic, t_theory));
            }
            if let Some((tx, t_tx)) = &tx {
                let layout = FrameLayout {
                    s,
                    taps: m,
                    delta,
                    lead: prep.dc.lead(),
                };
                if engines.lms {
                    let res = run_lms(tx, &layout, &cfg.mc)?;
                    rows.push(base.mc_row(Engine::Lms, m, n0_db, res, *t_tx));
                }
                if let Some(w) = &taps {
                    let res = run_static(tx, w, &layout, &cfg.mc)?;
                    rows.push(base.mc_row(Engine::Static, m, n0_db, res, *t_tx));
                }
            }
        }
        if engines.iir {
            let t0 = Instant::now();
            let iir = iir_limit(&prep.dc, n0, &cfg.iir)?;
            let wall = prep.t_discretize + t0.elapsed().as_secs_f64();
            rows.push(base.row(Engine::Iir, iir.taps, n0_db, iir.delta, &[], iir.harmonic_snr, wall));
        }
    }
    rows.sort_by_key(|row| row.engine);
    Ok(rows)
}

/// All realizations of a scenario, dispatched in parallel and merged in
/// realization order.
pub fn run_scenario(cfg: &ScenarioConfig, opts: RunOptions) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let per: Vec<Result<Vec<ResultRow>>> = (0..cfg.realizations as u64)
        .into_par_iter()
        .map(|r| run_realization(cfg, r, opts))
        .collect();
    let mut rows = Vec::new();
    for p in per {
        rows.extend(p?);
    }
    Ok(rows)
}

/// Theory (and, if enabled, IIR) harmonic SNR of one fixed realization under
/// every filter placement, swept over the study's noise levels. Rows are
/// ordered by placement, then noise level, then tap count.
pub fn run_filter_study(cfg: &ScenarioConfig, opts: RunOptions) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let study = &cfg.filter_study;
    let r = study.realization;
    let links = draw_links(cfg, r)?;
    let per: Vec<Result<Vec<ResultRow>>> = study
        .placements
        .par_iter()
        .map(|&placement| {
            let path = placement.apply(&cfg.path, study.filter);
            let prep = prepare(cfg, &path, &links)?;
            let base = RowBase {
                cfg,
                r,
                placement: Some(placement),
                checksum: &prep.checksum,
                opts,
            };
            let mut rows = Vec::new();
            for &n0_db in &study.n0_half_db {
                let n0 = crate::from_db(n0_db);
                for &m in &cfg.equalizer.taps {
                    let t0 = Instant::now();
                    let p = MmseSolver::new(&prep.dc, m, n0)?.performance(cfg.equalizer.delta)?;
                    let wall = prep.t_discretize + t0.elapsed().as_secs_f64();
                    rows.push(base.row(Engine::Theory, m, n0_db, p.delta, &p.snr, p.harmonic_snr, wall));
                }
                if cfg.engines.iir {
                    let t0 = Instant::now();
                    let iir = iir_limit(&prep.dc, n0, &cfg.iir)?;
                    let wall = prep.t_discretize + t0.elapsed().as_secs_f64();
                    rows.push(base.row(Engine::Iir, iir.taps, n0_db, iir.delta, &[], iir.harmonic_snr, wall));
                }
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for p in per {
        rows.extend(p?);
    }
    Ok(rows)
}
