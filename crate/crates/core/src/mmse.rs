//! Finite-length MMSE MIMO equalizer: tap bank, error covariance and SNR.
//!
//! With the received blocks stacked as `Y_k = P [x_k; ...; x_{k-M-nu+1}] + n_k`
//! and noise variance `sigma = s N0/2` per sample, the error covariance at
//! latency `Delta` is `sigma [A^-1]_{Delta,Delta}` with
//! `A = P^H P + sigma I`, a Hermitian block-banded matrix of
//! `M + nu` blocks and block bandwidth `nu`. [`MmseSolver`] assembles `A`
//! directly from the channel taps, factors it once, and reads any or all of
//! its inverse diagonal blocks.

use serde::{Deserialize, Serialize};

use crate::banded::{band_bytes, BandedCholesky, BandedHermitian};
use crate::discretize::DiscreteChannel;
use crate::{CMatrix, Error, Result, C64};

/// How the equalizer latency is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "DelayRepr", into = "DelayRepr")]
pub enum DelayChoice {
    /// Maximize the harmonic SNR over every admissible latency.
    #[default]
    Auto,
    Fixed(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DelayRepr {
    Fixed(usize),
    Name(String),
}

impl TryFrom<DelayRepr> for DelayChoice {
    type Error = String;
    fn try_from(r: DelayRepr) -> std::result::Result<Self, String> {
        match r {
            DelayRepr::Fixed(d) => Ok(DelayChoice::Fixed(d)),
            DelayRepr::Name(s) if s == "auto" => Ok(DelayChoice::Auto),
            DelayRepr::Name(s) => Err(format!("delay must be \"auto\" or an integer, got {s:?}")),
        }
    }
}

impl From<DelayChoice> for DelayRepr {
    fn from(d: DelayChoice) -> Self {
        match d {
            DelayChoice::Auto => DelayRepr::Name("auto".into()),
            DelayChoice::Fixed(v) => DelayRepr::Fixed(v),
        }
    }
}

/// Dense block-Toeplitz channel matrix `P` of size `(2N M s) x (2N (M + nu))`:
/// block row `r` holds `P_0 .. P_nu` from block column `r` on.
pub fn assemble_block_channel(dc: &DiscreteChannel, m: usize) -> CMatrix {
    let d = dc.dim();
    let q = d * dc.s();
    let nb = m + dc.nu();
    let mut p = CMatrix::zeros(q * m, d * nb);
    for r in 0..m {
        for (k, tap) in dc.taps().iter().enumerate() {
            p.view_mut((r * q, (r + k) * d), (q, d)).copy_from(tap);
        }
    }
    p
}

/// `snr_i = 1 / Ree_ii - 1`.
pub fn snr_per_mode(ree: &CMatrix) -> Result<Vec<f64>> {
    (0..ree.nrows())
        .map(|i| {
            let v = ree[(i, i)].re;
            if !(v < 1.0) {
                Err(Error::DegenerateMode { mode: i, variance: v })
            } else if !(v > 0.0) {
                Err(Error::Numerical(format!(
                    "error variance {v:e} of mode {i} is not positive"
                )))
            } else {
                Ok(1.0 / v - 1.0)
            }
        })
        .collect()
}

/// `2N / sum_i 1/snr_i`.
pub fn harmonic_snr(snr: &[f64]) -> Result<f64> {
    if snr.is_empty() {
        return Err(Error::InvalidDimension("no SNR values".into()));
    }
    if let Some(bad) = snr.iter().find(|&&x| !(x > 0.0)) {
        return Err(Error::Numerical(format!(
            "harmonic mean needs positive SNRs, got {bad}"
        )));
    }
    Ok(snr.len() as f64 / snr.iter().map(|x| 1.0 / x).sum::<f64>())
}

/// Harmonic SNR straight from an error covariance.
pub fn harmonic_snr_of(ree: &CMatrix) -> Result<f64> {
    harmonic_snr(&snr_per_mode(ree)?)
}

/// Design and performance of one MMSE equalizer.
#[derive(Clone, Debug)]
pub struct EqualizerSolution {
    /// Tap bank `W`, `2N x 2N M s`, acting on `Y_k`.
    pub taps: CMatrix,
    pub ree: CMatrix,
    pub snr: Vec<f64>,
    pub harmonic_snr: f64,
    pub delta: usize,
    pub m: usize,
    pub s: usize,
}

/// Factored `A = P^H P + s N0/2 I` for one channel and tap count.
#[derive(Clone, Debug)]
pub struct MmseSolver<'a> {
    dc: &'a DiscreteChannel,
    m: usize,
    sigma: f64,
    chol: BandedCholesky,
}

/// Default memory budget for one solver (band factor plus inverse band).
pub const DEFAULT_MEMORY_LIMIT: usize = 3 << 30;

/// Memory held by a solver that also extracts all inverse diagonal blocks.
pub fn solver_bytes(dim: usize, nu: usize, m: usize) -> usize {
    4 * band_bytes(m + nu, dim, nu)
}

/// `sum_{r=0}^{M-1} P_{i-r}^H P_{j-r}` for every block pair with
/// `0 <= i - j <= nu`, through per-lag prefix sums over the tap index.
fn assemble_gram(dc: &DiscreteChannel, m: usize, sigma: f64) -> BandedHermitian {
    let nu = dc.nu();
    let d = dc.dim();
    let nb = m + nu;
    let taps = dc.taps();
    // prefix[l][a] = sum_{a' < a} P_{a'+l}^H P_{a'}
    let prefix: Vec<Vec<CMatrix>> = (0..=nu)
        .map(|l| {
            let mut acc = CMatrix::zeros(d, d);
            let mut out = Vec::with_capacity(nu - l + 2);
            out.push(acc.clone());
            for a in 0..=nu - l {
                acc += taps[a + l].adjoint() * &taps[a];
                out.push(acc.clone());
            }
            out
        })
        .collect();
    let mut band = BandedHermitian::zeros(nb, d, nu);
    for i in 0..nb {
        for j in i.saturating_sub(nu)..=i {
            let l = i - j;
            let lo = (j + 1).saturating_sub(m);
            let hi = j.min(nu - l);
            if lo > hi {
                continue;
            }
            let blk = &prefix[l][hi + 1] - &prefix[l][lo];
            band.add_block(i, j, &blk);
        }
    }
    band.add_diagonal(sigma);
    band
}

impl<'a> MmseSolver<'a> {
    pub fn new(dc: &'a DiscreteChannel, m: usize, n0_half: f64) -> Result<Self> {
        Self::with_memory_limit(dc, m, n0_half, DEFAULT_MEMORY_LIMIT)
    }

    pub fn with_memory_limit(
        dc: &'a DiscreteChannel,
        m: usize,
        n0_half: f64,
        limit: usize,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidDimension("equalizer needs at least one tap".into()));
        }
        if !(n0_half > 0.0) || !n0_half.is_finite() {
            return Err(Error::Numerical(format!(
                "noise level must be positive, got {n0_half}"
            )));
        }
        let need = solver_bytes(dc.dim(), dc.nu(), m);
        if need > limit {
            return Err(Error::MemoryLimit(format!(
                "M = {m} with nu = {} and 2N = {} needs {} MiB (limit {} MiB); use fewer taps",
                dc.nu(),
                dc.dim(),
                need >> 20,
                limit >> 20
            )));
        }
        let sigma = dc.s() as f64 * n0_half;
        let chol = assemble_gram(dc, m, sigma).cholesky()?;
        Ok(Self { dc, m, sigma, chol })
    }

    pub fn taps(&self) -> usize {
        self.m
    }

    /// Number of admissible latencies, `M + nu`.
    pub fn delay_count(&self) -> usize {
        self.m + self.dc.nu()
    }

    fn check_delay(&self, delta: usize) -> Result<()> {
        if delta >= self.delay_count() {
            return Err(Error::InvalidSpec(format!(
                "latency {delta} outside 0..{}",
                self.delay_count()
            )));
        }
        Ok(())
    }

    /// `Ree` at latency `delta`.
    pub fn error_covariance(&self, delta: usize) -> Result<CMatrix> {
        self.check_delay(delta)?;
        Ok(hermitize(self.chol.inverse_diagonal_block(delta) * C64::new(self.sigma, 0.0)))
    }

    /// `Ree` at every latency `0 .. M + nu`.
    pub fn error_covariance_all_delays(&self) -> Vec<CMatrix> {
        self.chol
            .inverse_diagonal_blocks()
            .into_iter()
            .map(|b| hermitize(b * C64::new(self.sigma, 0.0)))
            .collect()
    }

    /// Latency with the largest harmonic SNR, with its error covariance.
    /// Latencies where some mode is degenerate are skipped.
    pub fn best_delay(&self) -> Result<(usize, CMatrix)> {
        let mut best: Option<(usize, f64, CMatrix)> = None;
        for (delta, ree) in self.error_covariance_all_delays().into_iter().enumerate() {
            if let Ok(h) = harmonic_snr_of(&ree) {
                if best.as_ref().is_none_or(|b| h > b.1) {
                    best = Some((delta, h, ree));
                }
            }
        }
        best.map(|(d, _, r)| (d, r)).ok_or(Error::DegenerateMode {
            mode: 0,
            variance: 1.0,
        })
    }

    /// `W = Z_Delta A^-1 P^H`, the tap bank for `Y_k`.
    pub fn equalizer_taps(&self, delta: usize) -> Result<CMatrix> {
        self.check_delay(delta)?;
        let d = self.dc.dim();
        let q = d * self.dc.s();
        let n = self.delay_count() * d;
        let mut x = CMatrix::zeros(n, d);
        for a in 0..d {
            x[(delta * d + a, a)] = C64::new(1.0, 0.0);
        }
        self.chol.solve_in_place(&mut x);
        // W^H = P X, block row r = sum_m P_m X_{r+m}.
        let mut w = CMatrix::zeros(d, q * self.m);
        for r in 0..self.m {
            let mut blk = CMatrix::zeros(q, d);
            for (k, tap) in self.dc.taps().iter().enumerate() {
                blk += tap * x.rows((r + k) * d, d);
            }
            w.columns_mut(r * q, q).copy_from(&blk.adjoint());
        }
        Ok(w)
    }

    pub fn solve(&self, delay: DelayChoice) -> Result<EqualizerSolution> {
        let (delta, ree) = match delay {
            DelayChoice::Auto => self.best_delay()?,
            DelayChoice::Fixed(d) => (d, self.error_covariance(d)?),
        };
        let snr = snr_per_mode(&ree)?;
        let harmonic = harmonic_snr(&snr)?;
        Ok(EqualizerSolution {
            taps: self.equalizer_taps(delta)?,
            ree,
            snr,
            harmonic_snr: harmonic,
            delta,
            m: self.m,
            s: self.dc.s(),
        })
    }

    /// SNR figures only, without forming the tap bank.
    pub fn performance(&self, delay: DelayChoice) -> Result<Performance> {
        let (delta, ree) = match delay {
            DelayChoice::Auto => self.best_delay()?,
            DelayChoice::Fixed(d) => (d, self.error_covariance(d)?),
        };
        let snr = snr_per_mode(&ree)?;
        Ok(Performance {
            harmonic_snr: harmonic_snr(&snr)?,
            snr,
            delta,
            ree,
        })
    }
}

/// Per-mode and harmonic SNR at the chosen latency.
#[derive(Clone, Debug)]
pub struct Performance {
    pub snr: Vec<f64>,
    pub harmonic_snr: f64,
    pub delta: usize,
    pub ree: CMatrix,
}

fn hermitize(a: CMatrix) -> CMatrix {
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Settings of the large-tap-count IIR reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IirOptions {
    pub start_taps: usize,
    /// Stop doubling once consecutive harmonic SNRs differ by less than this.
    pub tolerance_db: f64,
    pub max_taps: usize,
    pub memory_limit: usize,
}

impl Default for IirOptions {
    fn default() -> Self {
        Self {
            start_taps: 1024,
            tolerance_db: 0.02,
            max_taps: 8192,
            memory_limit: DEFAULT_MEMORY_LIMIT,
        }
    }
}

/// Outcome of [`iir_limit`]: the harmonic SNR at the largest tap count tried
/// and the sequence of `(M, harmonic SNR)` visited.
#[derive(Clone, Debug)]
pub struct IirLimit {
    pub harmonic_snr: f64,
    pub taps: usize,
    pub delta: usize,
    pub converged: bool,
    pub history: Vec<(usize, f64)>,
}

/// Harmonic SNR of an MMSE equalizer long enough to act as the IIR bound:
/// start at `start_taps` and double until the change drops below
/// `tolerance_db`.
pub fn iir_limit(dc: &DiscreteChannel, n0_half: f64, opts: &IirOptions) -> Result<IirLimit> {
    let mut m = opts.start_taps.max(1);
    let mut history = Vec::new();
    loop {
        let solver = MmseSolver::with_memory_limit(dc, m, n0_half, opts.memory_limit)?;
        let perf = solver.performance(DelayChoice::Auto)?;
        history.push((m, perf.harmonic_snr));
        let n = history.len();
        let converged = n >= 2
            && (crate::to_db(history[n - 1].1) - crate::to_db(history[n - 2].1)).abs()
                < opts.tolerance_db;
        if converged || 2 * m > opts.max_taps {
            return Ok(IirLimit {
                harmonic_snr: perf.harmonic_snr,
                taps: m,
                delta: perf.delta,
                converged,
                history,
            });
        }
        m *= 2;
    }
}
