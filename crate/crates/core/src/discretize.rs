//! From a (whitened) frequency response to the fractionally spaced matrix tap
//! sequence `P_0 .. P_nu` seen by the equalizer.
//!
//! The end-to-end response `G_rx(f) H(f) G_tx(f)` is sampled on an FFT grid
//! whose span is an integer multiple `L` of the equalizer sampling rate
//! `s/T`. An inverse FFT gives the impulse response at spacing `T/(L s)`;
//! keeping every `L`-th sample gives it at `T/s`. The circular response is
//! rotated so its energy sits mid-period, cut to the shortest symbol-aligned
//! window holding the requested energy, and scaled by one global factor that
//! makes the back-to-back Gram `sum_m P_m^H P_m` equal `s I`.

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::channel::{FreqResponse, FrequencyGrid};
use crate::pulse::{PulseSpec, ReceiverFilter};
use crate::{CMatrix, Error, Result, C64};

/// Smallest FFT used when the channel grid has to be resampled.
pub const MIN_FFT: usize = 4096;

/// Fold factor `L`: the smallest integer with `L s / T` at least the
/// occupied bandwidth, so the analysis grid never aliases the signal.
pub fn fold_factor(pulse: &PulseSpec, s: usize) -> usize {
    let need = (1.0 + pulse.rolloff) / s as f64;
    (need - 1e-12).ceil().max(1.0) as usize
}

/// Channel grid that can be used directly as the analysis FFT grid.
pub fn native_grid(pulse: &PulseSpec, s: usize, n_bins: usize) -> Result<FrequencyGrid> {
    let rate = (fold_factor(pulse, s) * s) as f64 * pulse.symbol_rate;
    FrequencyGrid::centered(rate, n_bins)
}

fn analysis_grid(hw: &FrequencyGrid, rate: f64) -> Result<FrequencyGrid> {
    if hw.is_fft_aligned() && (hw.span() - rate).abs() <= 1e-9 * rate {
        return Ok(*hw);
    }
    let n = (2 * hw.n_bins).max(MIN_FFT).next_power_of_two();
    FrequencyGrid::centered(rate, n)
}

/// `G_rx(f) Hw(f) G_tx(f)` on the analysis FFT grid.
///
/// When `hw` already sits on an FFT grid spanning `L s / T` it is used bin
/// for bin; otherwise every FFT bin takes the matrix of the nearest channel
/// bin (replication), and the channel grid must cover the pulse band.
pub fn end_to_end_response(
    hw: &FreqResponse,
    pulse: &PulseSpec,
    s: usize,
    receiver: ReceiverFilter,
) -> Result<FreqResponse> {
    pulse.validate()?;
    if s == 0 {
        return Err(Error::InvalidDimension("oversampling factor 0".into()));
    }
    let rate = (fold_factor(pulse, s) * s) as f64 * pulse.symbol_rate;
    let grid = analysis_grid(hw.grid(), rate)?;
    let same = grid == *hw.grid();
    let d = hw.dim();
    let zero = CMatrix::zeros(d, d);
    let matrices = grid
        .frequencies()
        .enumerate()
        .map(|(k, f)| {
            let g = pulse.rrc(f) * receiver.response(pulse, s, f);
            if g == 0.0 {
                return Ok(zero.clone());
            }
            let h = if same {
                hw.matrix(k)
            } else {
                if !hw.grid().covers(f) {
                    return Err(Error::GridCoverage(format!(
                        "{f:.4e} Hz (channel grid {:.4e} .. {:.4e} Hz)",
                        hw.grid().start,
                        hw.grid().last()
                    )));
                }
                hw.matrix(hw.grid().nearest_bin(f))
            };
            Ok(h * C64::new(g, 0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    FreqResponse::new(grid, matrices)
}

/// Circular impulse response at spacing `T/s`.
#[derive(Clone, Debug)]
pub struct RawTaps {
    pub s: usize,
    pub symbol_period: f64,
    /// Sample `n` is the response at time `n T / s`, modulo the period.
    pub samples: Vec<CMatrix>,
}

impl RawTaps {
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(crate::linalg::frob2).sum()
    }
}

/// Inverse FFT of every entry of an end-to-end response, decimated to `s`
/// samples per symbol.
pub fn impulse_response(e: &FreqResponse, s: usize, symbol_period: f64) -> Result<RawTaps> {
    let grid = e.grid();
    if !grid.is_fft_aligned() {
        return Err(Error::InvalidSpec(
            "impulse response needs a centered FFT grid".into(),
        ));
    }
    let ls = grid.span() * symbol_period;
    let fold = (ls / s as f64).round() as usize;
    if fold == 0 || ((fold * s) as f64 - ls).abs() > 1e-6 * ls {
        return Err(Error::InvalidSpec(format!(
            "grid span {:.4e} Hz is not a multiple of s/T",
            grid.span()
        )));
    }
    let n = grid.n_bins;
    if !n.is_multiple_of(fold) {
        return Err(Error::InvalidSpec(format!(
            "{n} FFT bins cannot be decimated by {fold}"
        )));
    }
    let d = e.dim();
    let ifft = FftPlanner::new().plan_fft_inverse(n);
    let n_out = n / fold;
    let mut samples = vec![CMatrix::zeros(d, d); n_out];
    let mut buf = vec![C64::new(0.0, 0.0); n];
    let half = n / 2;
    let norm = 1.0 / n as f64;
    for i in 0..d {
        for j in 0..d {
            // Centered bin k holds frequency (k - n/2) * step.
            for (k, m) in e.matrices().iter().enumerate() {
                buf[(k + half) % n] = m[(i, j)];
            }
            ifft.process(&mut buf);
            for (t, out) in samples.iter_mut().enumerate() {
                out[(i, j)] = buf[t * fold] * norm;
            }
        }
    }
    Ok(RawTaps {
        s,
        symbol_period,
        samples,
    })
}

/// Finite-memory fractionally spaced channel
/// `y_k = sum_{m=0}^{nu} P_m x_{k - lead - m} + noise`, where `y_k` stacks the
/// samples at times `(k s + p) T / s`, `p = 0..s`, as rows `p * d + i`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteChannel {
    s: usize,
    symbol_period: f64,
    lead: i64,
    dim: usize,
    taps: Vec<CMatrix>,
}

impl DiscreteChannel {
    pub fn new(s: usize, symbol_period: f64, lead: i64, taps: Vec<CMatrix>) -> Result<Self> {
        let first = taps
            .first()
            .ok_or_else(|| Error::InvalidDimension("channel without taps".into()))?;
        if s == 0 {
            return Err(Error::InvalidDimension("oversampling factor 0".into()));
        }
        let dim = first.ncols();
        if dim == 0 || first.nrows() != dim * s {
            return Err(Error::DimensionMismatch(format!(
                "tap of size {}x{} for s = {s}",
                first.nrows(),
                first.ncols()
            )));
        }
        if taps.iter().any(|t| t.shape() != (dim * s, dim)) {
            return Err(Error::DimensionMismatch("taps of unequal size".into()));
        }
        Ok(Self {
            s,
            symbol_period,
            lead,
            dim,
            taps,
        })
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn symbol_period(&self) -> f64 {
        self.symbol_period
    }

    /// Symbol offset of `P_0`.
    pub fn lead(&self) -> i64 {
        self.lead
    }

    /// Number of tributaries `2N`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Channel memory `nu` in symbols.
    pub fn nu(&self) -> usize {
        self.taps.len() - 1
    }

    pub fn taps(&self) -> &[CMatrix] {
        &self.taps
    }

    pub fn tap(&self, m: usize) -> &CMatrix {
        &self.taps[m]
    }

    /// `sum_m P_m^H P_m`.
    pub fn gram(&self) -> CMatrix {
        let mut g = CMatrix::zeros(self.dim, self.dim);
        for p in &self.taps {
            g += p.adjoint() * p;
        }
        g
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(crate::linalg::frob2).sum()
    }

    pub fn scaled(mut self, c: f64) -> Self {
        for t in &mut self.taps {
            *t *= C64::new(c, 0.0);
        }
        self
    }

    /// Sample-domain response `h[q]` (a `dim x dim` matrix) at time
    /// `(lead s + q) T / s`.
    pub fn sample(&self, q: usize) -> CMatrix {
        let (m, p) = (q / self.s, q % self.s);
        self.taps[m].rows(p * self.dim, self.dim).into_owned()
    }
}

/// Shortest window `[a, b]` of `e` with at least `target` energy.
fn min_window(prefix: &[f64], target: f64) -> (usize, usize) {
    let n = prefix.len() - 1;
    let tol = 1e-13 * prefix[n];
    let mut best = (0, n - 1);
    let mut a = 0;
    for b in 0..n {
        while a < b && prefix[b + 1] - prefix[a + 1] >= target - tol {
            a += 1;
        }
        if prefix[b + 1] - prefix[a] >= target - tol && b - a < best.1 - best.0 {
            best = (a, b);
        }
    }
    best
}

/// Cut the circular response to the shortest symbol-aligned window holding at
/// least `energy_keep` of its energy.
///
/// The response is first rotated (by whole symbols) to put its energy
/// centroid mid-period. Energy in the outer sixteenth of the period on either
/// side above `guard_fraction` of the total means the grid is too coarse for
/// the channel memory and is reported as time aliasing.
pub fn truncate_memory(raw: &RawTaps, energy_keep: f64, guard_fraction: f64) -> Result<DiscreteChannel> {
    if !(energy_keep > 0.9 && energy_keep <= 1.0) {
        return Err(Error::InvalidSpec(format!(
            "energy_keep must lie in (0.9, 1], got {energy_keep}"
        )));
    }
    let s = raw.s;
    let n = raw.samples.len();
    if n < 2 * s || !n.is_multiple_of(s) {
        return Err(Error::InvalidSpec(format!(
            "{n} samples do not form whole symbols at s = {s}"
        )));
    }
    let energy: Vec<f64> = raw.samples.iter().map(crate::linalg::frob2).collect();
    let total: f64 = energy.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Numerical("impulse response has no energy".into()));
    }

    // Circular energy centroid.
    let w = 2.0 * std::f64::consts::PI / n as f64;
    let (cs, sn) = energy.iter().enumerate().fold((0.0, 0.0), |(c, s_), (i, &e)| {
        (c + e * (w * i as f64).cos(), s_ + e * (w * i as f64).sin())
    });
    let centroid = sn.atan2(cs).rem_euclid(2.0 * std::f64::consts::PI) / w;
    let shift_samples = (n as f64 / 2.0 - centroid).round() as i64;
    let shift = shift_samples.div_euclid(s as i64) * s as i64;
    let src = |j: usize| ((j as i64 - shift).rem_euclid(n as i64)) as usize;
    let rotated: Vec<f64> = (0..n).map(|j| energy[src(j)]).collect();

    let guard = n / 16;
    let guard_energy: f64 = rotated[..guard].iter().chain(&rotated[n - guard..]).sum();
    let fraction = guard_energy / total;
    if fraction > guard_fraction {
        return Err(Error::TimeAliasing { fraction });
    }

    let mut prefix = vec![0.0; n + 1];
    for (i, e) in rotated.iter().enumerate() {
        prefix[i + 1] = prefix[i] + e;
    }
    let (a, b) = min_window(&prefix, energy_keep * total);
    let a = a / s * s;
    let blocks = (b + 1 - a).div_ceil(s);
    let limit = n / s / 2;
    if blocks > limit {
        return Err(Error::ChannelTooLong {
            symbols: blocks,
            limit,
        });
    }
    let d = raw.samples[0].nrows();
    let mut taps = vec![CMatrix::zeros(d * s, d); blocks];
    for (m, tap) in taps.iter_mut().enumerate() {
        for p in 0..s {
            let j = a + m * s + p;
            if j < n {
                tap.rows_mut(p * d, d).copy_from(&raw.samples[src(j)]);
            }
        }
    }
    // Rotated index j holds time (j - shift) T / s, modulo the period.
    let period = (n / s) as i64;
    let lead = ((a as i64 - shift) / s as i64 + period / 2).rem_euclid(period) - period / 2;
    DiscreteChannel::new(s, raw.symbol_period, lead, taps)
}

/// Options of [`discretize`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscretizeOptions {
    /// `None` picks [`ReceiverFilter::default_for`].
    pub receiver: Option<ReceiverFilter>,
    pub energy_keep: f64,
    pub guard_fraction: f64,
}

impl Default for DiscretizeOptions {
    fn default() -> Self {
        Self {
            receiver: None,
            energy_keep: 1.0 - 1e-6,
            guard_fraction: 1e-6,
        }
    }
}

impl DiscretizeOptions {
    pub fn receiver_for(&self, s: usize) -> ReceiverFilter {
        self.receiver.unwrap_or_else(|| ReceiverFilter::default_for(s))
    }
}

/// Energy of the sampled back-to-back response of one mode: the Gram of the
/// ideal channel before calibration.
pub fn back_to_back_energy(
    grid: &FrequencyGrid,
    pulse: &PulseSpec,
    s: usize,
    receiver: ReceiverFilter,
) -> Result<f64> {
    let ident = FreqResponse::identity(*grid, 1);
    let e = end_to_end_response(&ident, pulse, s, receiver)?;
    Ok(impulse_response(&e, s, pulse.period())?.energy())
}

/// Full pipeline: end-to-end response, impulse response, truncation and
/// calibration so that the ideal channel has Gram `s I`.
pub fn discretize(
    hw: &FreqResponse,
    pulse: &PulseSpec,
    s: usize,
    opts: &DiscretizeOptions,
) -> Result<DiscreteChannel> {
    let receiver = opts.receiver_for(s);
    let e = end_to_end_response(hw, pulse, s, receiver)?;
    let raw = impulse_response(&e, s, pulse.period())?;
    let dc = truncate_memory(&raw, opts.energy_keep, opts.guard_fraction)?;
    let e0 = back_to_back_energy(hw.grid(), pulse, s, receiver)?;
    Ok(dc.scaled((s as f64 / e0).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn pulse() -> PulseSpec {
        PulseSpec::new(0.1, 30e9).unwrap()
    }

    fn delay_response(grid: FrequencyGrid, dim: usize, tau: f64) -> FreqResponse {
        FreqResponse::from_fn(grid, dim, |f| {
            CMatrix::identity(dim, dim) * C64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * tau)
        })
        .unwrap()
    }

    #[test]
    fn fold_factor_covers_the_band() {
        assert_eq!(fold_factor(&pulse(), 1), 2);
        assert_eq!(fold_factor(&pulse(), 2), 1);
        assert_eq!(fold_factor(&PulseSpec::new(1.0, 1.0).unwrap(), 2), 1);
    }

    #[test]
    fn matched_pair_gives_raised_cosine() {
        let p = pulse();
        let grid = native_grid(&p, 1, 1000).unwrap();
        let e = end_to_end_response(&FreqResponse::identity(grid, 2), &p, 1, ReceiverFilter::MatchedRrc).unwrap();
        assert_eq!(e.grid(), &grid);
        for (k, f) in grid.frequencies().enumerate() {
            assert!((e.matrix(k)[(1, 1)].re - p.raised_cosine(f)).abs() < 1e-15);
            assert_eq!(e.matrix(k)[(0, 1)], C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn coarse_grid_is_replicated() {
        let p = pulse();
        let grid = FrequencyGrid::centered(40e9, 100).unwrap();
        let h = FreqResponse::from_fn(grid, 1, |f| CMatrix::from_element(1, 1, C64::new(f, 0.0))).unwrap();
        let e = end_to_end_response(&h, &p, 2, ReceiverFilter::AntiAlias).unwrap();
        assert_eq!(e.n_bins(), MIN_FFT);
        for (k, f) in e.grid().frequencies().enumerate() {
            let g = p.rrc(f);
            if g > 0.0 {
                let src = grid.frequency(grid.nearest_bin(f));
                assert!((e.matrix(k)[(0, 0)].re - g * src).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let p = pulse();
        let grid = FrequencyGrid::centered(20e9, 100).unwrap();
        let h = FreqResponse::identity(grid, 1);
        assert!(matches!(
            end_to_end_response(&h, &p, 2, ReceiverFilter::AntiAlias),
            Err(Error::GridCoverage(_))
        ));
    }

    #[test]
    fn common_delay_multiplies_by_phase() {
        let p = pulse();
        let grid = native_grid(&p, 2, 1000).unwrap();
        let tau = 13e-12;
        let e0 = end_to_end_response(&FreqResponse::identity(grid, 2), &p, 2, ReceiverFilter::AntiAlias).unwrap();
        let e1 = end_to_end_response(&delay_response(grid, 2, tau), &p, 2, ReceiverFilter::AntiAlias).unwrap();
        for (k, f) in grid.frequencies().enumerate() {
            let ph = C64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * tau);
            assert!(max_abs_diff(e1.matrix(k), &(e0.matrix(k) * ph)) < 1e-14);
        }
    }

    #[test]
    fn nyquist_pulse_has_no_isi() {
        let p = pulse();
        let grid = native_grid(&p, 2, 1000).unwrap();
        let mut e = FreqResponse::identity(grid, 1);
        let rc: Vec<f64> = grid.frequencies().map(|f| p.raised_cosine(f)).collect();
        e.scale_bins(&rc);
        let raw = impulse_response(&e, 2, p.period()).unwrap();
        let peak = raw.samples[0][(0, 0)].norm();
        for m in 1..raw.samples.len() / 2 {
            let v = raw.samples[2 * m][(0, 0)].norm();
            assert!(v < 1e-3 * peak, "symbol offset {m}: {v}");
        }
    }

    #[test]
    fn half_symbol_delay_moves_one_sample() {
        let p = pulse();
        let grid = native_grid(&p, 2, 1000).unwrap();
        let e = end_to_end_response(&delay_response(grid, 1, 0.5 * p.period()), &p, 2, ReceiverFilter::AntiAlias).unwrap();
        let raw = impulse_response(&e, 2, p.period()).unwrap();
        let peak = (0..raw.samples.len())
            .max_by(|&a, &b| raw.samples[a][(0, 0)].norm().total_cmp(&raw.samples[b][(0, 0)].norm()))
            .unwrap();
        assert_eq!(peak, 1);
    }

    #[test]
    fn parseval_holds() {
        let p = pulse();
        let grid = native_grid(&p, 2, 512).unwrap();
        let h = FreqResponse::from_fn(grid, 2, |f| {
            CMatrix::from_fn(2, 2, |i, j| C64::from_polar(1.0 + 0.1 * (i + 2 * j) as f64, f * 1e-11 * (i + j) as f64))
        })
        .unwrap();
        let e = end_to_end_response(&h, &p, 2, ReceiverFilter::AntiAlias).unwrap();
        let raw = impulse_response(&e, 2, p.period()).unwrap();
        let freq: f64 = e.matrices().iter().map(crate::linalg::frob2).sum::<f64>() / e.n_bins() as f64;
        assert!((raw.energy() - freq).abs() < 1e-9 * freq);
    }

    #[test]
    fn back_to_back_is_calibrated() {
        let p = pulse();
        for s in [1usize, 2] {
            let grid = native_grid(&p, s, 1000).unwrap();
            let dc = discretize(&FreqResponse::identity(grid, 2), &p, s, &DiscretizeOptions::default()).unwrap();
            let g = dc.gram();
            let target = CMatrix::identity(2, 2) * C64::new(s as f64, 0.0);
            assert!(max_abs_diff(&g, &target) < 1e-3 * s as f64, "s={s}");
            assert!(dc.nu() < 200);
        }
    }

    #[test]
    fn window_respects_energy_keep() {
        let p = pulse();
        let grid = native_grid(&p, 2, 1000).unwrap();
        let e = end_to_end_response(&FreqResponse::identity(grid, 1), &p, 2, ReceiverFilter::AntiAlias).unwrap();
        let raw = impulse_response(&e, 2, p.period()).unwrap();
        for keep in [0.999, 1.0 - 1e-6] {
            let dc = truncate_memory(&raw, keep, 1e-6).unwrap();
            assert!(dc.energy() >= keep * raw.energy() * (1.0 - 1e-12));
        }
        let loose = truncate_memory(&raw, 0.999, 1e-6).unwrap();
        let tight = truncate_memory(&raw, 1.0 - 1e-6, 1e-6).unwrap();
        assert!(loose.nu() < tight.nu());
        assert!(truncate_memory(&raw, 0.5, 1e-6).is_err());
    }

    #[test]
    fn delay_shifts_lead() {
        let p = pulse();
        let grid = native_grid(&p, 2, 1000).unwrap();
        let opts = DiscretizeOptions::default();
        let a = discretize(&FreqResponse::identity(grid, 1), &p, 2, &opts).unwrap();
        let b = discretize(&delay_response(grid, 1, 3.0 * p.period()), &p, 2, &opts).unwrap();
        assert_eq!(a.nu(), b.nu());
        for (x, y) in a.taps().iter().zip(b.taps()) {
            assert!(max_abs_diff(x, y) < 1e-9);
        }
        assert_eq!(b.lead() - a.lead(), 3);
    }

    #[test]
    fn grid_too_coarse_aliases() {
        // 40 bins over 60 GHz: a 2 ns delay wraps around the 0.67 ns period.
        let p = pulse();
        let grid = native_grid(&p, 2, 40).unwrap();
        let h = FreqResponse::from_fn(grid, 2, |f| {
            let mut m = CMatrix::zeros(2, 2);
            m[(0, 0)] = C64::new(1.0, 0.0);
            m[(1, 1)] = C64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * 0.33e-9);
            m
        })
        .unwrap();
        let r = discretize(&h, &p, 2, &DiscretizeOptions::default());
        assert!(matches!(r, Err(Error::TimeAliasing { .. })), "{r:?}");
    }
}
