//! Transmit and receive waveforms: QPSK symbols, RRC shaping, channel
//! application, AWGN and the receiver front-end.
//!
//! All records are treated as one period of a cyclic signal, so every
//! filtering step is an exact circular convolution and no symbol is lost to
//! edge transients.

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

use crate::channel::FreqResponse;
use crate::pulse::{PulseSpec, ReceiverFilter};
use crate::{CMatrix, Error, Result, C64};

/// `2N` sampled complex baseband streams.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub sample_rate: f64,
    pub symbol_rate: f64,
    /// Highest frequency (Hz, two-sided symmetric) that may carry energy.
    pub bandwidth: f64,
    pub channels: Vec<Vec<C64>>,
}

impl Waveform {
    pub fn new(sample_rate: f64, symbol_rate: f64, bandwidth: f64, channels: Vec<Vec<C64>>) -> Result<Self> {
        let len = channels.first().map_or(0, Vec::len);
        if channels.is_empty() || len == 0 {
            return Err(Error::InvalidDimension("waveform without samples".into()));
        }
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::DimensionMismatch("waveform streams differ in length".into()));
        }
        Ok(Self {
            sample_rate,
            symbol_rate,
            bandwidth,
            channels,
        })
    }

    pub fn dim(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Samples per symbol; an error unless it is an integer.
    pub fn samples_per_symbol(&self) -> Result<usize> {
        let r = self.sample_rate / self.symbol_rate;
        let n = r.round();
        if n < 1.0 || (r - n).abs() > 1e-9 * r {
            return Err(Error::InvalidSpec(format!(
                "sample rate is {r} times the symbol rate, not an integer"
            )));
        }
        Ok(n as usize)
    }

    /// Mean power per sample and stream.
    pub fn mean_power(&self) -> f64 {
        let total: f64 = self.channels.iter().flatten().map(|z| z.norm_sqr()).sum();
        total / (self.dim() * self.len()) as f64
    }
}

/// Frequency of FFT bin `k` of an `n`-point transform at `rate`, in
/// `[-rate/2, rate/2)`.
pub(crate) fn bin_frequency(k: usize, n: usize, rate: f64) -> f64 {
    let k = if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 };
    // Even lengths put the Nyquist bin on the negative side.
    let k = if n.is_multiple_of(2) && k == (n / 2) as f64 { -k } else { k };
    k * rate / n as f64
}

/// Multiply the spectrum of every stream by `gain(f)`.
fn filter_streams(channels: &mut [Vec<C64>], rate: f64, gain: impl Fn(f64) -> f64) {
    let n = channels[0].len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let g: Vec<f64> = (0..n).map(|k| gain(bin_frequency(k, n, rate)) / n as f64).collect();
    for x in channels.iter_mut() {
        fwd.process(x);
        for (z, &gk) in x.iter_mut().zip(&g) {
            *z *= gk;
        }
        inv.process(x);
    }
}

const QPSK_AMPLITUDE: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// I.i.d. uniform QPSK symbols `(+-1 +- j)/sqrt(2)`, one row per stream.
pub fn gen_qpsk<R: Rng + ?Sized>(rng: &mut R, n_syms: usize, n_streams: usize) -> Result<Vec<Vec<C64>>> {
    if n_syms == 0 || n_streams == 0 {
        return Err(Error::InvalidDimension("need at least one symbol and one stream".into()));
    }
    Ok((0..n_streams)
        .map(|_| {
            (0..n_syms)
                .map(|_| {
                    let b: u8 = rng.random_range(0..4);
                    let re = if b & 1 == 0 { QPSK_AMPLITUDE } else { -QPSK_AMPLITUDE };
                    let im = if b & 2 == 0 { QPSK_AMPLITUDE } else { -QPSK_AMPLITUDE };
                    C64::new(re, im)
                })
                .collect()
        })
        .collect())
}

/// Upsample by `s_sim` and shape with the RRC pulse, normalized to unit energy
/// per symbol: `sum |g|^2 / s_sim = 1`.
pub fn rrc_shape(symbols: &[Vec<C64>], pulse: &PulseSpec, s_sim: usize) -> Result<Waveform> {
    pulse.validate()?;
    if (s_sim as f64) < 1.0 + pulse.rolloff || s_sim < 2 {
        return Err(Error::InvalidSpec(format!(
            "{s_sim} samples per symbol alias a pulse with rolloff {}",
            pulse.rolloff
        )));
    }
    let n_syms = symbols.first().map_or(0, Vec::len);
    let n = n_syms * s_sim;
    let rate = s_sim as f64 * pulse.symbol_rate;
    let mut channels: Vec<Vec<C64>> = symbols
        .iter()
        .map(|x| {
            let mut up = vec![C64::new(0.0, 0.0); n];
            for (j, &v) in x.iter().enumerate() {
                up[j * s_sim] = v;
            }
            up
        })
        .collect();
    filter_streams(&mut channels, rate, |f| s_sim as f64 * pulse.rrc(f));
    Waveform::new(rate, pulse.symbol_rate, pulse.band_edge(), channels)
}

/// 1 below `a`, 0 from `b` on, infinitely differentiable in between.
fn smooth_fade(x: f64, a: f64, b: f64) -> f64 {
    if x <= a {
        return 1.0;
    }
    if x >= b {
        return 0.0;
    }
    let t = (x - a) / (b - a);
    let u = (-1.0 / t).exp();
    let v = (-1.0 / (1.0 - t)).exp();
    v / (u + v)
}

/// Fraction of the impulse-response energy that may be cut from the tails
/// of a [`ChannelFir`].
pub const FIR_TRIM: f64 = 1e-24;

/// A MIMO channel as a (non-causal) FIR at a simulation sample rate:
/// `y[t] = sum_l taps[l] x[t - first - l]`.
#[derive(Clone, Debug)]
pub struct ChannelFir {
    sample_rate: f64,
    first: i64,
    taps: Vec<CMatrix>,
}

impl ChannelFir {
    /// Impulse response of `h` at `sample_rate`, exact on `|f| <= passband`.
    ///
    /// The grid must sit on the FFT lattice of `sample_rate` (its step divides
    /// the rate and its bins are integer multiples of the step); the channel
    /// is then the same periodic sequence the theory sees. Beyond `passband`
    /// the response fades smoothly to zero, inside the grid when there is room
    /// and otherwise from the grid edge (edge matrix held) to Nyquist. The
    /// fade keeps the FIR short; nothing that matters lives there.
    pub fn from_response(h: &FreqResponse, sample_rate: f64, passband: f64) -> Result<Self> {
        let grid = *h.grid();
        let ratio = sample_rate / grid.step;
        let n = ratio.round() as usize;
        let offset = grid.start / grid.step;
        if n < 2 || (ratio - n as f64).abs() > 1e-6 * ratio || (offset - offset.round()).abs() > 1e-6 {
            return Err(Error::InvalidSpec(format!(
                "channel grid (start {:.6e}, step {:.6e}) is not on the FFT lattice of {:.6e} Hz",
                grid.start, grid.step, sample_rate
            )));
        }
        let offset = offset.round() as i64;
        let d = h.dim();
        let nyq = 0.5 * sample_rate;
        let fade_for = |edge: f64| {
            if passband < edge {
                (passband, edge + grid.step)
            } else {
                (edge, nyq)
            }
        };
        let (lo_a, lo_b) = fade_for(-grid.start);
        let (hi_a, hi_b) = fade_for(grid.last());
        // Spectrum on the n-point lattice, then one inverse FFT per entry.
        let mut spectrum: Vec<(usize, f64)> = Vec::with_capacity(n);
        for k in 0..n {
            let f = bin_frequency(k, n, sample_rate);
            let idx = ((f / grid.step).round() as i64 - offset).clamp(0, grid.n_bins as i64 - 1);
            let w = if f < 0.0 { smooth_fade(-f, lo_a, lo_b) } else { smooth_fade(f, hi_a, hi_b) };
            spectrum.push((idx as usize, w));
        }
        let inv = FftPlanner::new().plan_fft_inverse(n);
        let mut resp = vec![CMatrix::zeros(d, d); n];
        let mut buf = vec![C64::new(0.0, 0.0); n];
        for i in 0..d {
            for j in 0..d {
                for (z, &(bin, w)) in buf.iter_mut().zip(&spectrum) {
                    *z = h.matrix(bin)[(i, j)] * (w / n as f64);
                }
                inv.process(&mut buf);
                for (r, z) in resp.iter_mut().zip(&buf) {
                    r[(i, j)] = *z;
                }
            }
        }

        // Unwrap around the circular energy centroid, then trim the tails.
        let energy: Vec<f64> = resp.iter().map(crate::linalg::frob2).collect();
        let w = 2.0 * std::f64::consts::PI / n as f64;
        let (c, s) = energy
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(c, s), (t, &e)| (c + e * (w * t as f64).cos(), s + e * (w * t as f64).sin()));
        let center = (s.atan2(c) / w).round() as i64;
        let start = center - n as i64 / 2;
        let pos = |u: usize| (start + u as i64).rem_euclid(n as i64) as usize;
        // Trim the smaller end while the trimmed energy stays within budget.
        let total: f64 = energy.iter().sum();
        let budget = FIR_TRIM * total;
        let (mut lo, mut hi, mut dropped) = (0usize, n - 1, 0.0);
        while lo < hi {
            let (el, eh) = (energy[pos(lo)], energy[pos(hi)]);
            let e = el.min(eh);
            if dropped + e > budget {
                break;
            }
            dropped += e;
            if el <= eh {
                lo += 1;
            } else {
                hi -= 1;
            }
        }
        let best = (lo, hi);
        let taps = (best.0..=best.1).map(|u| resp[pos(u)].clone()).collect();
        Ok(Self {
            sample_rate,
            first: start + best.0 as i64,
            taps,
        })
    }

    pub fn dim(&self) -> usize {
        self.taps[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Delay (samples) of the first tap.
    pub fn first(&self) -> i64 {
        self.first
    }

    pub fn taps(&self) -> &[CMatrix] {
        &self.taps
    }

    /// Circular convolution with the record, by overlap-save.
    pub fn apply(&self, w: &Waveform) -> Result<Waveform> {
        let d = self.dim();
        if w.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "channel has {d} inputs, waveform {} streams",
                w.dim()
            )));
        }
        if (w.sample_rate - self.sample_rate).abs() > 1e-9 * self.sample_rate {
            return Err(Error::InvalidSpec("waveform and channel sample rates differ".into()));
        }
        let nw = w.len();
        let l = self.taps.len();
        let fft_len = (4 * l).max(1024).next_power_of_two();
        let hop = fft_len - l + 1;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(fft_len);
        let inv = planner.plan_fft_inverse(fft_len);

        // Tap spectra, laid out bin-major: hf[k * d * d + i * d + j].
        let mut hf = vec![C64::new(0.0, 0.0); fft_len * d * d];
        let mut buf = vec![C64::new(0.0, 0.0); fft_len];
        for i in 0..d {
            for j in 0..d {
                buf.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
                for (t, tap) in self.taps.iter().enumerate() {
                    buf[t] = tap[(i, j)];
                }
                fwd.process(&mut buf);
                for (k, z) in buf.iter().enumerate() {
                    hf[k * d * d + i * d + j] = *z;
                }
            }
        }

        // z[u] = x[u + t0]: output t needs z[t .. t + l).
        let t0 = -self.first - (l as i64 - 1);
        let mut out = vec![vec![C64::new(0.0, 0.0); nw]; d];
        let mut xb = vec![vec![C64::new(0.0, 0.0); fft_len]; d];
        let mut yb = vec![vec![C64::new(0.0, 0.0); fft_len]; d];
        let norm = 1.0 / fft_len as f64;
        let mut u0 = 0usize;
        while u0 < nw {
            for (x, src) in xb.iter_mut().zip(&w.channels) {
                for (i, z) in x.iter_mut().enumerate() {
                    *z = src[(u0 as i64 + i as i64 + t0).rem_euclid(nw as i64) as usize];
                }
                fwd.process(x);
            }
            for k in 0..fft_len {
                let m = &hf[k * d * d..(k + 1) * d * d];
                for i in 0..d {
                    let mut acc = C64::new(0.0, 0.0);
                    for j in 0..d {
                        acc += m[i * d + j] * xb[j][k];
                    }
                    yb[i][k] = acc * norm;
                }
            }
            let count = hop.min(nw - u0);
            for (y, dst) in yb.iter_mut().zip(out.iter_mut()) {
                inv.process(y);
                dst[u0..u0 + count].copy_from_slice(&y[l - 1..l - 1 + count]);
            }
            u0 += hop;
        }
        Waveform::new(w.sample_rate, w.symbol_rate, w.bandwidth, out)
    }
}

/// Pass `w` through the channel `h`: build its FIR at the waveform rate and
/// convolve circularly.
pub fn apply_channel_freq(w: &Waveform, h: &FreqResponse) -> Result<Waveform> {
    let grid = h.grid();
    if !grid.covers(-w.bandwidth) || !grid.covers(w.bandwidth) {
        return Err(Error::GridCoverage(format!(
            "the waveform band +-{:.4e} Hz (grid {:.4e}..{:.4e} Hz)",
            w.bandwidth,
            grid.start,
            grid.last()
        )));
    }
    ChannelFir::from_response(h, w.sample_rate, w.bandwidth)?.apply(w)
}

/// Circular complex Gaussian noise with variance `n0_half * rate / symbol_rate`
/// per sample: two-sided level `N0/2` relative to unit symbol energy.
pub fn add_awgn<R: Rng + ?Sized>(rng: &mut R, mut w: Waveform, n0_half: f64, symbol_rate: f64) -> Waveform {
    if n0_half > 0.0 {
        let sigma = (0.5 * n0_half * w.sample_rate / symbol_rate).sqrt();
        for x in &mut w.channels {
            for z in x.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *z += C64::new(sigma * re, sigma * im);
            }
        }
    }
    w.bandwidth = 0.5 * w.sample_rate;
    w
}

/// Receiver filter then decimation to `s` samples per symbol, keeping the
/// samples at `t = n T / s`.
pub fn rx_frontend(w: Waveform, pulse: &PulseSpec, s: usize, receiver: ReceiverFilter) -> Result<Waveform> {
    let s_sim = w.samples_per_symbol()?;
    if s == 0 || s_sim % s != 0 {
        return Err(Error::InvalidSpec(format!(
            "cannot decimate {s_sim} to {s} samples per symbol"
        )));
    }
    let step = s_sim / s;
    let (rate, bandwidth) = (w.sample_rate, w.bandwidth);
    let mut channels = w.channels;
    filter_streams(&mut channels, rate, |f| receiver.response(pulse, s, f));
    let channels = channels.into_iter().map(|x| x.into_iter().step_by(step).collect()).collect();
    let band = match receiver {
        ReceiverFilter::MatchedRrc => pulse.band_edge(),
        ReceiverFilter::AntiAlias => 0.5 * s as f64 * pulse.symbol_rate,
    }
    .min(bandwidth);
    Waveform::new(s as f64 * pulse.symbol_rate, pulse.symbol_rate, band, channels)
}
