//! Fractionally spaced MIMO equalization of a received record: supervised LMS
//! or a fixed tap bank, plus empirical SNR estimation.

use serde::{Deserialize, Serialize};

use super::Waveform;
use crate::banded::dot;
use crate::{CMatrix, Error, Result, C64};

/// Alignment of received frames and reference symbols.
///
/// Frame `y_k` stacks the samples at `(k s + p) T / s`, rows `p * d + i`,
/// exactly as in [`DiscreteChannel`](crate::discretize::DiscreteChannel); the
/// equalizer output at symbol `k` estimates `x_{k - delta - lead}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameLayout {
    pub s: usize,
    pub taps: usize,
    pub delta: usize,
    pub lead: i64,
}

/// Step-size schedule of the LMS recursion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MuSchedule {
    #[default]
    Constant,
    /// Multiply the step by `factor` each time one of the record fractions
    /// in `at` has elapsed.
    Steps { at: Vec<f64>, factor: f64 },
}

impl MuSchedule {
    fn mu_at(&self, mu: f64, k: usize, n: usize) -> f64 {
        match self {
            MuSchedule::Constant => mu,
            MuSchedule::Steps { at, factor } => {
                let passed = at.iter().filter(|&&a| (k as f64) >= a * n as f64).count();
                mu * factor.powi(passed as i32)
            }
        }
    }
}

/// Divergence threshold on the per-mode MSE.
pub const DIVERGENCE_MSE: f64 = 10.0;
/// Consecutive symbols above [`DIVERGENCE_MSE`] that declare divergence.
pub const DIVERGENCE_RUN: usize = 1000;

/// Outputs and errors of an equalizer pass, one row per tributary.
#[derive(Clone, Debug)]
pub struct EqualizerRun {
    pub outputs: Vec<Vec<C64>>,
    pub errors: Vec<Vec<C64>>,
    /// Tap bank after the pass, laid out like the theory's `W`.
    pub taps: CMatrix,
    /// Mean per-mode squared error over consecutive blocks of symbols.
    pub mse_trajectory: Vec<f64>,
}

/// Received samples regrouped as frames, in split real/imaginary storage with
/// `taps - 1` wrapped frames in front so that the window of symbol `k` is the
/// contiguous slice starting at frame `k`.
struct Frames {
    re: Vec<f64>,
    im: Vec<f64>,
    q: usize,
    width: usize,
}

impl Frames {
    fn new(rx: &Waveform, s: usize, taps: usize) -> Result<(Self, usize)> {
        if rx.samples_per_symbol()? != s {
            return Err(Error::InvalidSpec(format!(
                "received record has {} samples per symbol, equalizer expects {s}",
                rx.samples_per_symbol()?
            )));
        }
        let d = rx.dim();
        let n_syms = rx.len() / s;
        if n_syms * s != rx.len() {
            return Err(Error::InvalidSpec("record is not a whole number of symbols".into()));
        }
        let q = d * s;
        let total = n_syms + taps - 1;
        let mut re = vec![0.0; total * q];
        let mut im = vec![0.0; total * q];
        for f in 0..total {
            // Frame f holds y_k with k = f - (taps - 1), wrapped.
            let k = (f as i64 - (taps as i64 - 1)).rem_euclid(n_syms as i64) as usize;
            for p in 0..s {
                for (i, c) in rx.channels.iter().enumerate() {
                    let z = c[k * s + p];
                    re[f * q + p * d + i] = z.re;
                    im[f * q + p * d + i] = z.im;
                }
            }
        }
        Ok((
            Self {
                re,
                im,
                q,
                width: q * taps,
            },
            n_syms,
        ))
    }

    /// Window for symbol `k`, oldest frame first.
    fn window(&self, k: usize) -> (&[f64], &[f64]) {
        let o = k * self.q;
        (&self.re[o..o + self.width], &self.im[o..o + self.width])
    }

    /// Mean `||Y_k||^2` over the record.
    fn mean_window_energy(&self, n_syms: usize) -> f64 {
        let per_frame: f64 = self.re[(self.width - self.q)..]
            .iter()
            .chain(&self.im[(self.width - self.q)..])
            .map(|x| x * x)
            .sum::<f64>()
            / n_syms as f64;
        per_frame * (self.width / self.q) as f64
    }
}

/// Tap bank in window order (oldest frame first), split storage.
struct WindowTaps {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
    q: usize,
    taps: usize,
}

impl WindowTaps {
    fn from_w(w: &CMatrix, q: usize, taps: usize) -> Self {
        let d = w.nrows();
        let mut re = vec![vec![0.0; q * taps]; d];
        let mut im = vec![vec![0.0; q * taps]; d];
        for i in 0..d {
            for r in 0..taps {
                for c in 0..q {
                    // Block r of W multiplies y_{k-r}, window block taps-1-r.
                    let z = w[(i, r * q + c)];
                    let o = (taps - 1 - r) * q + c;
                    re[i][o] = z.re;
                    im[i][o] = z.im;
                }
            }
        }
        Self { re, im, q, taps }
    }

    fn to_w(&self) -> CMatrix {
        let d = self.re.len();
        let q = self.q;
        CMatrix::from_fn(d, q * self.taps, |i, col| {
            let (r, c) = (col / q, col % q);
            let o = (self.taps - 1 - r) * q + c;
            C64::new(self.re[i][o], self.im[i][o])
        })
    }
}

fn reference_index(k: usize, layout: &FrameLayout, n_syms: usize) -> usize {
    (k as i64 - layout.delta as i64 - layout.lead).rem_euclid(n_syms as i64) as usize
}

fn check_reference(reference: &[Vec<C64>], d: usize, n_syms: usize) -> Result<()> {
    if reference.len() != d || reference.iter().any(|r| r.len() != n_syms) {
        return Err(Error::DimensionMismatch(format!(
            "reference must be {d} streams of {n_syms} symbols"
        )));
    }
    Ok(())
}

/// Initial taps: identity on phase 0 of the middle block.
pub fn center_spike(d: usize, s: usize, taps: usize) -> CMatrix {
    let q = d * s;
    let mut w = CMatrix::zeros(d, q * taps);
    let r = taps / 2;
    for i in 0..d {
        w[(i, r * q + i)] = C64::new(1.0, 0.0);
    }
    w
}

/// Supervised LMS with absolute step `mu`:
/// `W <- W + mu e_k Y_k^H`, `e_k = x_{k - delta - lead} - W Y_k`, starting
/// from [`center_spike`]. `limit` restricts the run to the first symbols of
/// the (cyclic) record.
pub fn lms_equalize(
    rx: &Waveform,
    reference: &[Vec<C64>],
    layout: &FrameLayout,
    mu: f64,
    schedule: &MuSchedule,
    block: usize,
    limit: Option<usize>,
) -> Result<EqualizerRun> {
    let d = rx.dim();
    let (frames, n_syms) = Frames::new(rx, layout.s, layout.taps)?;
    check_reference(reference, d, n_syms)?;
    let n_run = limit.map_or(n_syms, |l| l.min(n_syms));
    if !(mu > 0.0) {
        return Err(Error::InvalidSpec(format!("step size must be positive, got {mu}")));
    }
    let mut w = WindowTaps::from_w(&center_spike(d, layout.s, layout.taps), frames.q, layout.taps);
    let mut outputs = vec![vec![C64::new(0.0, 0.0); n_run]; d];
    let mut errors = vec![vec![C64::new(0.0, 0.0); n_run]; d];
    let mut run = 0usize;
    let mut e = vec![C64::new(0.0, 0.0); d];
    for k in 0..n_run {
        let (yr, yi) = frames.window(k);
        let x = reference_index(k, layout, n_syms);
        let mut sq = 0.0;
        for i in 0..d {
            let (ar, ai) = dot(&w.re[i], &w.im[i], yr, yi);
            let out = C64::new(ar, ai);
            e[i] = reference[i][x] - out;
            outputs[i][k] = out;
            errors[i][k] = e[i];
            sq += e[i].norm_sqr();
        }
        if sq / d as f64 > DIVERGENCE_MSE {
            run += 1;
            if run >= DIVERGENCE_RUN {
                return Err(Error::Divergence { mu });
            }
        } else {
            run = 0;
        }
        let step = schedule.mu_at(mu, k, n_run);
        for (i, ei) in e.iter().enumerate() {
            // w += a conj(y)
            let (a_re, a_im) = (step * ei.re, step * ei.im);
            for ((wr, wi), (&pr, &pi)) in w.re[i].iter_mut().zip(w.im[i].iter_mut()).zip(yr.iter().zip(yi)) {
                *wr += a_re * pr + a_im * pi;
                *wi += a_im * pr - a_re * pi;
            }
        }
    }
    if w.re.iter().flatten().chain(w.im.iter().flatten()).any(|x| !x.is_finite()) {
        return Err(Error::Divergence { mu });
    }
    Ok(EqualizerRun {
        mse_trajectory: mse_trajectory(&errors, block),
        outputs,
        errors,
        taps: w.to_w(),
    })
}

/// Step size that corresponds to a normalized step `mu_norm`, i.e.
/// `mu_norm / E||Y_k||^2`.
pub fn absolute_step(rx: &Waveform, s: usize, taps: usize, mu_norm: f64) -> Result<f64> {
    let (frames, n_syms) = Frames::new(rx, s, taps)?;
    Ok(mu_norm / frames.mean_window_energy(n_syms))
}

/// Apply a fixed tap bank `w` (`2N x 2N M s`), optionally to the first
/// `limit` symbols only.
pub fn static_equalize(
    rx: &Waveform,
    reference: &[Vec<C64>],
    w: &CMatrix,
    layout: &FrameLayout,
    block: usize,
    limit: Option<usize>,
) -> Result<EqualizerRun> {
    let d = rx.dim();
    let q = d * layout.s;
    if w.nrows() != d || w.ncols() != q * layout.taps {
        return Err(Error::DimensionMismatch(format!(
            "tap bank is {}x{}, expected {d}x{}",
            w.nrows(),
            w.ncols(),
            q * layout.taps
        )));
    }
    let (frames, n_syms) = Frames::new(rx, layout.s, layout.taps)?;
    check_reference(reference, d, n_syms)?;
    let n_run = limit.map_or(n_syms, |l| l.min(n_syms));
    let wt = WindowTaps::from_w(w, q, layout.taps);
    let mut outputs = vec![vec![C64::new(0.0, 0.0); n_run]; d];
    let mut errors = vec![vec![C64::new(0.0, 0.0); n_run]; d];
    for i in 0..d {
        for k in 0..n_run {
            let (yr, yi) = frames.window(k);
            let (ar, ai) = dot(&wt.re[i], &wt.im[i], yr, yi);
            let out = C64::new(ar, ai);
            outputs[i][k] = out;
            errors[i][k] = reference[i][reference_index(k, layout, n_syms)] - out;
        }
    }
    Ok(EqualizerRun {
        mse_trajectory: mse_trajectory(&errors, block),
        outputs,
        errors,
        taps: w.clone(),
    })
}

fn mse_trajectory(errors: &[Vec<C64>], block: usize) -> Vec<f64> {
    let n = errors[0].len();
    let block = block.max(1);
    (0..n.div_ceil(block))
        .map(|b| {
            let lo = b * block;
            let hi = (lo + block).min(n);
            let sum: f64 = errors.iter().flat_map(|e| &e[lo..hi]).map(|z| z.norm_sqr()).sum();
            sum / ((hi - lo) * errors.len()) as f64
        })
        .collect()
}

/// Fewest symbols [`estimate_snr`] accepts after the discard.
pub const MIN_RETAINED: usize = 10_000;

/// Per-mode `1/MSE_i - 1` over the last `1 - discard` of the record. A zero
/// error gives `+inf`.
pub fn estimate_snr(errors: &[Vec<C64>], discard: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&discard) {
        return Err(Error::InvalidSpec(format!("discard must lie in [0, 1), got {discard}")));
    }
    let n = errors.first().map_or(0, Vec::len);
    let start = (discard * n as f64).ceil() as usize;
    let kept = n - start.min(n);
    if kept < MIN_RETAINED {
        return Err(Error::TooFewSymbols(format!(
            "{kept} symbols retained, at least {MIN_RETAINED} needed"
        )));
    }
    Ok(errors
        .iter()
        .map(|e| {
            let mse = e[start..].iter().map(|z| z.norm_sqr()).sum::<f64>() / kept as f64;
            if mse == 0.0 {
                f64::INFINITY
            } else {
                1.0 / mse - 1.0
            }
        })
        .collect())
}

/// Harmonic mean that tolerates the edge cases of empirical estimates: any
/// nonpositive entry gives 0, infinite entries drop out.
pub fn empirical_harmonic_snr(snr: &[f64]) -> f64 {
    if snr.iter().any(|&x| !(x > 0.0)) {
        return 0.0;
    }
    let inv: f64 = snr.iter().map(|x| 1.0 / x).sum();
    if inv == 0.0 {
        f64::INFINITY
    } else {
        snr.len() as f64 / inv
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, SeedTree};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn rng(i: u32) -> rand_chacha::ChaCha12Rng {
        SeedTree::new(5).stream(0, Purpose::Other(i))
    }

    #[test]
    fn estimate_snr_edge_cases() {
        let zero = vec![vec![C64::new(0.0, 0.0); 20_000]];
        assert_eq!(estimate_snr(&zero, 0.5).unwrap(), vec![f64::INFINITY]);
        let half = vec![vec![C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0); 20_000]];
        assert!((estimate_snr(&half, 0.5).unwrap()[0] - 1.0).abs() < 1e-12);
        assert!(matches!(estimate_snr(&half, 0.6), Err(Error::TooFewSymbols(_))));
        assert_eq!(empirical_harmonic_snr(&[1.0, 0.0]), 0.0);
        assert!((empirical_harmonic_snr(&[1.0, 1.0 / 3.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn estimate_snr_with_known_variance() {
        let var: f64 = 1.0 / 11.0;
        let n = 200_000;
        let mut r = rng(0);
        let sigma = (0.5 * var).sqrt();
        let e: Vec<C64> = (0..n)
            .map(|_| {
                let a: f64 = r.sample(StandardNormal);
                let b: f64 = r.sample(StandardNormal);
                C64::new(sigma * a, sigma * b)
            })
            .collect();
        let snr = estimate_snr(&[e], 0.5).unwrap()[0];
        // Relative std of the variance estimate is 1/sqrt(kept); SNR error is
        // 1.1 times that in relative terms.
        let tol = 3.0 * (1.0 + 1.0 / 10.0) * 11.0 / ((n / 2) as f64).sqrt();
        assert!((snr - 10.0).abs() < tol, "{snr} vs 10 +- {tol}");
    }

    #[test]
    fn window_taps_round_trip() {
        let mut r = rng(1);
        let w = CMatrix::from_fn(2, 2 * 2 * 3, |_, _| C64::new(r.random(), r.random()));
        let wt = WindowTaps::from_w(&w, 4, 3);
        assert_eq!(wt.to_w(), w);
    }
}
