//! Oracles shared by the integration tests. Each one takes a route that does
//! not go through the code it checks.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdmeq::channel::FreqResponse;
use sdmeq::discretize::DiscreteChannel;
use sdmeq::mmse::assemble_block_channel;
use sdmeq::pulse::PulseSpec;
use sdmeq::{CMatrix, C64};

pub fn manifest_path(rel: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

/// Harmonic SNR of the infinite-length MMSE equalizer computed straight from
/// the channel spectrum:
/// `Ree = T * integral over one Nyquist band of (I + S(f) / (N0/2))^-1`,
/// where `S(f)` folds `H^H H` weighted by the raised-cosine spectrum.
/// Channel bins are read by nearest frequency.
pub fn spectral_iir_harmonic_snr(h: &FreqResponse, pulse: &PulseSpec, n0_half: f64) -> f64 {
    let grid = h.grid();
    let d = h.dim();
    let rs = pulse.symbol_rate;
    let mut acc = CMatrix::zeros(d, d);
    let mut count = 0usize;
    for k in 0..grid.n_bins {
        let f = grid.frequency(k);
        if f < -rs / 2.0 || f >= rs / 2.0 {
            continue;
        }
        let mut s = CMatrix::zeros(d, d);
        for shift in -2i32..=2 {
            let ff = f + shift as f64 * rs;
            let rc = pulse.raised_cosine(ff);
            if rc == 0.0 || !grid.covers(ff) {
                continue;
            }
            let hk = h.matrix(grid.nearest_bin(ff));
            s += hk.adjoint() * hk * C64::new(rc, 0.0);
        }
        let m = CMatrix::identity(d, d) + s * C64::new(1.0 / n0_half, 0.0);
        acc += m.try_inverse().expect("positive definite");
        count += 1;
    }
    acc /= C64::new(count as f64, 0.0);
    let inv_sum: f64 = (0..d).map(|i| 1.0 / (1.0 / acc[(i, i)].re - 1.0)).sum();
    d as f64 / inv_sum
}

/// Random discrete channel with i.i.d. complex entries.
pub fn random_channel(rng: &mut ChaCha8Rng, d: usize, s: usize, nu: usize) -> DiscreteChannel {
    let taps = (0..=nu)
        .map(|_| CMatrix::from_fn(d * s, d, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)))
        .collect();
    DiscreteChannel::new(s, 1.0, 0, taps).expect("valid channel")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense Wiener solution in the observation space:
/// `Rxy = Z_Delta P^H`, `Ryy = P P^H + s N0/2 I`, `W = Rxy Ryy^-1`.
/// Returns `(W, Rxy)`.
pub fn dense_wiener(dc: &DiscreteChannel, m: usize, n0_half: f64, delta: usize) -> (CMatrix, CMatrix) {
    let p = assemble_block_channel(dc, m);
    let d = dc.dim();
    let rxy = p.columns(delta * d, d).adjoint();
    let n = p.nrows();
    let ryy = &p * p.adjoint() + CMatrix::identity(n, n) * C64::new(dc.s() as f64 * n0_half, 0.0);
    let inv = ryy.try_inverse().expect("Ryy is positive definite");
    (&rxy * inv, rxy)
}

/// `I - W Rxy^H`, the dual expression of the error covariance.
pub fn dual_ree(w: &CMatrix, rxy: &CMatrix) -> CMatrix {
    CMatrix::identity(w.nrows(), w.nrows()) - w * rxy.adjoint()
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &CMatrix) -> f64 {
    let h = (a + a.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}
