use super::FreqResponse;
use crate::linalg::hermitian_power;
use crate::{CMatrix, Error, Result, C64};

/// Eigenvalue floor, relative to the largest eigenvalue, used by [`whiten`].
pub const WHITENING_FLOOR: f64 = 1e-12;

/// Tolerance on negative eigenvalues of a noise covariance, relative.
const PSD_TOL: f64 = 1e-9;

/// `Wn(f) = sum_l fraction_l * (N0/2) * D_l(f) D_l(f)^H`.
pub fn noise_covariance(
    downstream: &[FreqResponse],
    fractions: &[f64],
    n0_half: f64,
) -> Result<FreqResponse> {
    let first = downstream
        .first()
        .ok_or_else(|| Error::InvalidSpec("no noise injection points".into()))?;
    if fractions.len() != downstream.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} fractions for {} injection points",
            fractions.len(),
            downstream.len()
        )));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 || fractions.iter().any(|&f| !(f > 0.0)) {
        return Err(Error::InvalidSpec(format!(
            "noise fractions must be positive and sum to 1 (sum {total})"
        )));
    }
    for d in &downstream[1..] {
        first.check_compatible(d)?;
    }
    let n = first.dim();
    let matrices = (0..first.n_bins())
        .map(|bin| {
            let mut acc = CMatrix::zeros(n, n);
            for (d, &frac) in downstream.iter().zip(fractions) {
                let m = d.matrix(bin);
                acc += (m * m.adjoint()) * C64::new(frac * n0_half, 0.0);
            }
            acc
        })
        .collect();
    FreqResponse::new(*first.grid(), matrices)
}

/// True when every bin of `wn` equals `n0_half * I` to within `tol` relative.
pub fn is_white(wn: &FreqResponse, n0_half: f64, tol: f64) -> bool {
    let n = wn.dim();
    let white = CMatrix::identity(n, n) * C64::new(n0_half, 0.0);
    wn.matrices()
        .iter()
        .all(|m| crate::linalg::max_abs_diff(m, &white) <= tol * n0_half)
}

/// `H~(f) = (Wn(f) / (N0/2))^(-1/2) H(f)`: the channel seen through the
/// whitening filter bank, after which the noise is white at level `N0/2`.
pub fn whiten(h: &FreqResponse, wn: &FreqResponse, n0_half: f64) -> Result<FreqResponse> {
    h.check_compatible(wn)?;
    if !(n0_half > 0.0) {
        return Err(Error::Numerical(format!(
            "noise level must be positive to whiten, got {n0_half}"
        )));
    }
    let matrices = h
        .matrices()
        .iter()
        .zip(wn.matrices())
        .map(|(hm, w)| {
            let t = hermitian_power(&(w / C64::new(n0_half, 0.0)), -0.5, WHITENING_FLOOR, PSD_TOL)?;
            Ok(t * hm)
        })
        .collect::<Result<Vec<_>>>()?;
    FreqResponse::new(*h.grid(), matrices)
}

/// The whitening transform itself, per bin.
pub fn whitening_filter(wn: &FreqResponse, n0_half: f64) -> Result<FreqResponse> {
    let ident = FreqResponse::identity(*wn.grid(), wn.dim());
    whiten(&ident, wn, n0_half)
}
