use serde::{Deserialize, Serialize};

use crate::{CMatrix, Error, Result};

/// Uniform frequency grid `f_i = start + i * step`, `i = 0..n_bins`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub start: f64,
    pub step: f64,
    pub n_bins: usize,
}

impl FrequencyGrid {
    pub fn new(start: f64, step: f64, n_bins: usize) -> Result<Self> {
        if n_bins < 2 {
            return Err(Error::InvalidSpec(format!(
                "a frequency grid needs at least 2 bins, got {n_bins}"
            )));
        }
        if !(step > 0.0) || !start.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "invalid grid start {start} / step {step}"
            )));
        }
        Ok(Self {
            start,
            step,
            n_bins,
        })
    }

    /// `n_bins` bins covering `[-span/2, span/2)`; bin `n_bins/2` sits at DC.
    pub fn centered(span: f64, n_bins: usize) -> Result<Self> {
        Self::new(-span / 2.0, span / n_bins as f64, n_bins)
    }

    pub fn frequency(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_bins).map(|i| self.frequency(i))
    }

    /// Width covered when every bin is taken to represent `step` Hz.
    pub fn span(&self) -> f64 {
        self.step * self.n_bins as f64
    }

    pub fn last(&self) -> f64 {
        self.frequency(self.n_bins - 1)
    }

    /// True when `f` lies within half a bin of the grid.
    pub fn covers(&self, f: f64) -> bool {
        let tol = 1e-9 * self.step;
        f >= self.start - 0.5 * self.step - tol && f <= self.last() + 0.5 * self.step + tol
    }

    /// Nearest bin, clamped to the grid edges.
    pub fn nearest_bin(&self, f: f64) -> usize {
        let x = ((f - self.start) / self.step).round();
        if x <= 0.0 {
            0
        } else {
            (x as usize).min(self.n_bins - 1)
        }
    }

    /// True when the grid is the FFT grid of a sampling rate equal to its span:
    /// even bin count and bin `n/2` at DC.
    pub fn is_fft_aligned(&self) -> bool {
        self.n_bins.is_multiple_of(2)
            && (self.start + self.span() / 2.0).abs() <= 1e-9 * self.step
    }
}

/// A `dim x dim` complex matrix sampled on every bin of a [`FrequencyGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct FreqResponse {
    grid: FrequencyGrid,
    dim: usize,
    matrices: Vec<CMatrix>,
}

impl FreqResponse {
    pub fn new(grid: FrequencyGrid, matrices: Vec<CMatrix>) -> Result<Self> {
        if matrices.len() != grid.n_bins {
            return Err(Error::DimensionMismatch(format!(
                "{} matrices for a {}-bin grid",
                matrices.len(),
                grid.n_bins
            )));
        }
        let dim = matrices[0].nrows();
        if dim == 0 {
            return Err(Error::InvalidDimension("empty response matrix".into()));
        }
        if let Some(bad) = matrices.iter().find(|m| m.shape() != (dim, dim)) {
            return Err(Error::DimensionMismatch(format!(
                "expected {dim}x{dim} matrices, found {}x{}",
                bad.nrows(),
                bad.ncols()
            )));
        }
        Ok(Self {
            grid,
            dim,
            matrices,
        })
    }

    pub fn from_fn(grid: FrequencyGrid, dim: usize, mut f: impl FnMut(f64) -> CMatrix) -> Result<Self> {
        let matrices = grid.frequencies().map(&mut f).collect();
        Self::new(grid, matrices).and_then(|r| {
            if r.dim != dim {
                Err(Error::DimensionMismatch(format!(
                    "generator produced {}x{} matrices, expected {dim}x{dim}",
                    r.dim, r.dim
                )))
            } else {
                Ok(r)
            }
        })
    }

    pub fn identity(grid: FrequencyGrid, dim: usize) -> Self {
        Self {
            grid,
            dim,
            matrices: vec![CMatrix::identity(dim, dim); grid.n_bins],
        }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_bins(&self) -> usize {
        self.grid.n_bins
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    pub fn matrix(&self, bin: usize) -> &CMatrix {
        &self.matrices[bin]
    }

    pub fn into_matrices(self) -> Vec<CMatrix> {
        self.matrices
    }

    /// Response of the cascade "`self` then `next`", i.e. `next(f) * self(f)`.
    pub fn then(&self, next: &FreqResponse) -> Result<FreqResponse> {
        self.check_compatible(next)?;
        let matrices = self
            .matrices
            .iter()
            .zip(&next.matrices)
            .map(|(a, b)| b * a)
            .collect();
        Ok(Self {
            grid: self.grid,
            dim: self.dim,
            matrices,
        })
    }

    /// Multiply every bin by a real scalar gain.
    pub fn scale_bins(&mut self, gains: &[f64]) {
        assert_eq!(gains.len(), self.matrices.len());
        for (m, &g) in self.matrices.iter_mut().zip(gains) {
            *m *= crate::C64::new(g, 0.0);
        }
    }

    /// Mean per-mode power gain `sum_f ||H(f)||_F^2 / (n_bins dim)`.
    pub fn mean_power_gain(&self) -> f64 {
        let total: f64 = self.matrices.iter().map(crate::linalg::frob2).sum();
        total / (self.grid.n_bins * self.dim) as f64
    }

    /// Scale so that [`mean_power_gain`](Self::mean_power_gain) is 1.
    pub fn normalize_power(&mut self) {
        let g = self.mean_power_gain();
        if g > 0.0 {
            let c = crate::C64::new(1.0 / g.sqrt(), 0.0);
            for m in &mut self.matrices {
                *m *= c;
            }
        }
    }

    pub fn check_compatible(&self, other: &FreqResponse) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "responses of dimension {} and {}",
                self.dim, other.dim
            )));
        }
        if self.grid != other.grid {
            return Err(Error::DimensionMismatch(
                "responses sampled on different grids".into(),
            ));
        }
        Ok(())
    }

    /// FNV-1a hash over the grid and every matrix entry (bit patterns).
    /// Used to prove that two engines consumed the same channel draw.
    pub fn checksum(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        let mut eat = |bits: u64| {
            for b in bits.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(PRIME);
            }
        };
        eat(self.grid.start.to_bits());
        eat(self.grid.step.to_bits());
        eat(self.grid.n_bins as u64);
        eat(self.dim as u64);
        for m in &self.matrices {
            // nalgebra storage is column-major; hash in row-major order.
            for i in 0..self.dim {
                for j in 0..self.dim {
                    eat(m[(i, j)].re.to_bits());
                    eat(m[(i, j)].im.to_bits());
                }
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_grid_is_fft_aligned() {
        let g = FrequencyGrid::centered(60e9, 1000).unwrap();
        assert!(g.is_fft_aligned());
        assert_eq!(g.nearest_bin(0.0), 500);
        assert!((g.frequency(500)).abs() < 1e-3);
        assert!(g.covers(29.97e9));
        assert!(!g.covers(29.98e9));
        assert!(!g.covers(31e9));
    }

    #[test]
    fn grid_needs_two_bins() {
        assert!(FrequencyGrid::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn checksum_tracks_content() {
        let g = FrequencyGrid::centered(1.0, 4).unwrap();
        let a = FreqResponse::identity(g, 2);
        let mut b = a.clone();
        assert_eq!(a.checksum(), b.checksum());
        b.scale_bins(&[1.0, 1.0, 1.0, 0.5]);
        assert_ne!(a.checksum(), b.checksum());
    }
}
