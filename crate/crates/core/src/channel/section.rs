use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{FreqResponse, FrequencyGrid};
use crate::{CMatrix, Error, Result, C64};

/// Statistics of one link: `sections` independent sections of
/// `section_length_km` each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    /// Spatial modes `N`; the channel has `2N` tributaries.
    pub n_modes: usize,
    /// Sections per link (`K`).
    pub sections: usize,
    pub section_length_km: f64,
    /// Standard deviation of the per-section log power gain, dB.
    pub sigma_mdl_db: f64,
    /// Standard deviation of the per-section mode delay, seconds.
    pub sigma_dmd: f64,
}

impl LinkSpec {
    pub fn dim(&self) -> usize {
        2 * self.n_modes
    }

    /// Per-section delay spread from a DMD coefficient in s/sqrt(km).
    pub fn dmd_per_section(coefficient: f64, section_length_km: f64) -> f64 {
        coefficient * section_length_km.sqrt()
    }

    /// MDL standard deviation converted to nepers of power gain.
    pub fn sigma_mdl_nepers(&self) -> f64 {
        self.sigma_mdl_db * std::f64::consts::LN_10 / 10.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_modes == 0 {
            return Err(Error::InvalidSpec("link needs at least one mode".into()));
        }
        if self.sections == 0 {
            return Err(Error::InvalidSpec("link needs at least one section".into()));
        }
        if !(self.sigma_mdl_db >= 0.0) || !self.sigma_mdl_db.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "sigma_mdl_db must be finite and >= 0, got {}",
                self.sigma_mdl_db
            )));
        }
        if !(self.sigma_dmd >= 0.0) || !self.sigma_dmd.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "sigma_dmd must be finite and >= 0, got {}",
                self.sigma_dmd
            )));
        }
        Ok(())
    }
}

/// One section: `M(f) = V diag(exp(g/2 - j 2 pi f tau)) U^H`.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionParams {
    /// Log power gains in nepers, zero-sum.
    pub gains: Vec<f64>,
    /// Mode delays in seconds, zero-sum.
    pub delays: Vec<f64>,
    pub input: CMatrix,
    pub output: CMatrix,
}

impl SectionParams {
    pub fn dim(&self) -> usize {
        self.gains.len()
    }

    /// A section with no coupling: `U = V = I`.
    pub fn diagonal(gains: Vec<f64>, delays: Vec<f64>) -> Self {
        let n = gains.len();
        assert_eq!(delays.len(), n);
        Self {
            gains,
            delays,
            input: CMatrix::identity(n, n),
            output: CMatrix::identity(n, n),
        }
    }

    fn diag_entries(&self, f: f64) -> impl Iterator<Item = C64> + '_ {
        let w = -2.0 * std::f64::consts::PI * f;
        self.gains
            .iter()
            .zip(&self.delays)
            .map(move |(&g, &t)| C64::from_polar((0.5 * g).exp(), w * t))
    }
}

/// Haar-distributed `n x n` unitary: QR of a complex Gaussian matrix with the
/// phases of `diag(R)` pushed into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::InvalidDimension("unitary of size 0".into()));
    }
    let z = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    Ok(q)
}

fn centered_normals<R: Rng + ?Sized>(rng: &mut R, n: usize, sigma: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mean = v.iter().sum::<f64>() / n as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    v
}

/// Draw one section. Consumption order from the stream: gains, delays,
/// input unitary, output unitary.
pub fn draw_section<R: Rng + ?Sized>(rng: &mut R, link: &LinkSpec) -> Result<SectionParams> {
    link.validate()?;
    let n = link.dim();
    let gains = centered_normals(rng, n, link.sigma_mdl_nepers());
    let delays = centered_normals(rng, n, link.sigma_dmd);
    let input = haar_unitary(rng, n)?;
    let output = haar_unitary(rng, n)?;
    Ok(SectionParams {
        gains,
        delays,
        input,
        output,
    })
}

/// Draw the `K` sections of a link, in propagation order.
pub fn draw_link<R: Rng + ?Sized>(rng: &mut R, link: &LinkSpec) -> Result<Vec<SectionParams>> {
    (0..link.sections).map(|_| draw_section(rng, link)).collect()
}

pub fn section_response(sec: &SectionParams, f: f64) -> CMatrix {
    let lam = DVector::from_iterator(sec.dim(), sec.diag_entries(f));
    let mut scaled = sec.output.clone();
    for (j, l) in lam.iter().enumerate() {
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= l;
        }
    }
    scaled * sec.input.adjoint()
}

/// Per-bin product `M_K(f) ... M_1(f)`; the first section is applied first.
pub fn link_response(sections: &[SectionParams], grid: &FrequencyGrid) -> Result<FreqResponse> {
    let first = sections
        .first()
        .ok_or_else(|| Error::InvalidSpec("link without sections".into()))?;
    let n = first.dim();
    if let Some(bad) = sections
        .iter()
        .find(|s| s.dim() != n || s.input.shape() != (n, n) || s.output.shape() != (n, n))
    {
        return Err(Error::DimensionMismatch(format!(
            "section of dimension {} in a {n}-dimensional link",
            bad.dim()
        )));
    }
    let inputs_h: Vec<CMatrix> = sections.iter().map(|s| s.input.adjoint()).collect();
    let mut tmp = CMatrix::zeros(n, n);
    let mut matrices = Vec::with_capacity(grid.n_bins);
    for f in grid.frequencies() {
        let mut acc = CMatrix::identity(n, n);
        for (sec, uh) in sections.iter().zip(&inputs_h) {
            uh.mul_to(&acc, &mut tmp);
            for (i, l) in sec.diag_entries(f).enumerate() {
                for j in 0..n {
                    tmp[(i, j)] *= l;
                }
            }
            sec.output.mul_to(&tmp, &mut acc);
        }
        matrices.push(acc);
    }
    FreqResponse::new(*grid, matrices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frob2, max_abs_diff, unitarity_error};
    use crate::rng::{Purpose, SeedTree};

    fn spec(n_modes: usize, mdl: f64, dmd: f64) -> LinkSpec {
        LinkSpec {
            n_modes,
            sections: 3,
            section_length_km: 10.0,
            sigma_mdl_db: mdl,
            sigma_dmd: dmd,
        }
    }

    #[test]
    fn haar_scalar_has_unit_modulus() {
        let mut rng = SeedTree::new(1).stream(0, Purpose::Other(0));
        let u = haar_unitary(&mut rng, 1).unwrap();
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn haar_is_unitary() {
        let mut rng = SeedTree::new(2).stream(0, Purpose::Other(0));
        for _ in 0..50 {
            let u = haar_unitary(&mut rng, 8).unwrap();
            assert!(unitarity_error(&u) < 1e-12);
        }
    }

    #[test]
    fn haar_rejects_zero_dimension() {
        let mut rng = SeedTree::new(2).stream(0, Purpose::Other(0));
        assert!(matches!(
            haar_unitary(&mut rng, 0),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn zero_variance_section_is_pure_coupling() {
        let mut rng = SeedTree::new(3).stream(0, Purpose::Channel);
        let sec = draw_section(&mut rng, &spec(2, 0.0, 0.0)).unwrap();
        assert!(sec.gains.iter().all(|&g| g == 0.0));
        assert!(sec.delays.iter().all(|&t| t == 0.0));
        let m = section_response(&sec, 7e9);
        assert!(unitarity_error(&m) < 1e-12);
        assert!(max_abs_diff(&m, &(&sec.output * sec.input.adjoint())) < 1e-14);
    }

    #[test]
    fn diagonal_section_example() {
        let sec = SectionParams::diagonal(vec![0.2, -0.2], vec![0.0, 0.0]);
        let m = section_response(&sec, 0.0);
        assert!((m[(0, 0)].re - 0.1f64.exp()).abs() < 1e-15);
        assert!((m[(1, 1)].re - (-0.1f64).exp()).abs() < 1e-15);
        assert!(m[(0, 1)].norm() == 0.0 && m[(1, 0)].norm() == 0.0);
    }

    #[test]
    fn frobenius_norm_matches_gain_sum() {
        let mut rng = SeedTree::new(4).stream(0, Purpose::Channel);
        let sec = draw_section(&mut rng, &spec(4, 3.8, 35e-12)).unwrap();
        let m = section_response(&sec, 5e9);
        let expect: f64 = sec.gains.iter().map(|g| g.exp()).sum();
        assert!((frob2(&m) - expect).abs() < 1e-10 * expect.max(1.0));
    }

    #[test]
    fn dmd_coefficient_conversion() {
        let s = LinkSpec::dmd_per_section(11.1e-12, 10.0);
        assert!((s - 35.1e-12).abs() < 0.05e-12);
    }

    #[test]
    fn single_section_link_matches_section() {
        let mut rng = SeedTree::new(5).stream(0, Purpose::Channel);
        let sec = draw_section(&mut rng, &spec(2, 1.0, 20e-12)).unwrap();
        let grid = FrequencyGrid::centered(60e9, 16).unwrap();
        let h = link_response(std::slice::from_ref(&sec), &grid).unwrap();
        for (i, f) in grid.frequencies().enumerate() {
            assert!(max_abs_diff(h.matrix(i), &section_response(&sec, f)) < 1e-13);
        }
    }

    #[test]
    fn link_applies_first_section_first() {
        let mut rng = SeedTree::new(6).stream(0, Purpose::Channel);
        let a = draw_section(&mut rng, &spec(2, 1.0, 20e-12)).unwrap();
        let b = draw_section(&mut rng, &spec(2, 1.0, 20e-12)).unwrap();
        let grid = FrequencyGrid::centered(60e9, 8).unwrap();
        let h = link_response(&[a.clone(), b.clone()], &grid).unwrap();
        let f = grid.frequency(3);
        let expect = section_response(&b, f) * section_response(&a, f);
        assert!(max_abs_diff(h.matrix(3), &expect) < 1e-13);
    }

    #[test]
    fn link_rejects_mixed_dimensions() {
        let a = SectionParams::diagonal(vec![0.0; 2], vec![0.0; 2]);
        let b = SectionParams::diagonal(vec![0.0; 4], vec![0.0; 4]);
        let grid = FrequencyGrid::centered(1.0, 4).unwrap();
        assert!(matches!(
            link_response(&[a, b], &grid),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
