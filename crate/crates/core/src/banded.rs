//! Block-banded Hermitian positive definite matrices.
//!
//! The matrix has `nb x nb` blocks of size `d x d`, and block `(i, j)` is zero
//! whenever `|i - j| > bw`. Only the lower band is stored, row by row: scalar
//! row `r` of block row `i` keeps the `(bw + 1) d` columns starting at
//! `(i - bw) d` (entries left of column 0 or right of the diagonal are
//! zero padding). Real and imaginary parts live in separate arrays so the
//! inner products vectorize.
//!
//! The Cholesky factor `L` keeps the same band. All diagonal blocks of the
//! inverse come from the Takahashi recurrence
//! `Z = L^-H L^-1`, `Z_ij = delta_ij / L_jj^2 - (1 / L_jj) sum_{k > j} Z_ik L_kj`,
//! which only ever touches entries inside the band.

use crate::{CMatrix, Error, Result, C64};

/// Lower band of a Hermitian matrix in row storage.
#[derive(Clone, Debug)]
pub struct BandedHermitian {
    nb: usize,
    d: usize,
    bw: usize,
    width: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

/// Bytes held by a band of the given shape (one matrix).
pub fn band_bytes(nb: usize, d: usize, bw: usize) -> usize {
    nb * d * (bw + 1) * d * 16
}

impl BandedHermitian {
    pub fn zeros(nb: usize, d: usize, bw: usize) -> Self {
        let width = (bw + 1) * d;
        let len = nb * d * width;
        Self {
            nb,
            d,
            bw,
            width,
            re: vec![0.0; len],
            im: vec![0.0; len],
        }
    }

    /// Scalar dimension.
    pub fn n(&self) -> usize {
        self.nb * self.d
    }

    pub fn block_size(&self) -> usize {
        self.d
    }

    pub fn block_count(&self) -> usize {
        self.nb
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Column of the first stored entry of row `r` (may be negative).
    fn base(&self, r: usize) -> isize {
        (r / self.d) as isize * self.d as isize - (self.bw * self.d) as isize
    }

    /// First structurally nonzero column of row `r`.
    fn lo(&self, r: usize) -> usize {
        self.base(r).max(0) as usize
    }

    fn idx(&self, r: usize, c: usize) -> usize {
        r * self.width + (c as isize - self.base(r)) as usize
    }

    /// Entry `(r, c)` of the full Hermitian matrix.
    pub fn get(&self, r: usize, c: usize) -> C64 {
        if c > r {
            return self.get(c, r).conj();
        }
        if (c as isize) < self.base(r) {
            return C64::new(0.0, 0.0);
        }
        let k = self.idx(r, c);
        C64::new(self.re[k], self.im[k])
    }

    /// Add `block` to block `(i, j)` with `j <= i <= j + bw`. Entries above the
    /// diagonal of a diagonal block are ignored (taken from the Hermitian
    /// mirror).
    pub fn add_block(&mut self, i: usize, j: usize, block: &CMatrix) {
        assert!(j <= i && i - j <= self.bw && i < self.nb);
        assert_eq!(block.shape(), (self.d, self.d));
        let d = self.d;
        for a in 0..d {
            let r = i * d + a;
            for b in 0..d {
                let c = j * d + b;
                if c > r {
                    continue;
                }
                let k = self.idx(r, c);
                let v = block[(a, b)];
                self.re[k] += v.re;
                self.im[k] += v.im;
            }
        }
    }

    /// Add `v` to every diagonal entry.
    pub fn add_diagonal(&mut self, v: f64) {
        for r in 0..self.n() {
            let k = self.idx(r, r);
            self.re[k] += v;
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        let n = self.n();
        CMatrix::from_fn(n, n, |r, c| self.get(r, c))
    }

    /// In-place banded Cholesky `A = L L^H`.
    pub fn cholesky(mut self) -> Result<BandedCholesky> {
        let n = self.n();
        let w = self.width;
        for r in 0..n {
            let lo = self.lo(r);
            let row_off = r * w;
            let rb = self.base(r);
            for c in lo..=r {
                let cb = self.base(c);
                let len = c - lo;
                let ro = row_off + (lo as isize - rb) as usize;
                let co = c * w + (lo as isize - cb) as usize;
                let (sr, si) = dot_conj(
                    &self.re[ro..ro + len],
                    &self.im[ro..ro + len],
                    &self.re[co..co + len],
                    &self.im[co..co + len],
                );
                let k = row_off + (c as isize - rb) as usize;
                let vr = self.re[k] - sr;
                let vi = self.im[k] - si;
                if c < r {
                    let dc = self.re[c * w + (c as isize - cb) as usize];
                    self.re[k] = vr / dc;
                    self.im[k] = vi / dc;
                } else {
                    if !(vr > 0.0) || !vr.is_finite() {
                        return Err(Error::Numerical(format!(
                            "matrix is not positive definite (pivot {vr:e} at row {r})"
                        )));
                    }
                    self.re[k] = vr.sqrt();
                    self.im[k] = 0.0;
                }
            }
        }
        Ok(BandedCholesky { l: self })
    }
}

/// `sum a_k conj(b_k)`.
#[inline]
fn dot_conj(ar: &[f64], ai: &[f64], br: &[f64], bi: &[f64]) -> (f64, f64) {
    const LANES: usize = 8;
    let n = ar.len();
    let (ar, ai, br, bi) = (&ar[..n], &ai[..n], &br[..n], &bi[..n]);
    let mut re = [0.0f64; LANES];
    let mut im = [0.0f64; LANES];
    let chunks = n / LANES;
    for c in 0..chunks {
        let o = c * LANES;
        for l in 0..LANES {
            let (xr, xi, yr, yi) = (ar[o + l], ai[o + l], br[o + l], bi[o + l]);
            re[l] += xr * yr + xi * yi;
            im[l] += xi * yr - xr * yi;
        }
    }
    let mut sr: f64 = re.iter().sum();
    let mut si: f64 = im.iter().sum();
    for k in chunks * LANES..n {
        sr += ar[k] * br[k] + ai[k] * bi[k];
        si += ai[k] * br[k] - ar[k] * bi[k];
    }
    (sr, si)
}

/// `sum a_k b_k`.
#[inline]
pub(crate) fn dot(ar: &[f64], ai: &[f64], br: &[f64], bi: &[f64]) -> (f64, f64) {
    const LANES: usize = 8;
    let n = ar.len();
    let (ar, ai, br, bi) = (&ar[..n], &ai[..n], &br[..n], &bi[..n]);
    let mut re = [0.0f64; LANES];
    let mut im = [0.0f64; LANES];
    let chunks = n / LANES;
    for c in 0..chunks {
        let o = c * LANES;
        for l in 0..LANES {
            let (xr, xi, yr, yi) = (ar[o + l], ai[o + l], br[o + l], bi[o + l]);
            re[l] += xr * yr - xi * yi;
            im[l] += xr * yi + xi * yr;
        }
    }
    let mut sr: f64 = re.iter().sum();
    let mut si: f64 = im.iter().sum();
    for k in chunks * LANES..n {
        sr += ar[k] * br[k] - ai[k] * bi[k];
        si += ar[k] * bi[k] + ai[k] * br[k];
    }
    (sr, si)
}

/// Cholesky factor of a [`BandedHermitian`] matrix.
#[derive(Clone, Debug)]
pub struct BandedCholesky {
    l: BandedHermitian,
}

/// Column storage of a lower band: entry `(k, j)`, `k >= j`, of column `j`
/// sits at `j * width + (k - j)`.
struct ColumnBand {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl ColumnBand {
    fn zeros(n: usize, width: usize) -> Self {
        Self {
            re: vec![0.0; n * width],
            im: vec![0.0; n * width],
        }
    }
}

impl BandedCholesky {
    pub fn n(&self) -> usize {
        self.l.n()
    }

    /// Last row with a structural nonzero in column `c`.
    fn hi(&self, c: usize) -> usize {
        let l = &self.l;
        ((c / l.d + l.bw + 1) * l.d).min(l.n()) - 1
    }

    fn diag(&self, r: usize) -> f64 {
        self.l.re[self.l.idx(r, r)]
    }

    /// `log det A`.
    pub fn log_det(&self) -> f64 {
        (0..self.n()).map(|r| 2.0 * self.diag(r).ln()).sum()
    }

    /// Solve `A X = B` in place (`B` has `n` rows).
    pub fn solve_in_place(&self, b: &mut CMatrix) {
        let n = self.n();
        assert_eq!(b.nrows(), n);
        let l = &self.l;
        for col in 0..b.ncols() {
            let mut xr: Vec<f64> = (0..n).map(|r| b[(r, col)].re).collect();
            let mut xi: Vec<f64> = (0..n).map(|r| b[(r, col)].im).collect();
            // L y = b
            for r in 0..n {
                let lo = l.lo(r);
                let o = l.idx(r, lo);
                let len = r - lo;
                let (sr, si) = dot(&l.re[o..o + len], &l.im[o..o + len], &xr[lo..r], &xi[lo..r]);
                let dr = self.diag(r);
                xr[r] = (xr[r] - sr) / dr;
                xi[r] = (xi[r] - si) / dr;
            }
            // L^H x = y, column-oriented on the rows of L.
            for r in (0..n).rev() {
                let dr = self.diag(r);
                xr[r] /= dr;
                xi[r] /= dr;
                let (vr, vi) = (xr[r], xi[r]);
                let lo = l.lo(r);
                let o = l.idx(r, lo);
                for (k, c) in (lo..r).enumerate() {
                    // x_c -= conj(L_rc) x_r
                    let (lr, li) = (l.re[o + k], -l.im[o + k]);
                    xr[c] -= lr * vr - li * vi;
                    xi[c] -= lr * vi + li * vr;
                }
            }
            for r in 0..n {
                b[(r, col)] = C64::new(xr[r], xi[r]);
            }
        }
    }

    /// Block `(delta, delta)` of `A^-1` by two triangular solves.
    pub fn inverse_diagonal_block(&self, delta: usize) -> CMatrix {
        let d = self.l.d;
        let n = self.n();
        let mut e = CMatrix::zeros(n, d);
        for a in 0..d {
            e[(delta * d + a, a)] = C64::new(1.0, 0.0);
        }
        self.solve_in_place(&mut e);
        e.rows(delta * d, d).into_owned()
    }

    /// Every diagonal block of `A^-1` (Takahashi recurrence).
    pub fn inverse_diagonal_blocks(&self) -> Vec<CMatrix> {
        let l = &self.l;
        let n = l.n();
        let d = l.d;
        let w = l.width;
        // Column copy of L and both row and column copies of Z.
        let mut lc = ColumnBand::zeros(n, w);
        for r in 0..n {
            for c in l.lo(r)..=r {
                let k = l.idx(r, c);
                let t = c * w + (r - c);
                lc.re[t] = l.re[k];
                lc.im[t] = l.im[k];
            }
        }
        let mut zr = BandedHermitian::zeros(l.nb, d, l.bw);
        let mut zc = ColumnBand::zeros(n, w);
        for j in (0..n).rev() {
            let hi = self.hi(j);
            let ljj = self.diag(j);
            let lo_off = j * w + 1; // L_{j+1, j}
            let len = hi - j;
            let lcr = &lc.re[lo_off..lo_off + len];
            let lci = &lc.im[lo_off..lo_off + len];
            // Rows below the diagonal first, then the diagonal itself.
            for i in (j + 1..=hi).rev() {
                // k in (j, i]: Z_ik from row i of Z.
                let n1 = i - j;
                let ro = zr.idx(i, j + 1);
                let (s1r, s1i) = dot(&zr.re[ro..ro + n1], &zr.im[ro..ro + n1], &lcr[..n1], &lci[..n1]);
                // k in (i, hi]: Z_ik = conj(Z_ki) from column i of Z.
                let n2 = hi - i;
                let co = i * w + 1;
                let (s2r, s2i) = dot_conj(&lcr[n1..], &lci[n1..], &zc.re[co..co + n2], &zc.im[co..co + n2]);
                let vr = -(s1r + s2r) / ljj;
                let vi = -(s1i + s2i) / ljj;
                let k = zr.idx(i, j);
                zr.re[k] = vr;
                zr.im[k] = vi;
                let t = j * w + (i - j);
                zc.re[t] = vr;
                zc.im[t] = vi;
            }
            // Z_jj = 1/L_jj^2 - (1/L_jj) sum_{k>j} conj(Z_kj) L_kj
            let co = j * w + 1;
            let (sr, _) = dot_conj(lcr, lci, &zc.re[co..co + len], &zc.im[co..co + len]);
            let v = 1.0 / (ljj * ljj) - sr / ljj;
            let k = zr.idx(j, j);
            zr.re[k] = v;
            zr.im[k] = 0.0;
            zc.re[j * w] = v;
            zc.im[j * w] = 0.0;
        }
        (0..l.nb)
            .map(|b| {
                CMatrix::from_fn(d, d, |a, c| zr.get(b * d + a, b * d + c))
            })
            .collect()
    }
}
