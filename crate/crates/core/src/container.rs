//! Binary and JSON containers for responses, discrete channels, matrices and
//! waveforms.
//!
//! Every binary file starts with the same 8-byte header, all integers and
//! floats little-endian:
//!
//! | offset | type     | content                                   |
//! |--------|----------|-------------------------------------------|
//! | 0      | `[u8;4]` | magic `SDMQ`                              |
//! | 4      | `u16`    | format version, currently 1               |
//! | 6      | `u16`    | payload kind (see [`Kind`])               |
//!
//! Complex entries are stored as two `f64` (real, imaginary). Matrices are
//! row-major. Payloads:
//!
//! - `FreqResponse` (kind 1): `u32 dim`, `u32 n_bins`, `f64 f_start`,
//!   `f64 f_step`, then `n_bins` matrices of `dim x dim`.
//! - `DiscreteChannel` (kind 2): `u32 dim`, `u32 s`, `u32 n_taps`, `i64 lead`,
//!   `f64 symbol_period`, then `n_taps` matrices of `(dim s) x dim`.
//! - `Matrix` (kind 3): `u32 rows`, `u32 cols`, then the entries.
//! - `Waveform` (kind 4): `u32 channels`, `u64 len`, `f64 sample_rate`,
//!   `f64 symbol_rate`, `f64 bandwidth`, then each channel in turn.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{FreqResponse, FrequencyGrid};
use crate::discretize::DiscreteChannel;
use crate::mmse::EqualizerSolution;
use crate::simulator::Waveform;
use crate::{to_db, CMatrix, Error, Result, C64};

pub const MAGIC: [u8; 4] = *b"SDMQ";
pub const VERSION: u16 = 1;

/// Payload kind stored in the header.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u16)]
pub enum Kind {
    FreqResponse = 1,
    DiscreteChannel = 2,
    Matrix = 3,
    Waveform = 4,
}

impl Kind {
    fn from_u16(v: u16) -> Result<Self> {
        Ok(match v {
            1 => Kind::FreqResponse,
            2 => Kind::DiscreteChannel,
            3 => Kind::Matrix,
            4 => Kind::Waveform,
            _ => return Err(Error::Format(format!("unknown payload kind {v}"))),
        })
    }
}

// Largest element count accepted from a header, to keep corrupt files from
// triggering huge allocations.
const MAX_ENTRIES: u64 = 1 << 32;

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn header(&mut self, kind: Kind) -> Result<()> {
        self.0.write_all(&MAGIC)?;
        self.u16(VERSION)?;
        self.u16(kind as u16)
    }
    fn u16(&mut self, v: u16) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn u32(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit in u32")))?;
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn u64(&mut self, v: usize) -> Result<()> {
        Ok(self.0.write_all(&(v as u64).to_le_bytes())?)
    }
    fn i64(&mut self, v: i64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn complex(&mut self, z: C64) -> Result<()> {
        self.f64(z.re)?;
        self.f64(z.im)
    }
    fn matrix(&mut self, m: &CMatrix) -> Result<()> {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                self.complex(m[(i, j)])?;
            }
        }
        Ok(())
    }
}

struct Reader<R: Read>(R);

impl<R: Read> Reader<R> {
    fn header(&mut self) -> Result<Kind> {
        let mut magic = [0u8; 4];
        self.0.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(Error::Format(format!("bad magic {magic:?}")));
        }
        let version = self.u16()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        Kind::from_u16(self.u16()?)
    }
    fn expect(&mut self, kind: Kind) -> Result<()> {
        let found = self.header()?;
        if found != kind {
            return Err(Error::Format(format!("expected {kind:?}, found {found:?}")));
        }
        Ok(())
    }
    fn bytes<const K: usize>(&mut self) -> Result<[u8; K]> {
        let mut b = [0u8; K];
        self.0.read_exact(&mut b)?;
        Ok(b)
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes()?))
    }
    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.bytes()?) as usize)
    }
    fn u64(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.bytes()?);
        if v > MAX_ENTRIES {
            return Err(Error::Format(format!("length {v} too large")));
        }
        Ok(v as usize)
    }
    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
    fn complex(&mut self) -> Result<C64> {
        Ok(C64::new(self.f64()?, self.f64()?))
    }
    fn matrix(&mut self, rows: usize, cols: usize) -> Result<CMatrix> {
        if (rows as u64) * (cols as u64) > MAX_ENTRIES {
            return Err(Error::Format(format!("{rows}x{cols} matrix too large")));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(self.complex()?);
        }
        Ok(CMatrix::from_row_slice(rows, cols, &data))
    }
}

pub fn write_response<W: Write>(w: W, h: &FreqResponse) -> Result<()> {
    let mut w = Writer(w);
    w.header(Kind::FreqResponse)?;
    let g = h.grid();
    w.u32(h.dim())?;
    w.u32(g.n_bins)?;
    w.f64(g.start)?;
    w.f64(g.step)?;
    for m in h.matrices() {
        w.matrix(m)?;
    }
    Ok(())
}

pub fn read_response<R: Read>(r: R) -> Result<FreqResponse> {
    let mut r = Reader(r);
    r.expect(Kind::FreqResponse)?;
    let dim = r.u32()?;
    let n_bins = r.u32()?;
    let grid = FrequencyGrid::new(r.f64()?, r.f64()?, n_bins)?;
    let matrices = (0..n_bins).map(|_| r.matrix(dim, dim)).collect::<Result<Vec<_>>>()?;
    FreqResponse::new(grid, matrices)
}

pub fn write_channel<W: Write>(w: W, dc: &DiscreteChannel) -> Result<()> {
    let mut w = Writer(w);
    w.header(Kind::DiscreteChannel)?;
    w.u32(dc.dim())?;
    w.u32(dc.s())?;
    w.u32(dc.taps().len())?;
    w.i64(dc.lead())?;
    w.f64(dc.symbol_period())?;
    for t in dc.taps() {
        w.matrix(t)?;
    }
    Ok(())
}

pub fn read_channel<R: Read>(r: R) -> Result<DiscreteChannel> {
    let mut r = Reader(r);
    r.expect(Kind::DiscreteChannel)?;
    let dim = r.u32()?;
    let s = r.u32()?;
    let n_taps = r.u32()?;
    let lead = r.i64()?;
    let period = r.f64()?;
    let taps = (0..n_taps).map(|_| r.matrix(dim * s, dim)).collect::<Result<Vec<_>>>()?;
    DiscreteChannel::new(s, period, lead, taps)
}

pub fn write_matrix<W: Write>(w: W, m: &CMatrix) -> Result<()> {
    let mut w = Writer(w);
    w.header(Kind::Matrix)?;
    w.u32(m.nrows())?;
    w.u32(m.ncols())?;
    w.matrix(m)
}

pub fn read_matrix<R: Read>(r: R) -> Result<CMatrix> {
    let mut r = Reader(r);
    r.expect(Kind::Matrix)?;
    let rows = r.u32()?;
    let cols = r.u32()?;
    r.matrix(rows, cols)
}

pub fn write_waveform<W: Write>(w: W, wf: &Waveform) -> Result<()> {
    let mut w = Writer(w);
    w.header(Kind::Waveform)?;
    w.u32(wf.dim())?;
    w.u64(wf.len())?;
    w.f64(wf.sample_rate)?;
    w.f64(wf.symbol_rate)?;
    w.f64(wf.bandwidth)?;
    for ch in &wf.channels {
        for &z in ch {
            w.complex(z)?;
        }
    }
    Ok(())
}

pub fn read_waveform<R: Read>(r: R) -> Result<Waveform> {
    let mut r = Reader(r);
    r.expect(Kind::Waveform)?;
    let dim = r.u32()?;
    let len = r.u64()?;
    let (fs, rs, bw) = (r.f64()?, r.f64()?, r.f64()?);
    let channels = (0..dim)
        .map(|_| (0..len).map(|_| r.complex()).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Waveform::new(fs, rs, bw, channels)
}

/// Read just the header of a container.
pub fn peek_kind<R: Read>(r: R) -> Result<Kind> {
    Reader(r).header()
}

pub fn save<T: ?Sized>(path: &Path, value: &T, write: impl FnOnce(&mut BufWriter<File>, &T) -> Result<()>) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    write(&mut f, value)?;
    f.flush()?;
    Ok(())
}

pub fn load<T>(path: &Path, read: impl FnOnce(BufReader<File>) -> Result<T>) -> Result<T> {
    read(BufReader::new(File::open(path)?))
}

/// JSON form of a [`FreqResponse`], meant for small responses: each matrix is
/// a row-major list of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseJson {
    pub grid: FrequencyGrid,
    pub dim: usize,
    pub matrices: Vec<Vec<[f64; 2]>>,
}

impl From<&FreqResponse> for ResponseJson {
    fn from(h: &FreqResponse) -> Self {
        let d = h.dim();
        Self {
            grid: *h.grid(),
            dim: d,
            matrices: h
                .matrices()
                .iter()
                .map(|m| (0..d * d).map(|k| m[(k / d, k % d)]).map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }
}

impl TryFrom<ResponseJson> for FreqResponse {
    type Error = Error;

    fn try_from(j: ResponseJson) -> Result<Self> {
        let d = j.dim;
        let matrices = j
            .matrices
            .iter()
            .map(|m| {
                if m.len() != d * d {
                    return Err(Error::Format(format!("matrix with {} entries, expected {}", m.len(), d * d)));
                }
                let data: Vec<C64> = m.iter().map(|&[re, im]| C64::new(re, im)).collect();
                Ok(CMatrix::from_row_slice(d, d, &data))
            })
            .collect::<Result<Vec<_>>>()?;
        FreqResponse::new(j.grid, matrices)
    }
}

/// Scalar part of an [`EqualizerSolution`]; the tap bank goes to a binary
/// matrix container next to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub m: usize,
    pub s: usize,
    pub delta: usize,
    pub snr: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub harmonic_snr: f64,
    pub harmonic_snr_db: f64,
    pub ree_diag: Vec<f64>,
}

impl From<&EqualizerSolution> for SolutionRecord {
    fn from(sol: &EqualizerSolution) -> Self {
        Self {
            m: sol.m,
            s: sol.s,
            delta: sol.delta,
            snr: sol.snr.clone(),
            snr_db: sol.snr.iter().map(|&x| to_db(x)).collect(),
            harmonic_snr: sol.harmonic_snr,
            harmonic_snr_db: to_db(sol.harmonic_snr),
            ree_diag: sol.ree.diagonal().iter().map(|z| z.re).collect(),
        }
    }
}

/// Write `<stem>.json` (the record) and `<stem>.taps.bin` (the tap bank).
pub fn export_solution(dir: &Path, stem: &str, sol: &EqualizerSolution) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let record = SolutionRecord::from(sol);
    std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&record)?)?;
    save(&dir.join(format!("{stem}.taps.bin")), &sol.taps, |w, m| write_matrix(w, m))
}
