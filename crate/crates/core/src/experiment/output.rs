//! Result tables: CSV, JSON lines and per-figure data files.

use std::io::Write;
use std::path::Path;

use super::bench::BenchReport;
use super::run::ResultRow;
use crate::Result;

pub const CSV_HEADER: [&str; 12] = [
    "scenario",
    "realization",
    "engine",
    "placement",
    "m",
    "n0_half_db",
    "delta",
    "harmonic_snr_db",
    "snr_db",
    "mu",
    "channel_checksum",
    "wall_time_s",
];

fn db(x: f64) -> String {
    format!("{x:.6}")
}

fn csv_error(e: csv::Error) -> crate::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io.into(),
        other => crate::Error::Format(format!("{other:?}")),
    }
}

/// One line per row; per-mode SNRs are `;`-separated. Empty cells stand for
/// absent values (no step size, timing disabled).
pub fn write_csv<W: Write>(w: W, rows: &[ResultRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER).map_err(csv_error)?;
    for r in rows {
        let snr = r.snr_db.iter().map(|&x| db(x)).collect::<Vec<_>>().join(";");
        out.write_record([
            r.scenario.clone(),
            r.realization.to_string(),
            r.engine.name().to_string(),
            r.placement.map(|p| p.name().to_string()).unwrap_or_default(),
            r.m.to_string(),
            db(r.n0_half_db),
            r.delta.to_string(),
            db(r.harmonic_snr_db),
            snr,
            r.mu.map(|m| format!("{m:e}")).unwrap_or_default(),
            r.channel_checksum.clone(),
            r.wall_time_s.map(|t| format!("{t:.6}")).unwrap_or_default(),
        ])
        .map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_jsonl<W: Write>(mut w: W, rows: &[ResultRow]) -> Result<()> {
    for r in rows {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Harmonic SNR against realization index, one series per noise level, tap
/// count and engine.
pub fn write_snr_vs_realization<W: Write>(w: W, rows: &[ResultRow]) -> Result<()> {
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        a.n0_half_db
            .total_cmp(&b.n0_half_db)
            .then(a.m.cmp(&b.m))
            .then(a.engine.cmp(&b.engine))
            .then(a.realization.cmp(&b.realization))
    });
    let lines = sorted
        .iter()
        .map(|r| {
            vec![
                db(r.n0_half_db),
                r.m.to_string(),
                r.engine.name().into(),
                r.realization.to_string(),
                db(r.harmonic_snr_db),
            ]
        })
        .collect();
    write_rows(w, &["n0_half_db", "m", "engine", "realization", "harmonic_snr_db"], lines)
}

/// Harmonic SNR against tap count, one series per realization and engine.
pub fn write_snr_vs_taps<W: Write>(w: W, rows: &[ResultRow]) -> Result<()> {
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        a.n0_half_db
            .total_cmp(&b.n0_half_db)
            .then(a.realization.cmp(&b.realization))
            .then(a.engine.cmp(&b.engine))
            .then(a.m.cmp(&b.m))
    });
    let lines = sorted
        .iter()
        .map(|r| {
            vec![
                db(r.n0_half_db),
                r.realization.to_string(),
                r.engine.name().into(),
                r.m.to_string(),
                db(r.harmonic_snr_db),
            ]
        })
        .collect();
    write_rows(w, &["n0_half_db", "realization", "engine", "m", "harmonic_snr_db"], lines)
}

/// Harmonic SNR against noise level, one series per placement, engine and
/// tap count.
pub fn write_snr_vs_noise<W: Write>(w: W, rows: &[ResultRow]) -> Result<()> {
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        a.placement
            .cmp(&b.placement)
            .then(a.engine.cmp(&b.engine))
            .then(a.m.cmp(&b.m))
            .then(a.n0_half_db.total_cmp(&b.n0_half_db))
    });
    let lines = sorted
        .iter()
        .map(|r| {
            vec![
                r.placement.map(|p| p.name().to_string()).unwrap_or_default(),
                r.engine.name().into(),
                r.m.to_string(),
                db(r.n0_half_db),
                db(r.harmonic_snr_db),
            ]
        })
        .collect();
    write_rows(w, &["placement", "engine", "m", "n0_half_db", "harmonic_snr_db"], lines)
}

fn write_rows<W: Write>(w: W, header: &[&str], lines: Vec<Vec<String>>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header).map_err(csv_error)?;
    for l in lines {
        out.write_record(&l).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

/// Per-point bench summary as CSV.
pub fn write_bench_csv<W: Write>(w: W, report: &BenchReport) -> Result<()> {
    let lines = report
        .points
        .iter()
        .map(|p| {
            vec![
                p.m.to_string(),
                p.n_syms.to_string(),
                format!("{:.6}", p.theory.channel),
                format!("{:.6}", p.theory.discretize),
                format!("{:.6}", p.theory.solve),
                format!("{:.6}", p.theory.total),
                format!("{:.6}", p.transmit),
                format!("{:.6}", p.mc_single),
                format!("{:.6}", p.mc_sweep),
                format!("{:.1}", p.ratio_single),
                format!("{:.1}", p.ratio_sweep),
                format!("{:.1}", p.full_scale_ratio_sweep),
            ]
        })
        .collect();
    write_rows(
        w,
        &[
            "m",
            "n_syms",
            "t_channel_s",
            "t_discretize_s",
            "t_solve_s",
            "t_theory_s",
            "t_transmit_s",
            "t_mc_single_s",
            "t_mc_sweep_s",
            "ratio_single",
            "ratio_sweep",
            "full_scale_ratio_sweep",
        ],
        lines,
    )
}

/// Write the standard files of a scenario run into `dir`.
pub fn write_run(dir: &Path, rows: &[ResultRow]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_csv(std::fs::File::create(dir.join("results.csv"))?, rows)?;
    write_jsonl(std::fs::File::create(dir.join("results.jsonl"))?, rows)?;
    write_snr_vs_realization(std::fs::File::create(dir.join("snr_vs_realization.csv"))?, rows)?;
    write_snr_vs_taps(std::fs::File::create(dir.join("snr_vs_taps.csv"))?, rows)
}

pub fn write_filter_study(dir: &Path, rows: &[ResultRow]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_csv(std::fs::File::create(dir.join("filter_study.csv"))?, rows)?;
    write_jsonl(std::fs::File::create(dir.join("filter_study.jsonl"))?, rows)?;
    write_snr_vs_noise(std::fs::File::create(dir.join("snr_vs_noise.csv"))?, rows)
}

pub fn write_bench(dir: &Path, report: &BenchReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("bench.json"), serde_json::to_string_pretty(report)?)?;
    write_bench_csv(std::fs::File::create(dir.join("bench.csv"))?, report)
}
