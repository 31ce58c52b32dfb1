//! Scenario runner, filter study and command-line contract.

mod common;

use std::process::Command;

use common::manifest_path;
use sdmeq::channel::{is_white, noise_covariance, LinkSpec};
use sdmeq::experiment::{
    draw_links, reference_link, run_filter_study, run_scenario, write_csv, Engine, Engines, Placement, RunOptions,
    ScenarioConfig,
};
use sdmeq::Error;

fn no_timing() -> RunOptions {
    RunOptions {
        timing: false,
        trajectories: false,
    }
}

#[test]
fn theory_grid_has_one_row_per_point() {
    let cfg = ScenarioConfig {
        realizations: 10,
        ..ScenarioConfig::default()
    };
    let rows = run_scenario(&cfg, RunOptions::default()).unwrap();
    assert_eq!(rows.len(), 30);
    assert!(rows.iter().all(|r| r.engine == Engine::Theory && r.wall_time_s.is_some()));
    let keys: Vec<(u64, usize)> = rows.iter().map(|r| (r.realization, r.m)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    // Tap-count penalty: more taps never hurt.
    for r in rows.chunks(3) {
        assert!(r[0].harmonic_snr_db <= r[1].harmonic_snr_db + 1e-6);
        assert!(r[1].harmonic_snr_db <= r[2].harmonic_snr_db + 1e-6);
    }
}

fn small_mc() -> ScenarioConfig {
    let mut cfg = ScenarioConfig {
        name: "small".into(),
        realizations: 2,
        ..ScenarioConfig::default()
    };
    cfg.path.links[0] = LinkSpec {
        n_modes: 1,
        ..reference_link()
    };
    cfg.equalizer.taps = vec![20, 40];
    cfg.engines = Engines::parse_list("theory,lms").unwrap();
    cfg.mc.n_syms = 60_000;
    cfg
}

#[test]
fn paired_rows_share_the_channel_draw() {
    let cfg = small_mc();
    let rows = run_scenario(&cfg, no_timing()).unwrap();
    assert_eq!(rows.len(), 8);
    for r in &rows {
        let t = rows
            .iter()
            .find(|t| t.engine == Engine::Theory && t.realization == r.realization)
            .unwrap();
        assert_eq!(r.channel_checksum, t.channel_checksum);
        if r.engine == Engine::Lms {
            let t = rows
                .iter()
                .find(|t| t.engine == Engine::Theory && t.realization == r.realization && t.m == r.m)
                .unwrap();
            assert!((r.harmonic_snr_db - t.harmonic_snr_db).abs() < 0.3, "{r:?} vs {t:?}");
            assert!(r.mu.is_some());
        }
    }
    assert_ne!(rows[0].channel_checksum, rows[4].channel_checksum);

    // Adding an engine does not perturb the channel draws.
    let mut theory_only = cfg.clone();
    theory_only.engines = Engines::parse_list("theory").unwrap();
    let t_rows = run_scenario(&theory_only, no_timing()).unwrap();
    for t in &t_rows {
        assert!(rows.iter().any(|r| r == t));
    }
}

#[test]
fn empty_engine_set_is_a_config_error() {
    let cfg = ScenarioConfig {
        engines: Engines::parse_list("").unwrap(),
        ..ScenarioConfig::default()
    };
    match run_scenario(&cfg, no_timing()) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "engines"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn csv_is_reproducible_without_timing() {
    let cfg = small_mc();
    let render = || {
        let mut buf = Vec::new();
        write_csv(&mut buf, &run_scenario(&cfg, no_timing()).unwrap()).unwrap();
        buf
    };
    let a = render();
    assert_eq!(a, render());
    let text = String::from_utf8(a).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(',')), "wall time column must be empty");
}

fn study_config() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    let link = LinkSpec {
        n_modes: 2,
        sections: 20,
        ..reference_link()
    };
    cfg.path.links = vec![link; 4];
    cfg.equalizer.taps = vec![20, 40];
    cfg.filter_study.n0_half_db = vec![-16.0, -12.0, -8.0, -4.0];
    cfg
}

#[test]
fn filtering_never_helps_and_noise_always_hurts() {
    let cfg = study_config();
    let rows = run_filter_study(&cfg, no_timing()).unwrap();
    assert_eq!(rows.len(), 4 * 4 * 2);
    let get = |p: Placement, m: usize, n0: f64| {
        rows.iter()
            .find(|r| r.placement == Some(p) && r.m == m && r.n0_half_db == n0)
            .unwrap()
            .harmonic_snr_db
    };
    for p in [Placement::None, Placement::Tx, Placement::Rx, Placement::Distributed] {
        for m in [20, 40] {
            let curve: Vec<f64> = cfg.filter_study.n0_half_db.iter().map(|&n| get(p, m, n)).collect();
            assert!(curve.windows(2).all(|w| w[1] < w[0]), "{p:?} M={m}: {curve:?}");
            for &n in &cfg.filter_study.n0_half_db {
                assert!(get(p, m, n) <= get(Placement::None, m, n) + 0.01);
            }
        }
    }
    // TX filters sit before every noise source and cost SNR.
    assert!(get(Placement::Tx, 40, -16.0) < get(Placement::None, 40, -16.0) - 0.1);
}

#[test]
fn distributed_filters_color_the_noise() {
    let cfg = study_config();
    let links = draw_links(&cfg, 0).unwrap();
    let path = Placement::Distributed.apply(&cfg.path, cfg.filter_study.filter);
    let pr = sdmeq::channel::compose_path(&path, &links).unwrap();
    let wn = noise_covariance(&pr.downstream, &pr.fractions, 0.1).unwrap();
    assert!(!is_white(&wn, 0.1, 1e-6));
    // Without filters or MDL every downstream cascade is unitary.
    let mut lossless = cfg.clone();
    for l in &mut lossless.path.links {
        l.sigma_mdl_db = 0.0;
    }
    let plain = sdmeq::channel::compose_path(&lossless.path, &draw_links(&lossless, 0).unwrap()).unwrap();
    let wn = noise_covariance(&plain.downstream, &plain.fractions, 0.1).unwrap();
    assert!(is_white(&wn, 0.1, 1e-9));
}

#[test]
fn shipped_configs_validate() {
    for entry in std::fs::read_dir(manifest_path("configs")).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(cfg.signal.s, 2);
        assert!((cfg.signal.symbol_rate - 30e9).abs() < 1.0);
        assert!(cfg.path.links.iter().all(|l| l.sections == 50 && l.section_length_km == 10.0));
    }
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sdmeq"))
}

fn write_config(dir: &std::path::Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("cfg.json");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn cli_run_is_byte_identical_without_timing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"name": "cli", "realizations": 2, "equalizer": {"taps": [20, 30]}, "n0_half_db": [-10, -5]}"#,
    );
    let run = |out: &str| {
        let status = cli()
            .args(["run", cfg.to_str().unwrap(), "--no-timing", "--threads", "1", "--out"])
            .arg(dir.path().join(out))
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        std::fs::read(dir.path().join(out).join("results.csv")).unwrap()
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 1 + 2 * 2 * 2);
    for f in ["results.jsonl", "snr_vs_realization.csv", "snr_vs_taps.csv"] {
        assert!(dir.path().join("a").join(f).exists(), "{f}");
    }

    let seeded = cli()
        .args(["run", cfg.to_str().unwrap(), "--no-timing", "--seed", "99", "--out"])
        .arg(dir.path().join("c"))
        .output()
        .unwrap();
    assert!(seeded.status.success());
    assert_ne!(std::fs::read(dir.path().join("c").join("results.csv")).unwrap(), run("a"));
}

#[test]
fn cli_reports_errors_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    // Unknown engine on the command line.
    let cfg = write_config(dir.path(), "{}");
    let res = cli()
        .args(["run", cfg.to_str().unwrap(), "--engines", "theory,magic", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("engines"));

    // An engine that fails at run time: the IIR reference over its memory budget.
    let cfg = write_config(
        dir.path(),
        r#"{"realizations": 1, "equalizer": {"taps": [10]}, "engines": {"theory": true, "iir": true},
            "iir": {"memory_limit": 1000}}"#,
    );
    let res = cli().args(["run", cfg.to_str().unwrap(), "--out"]).arg(&out).output().unwrap();
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).starts_with("error:"));
}

#[test]
fn cli_filter_study_writes_noise_curves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"path": {"links": [{"n_modes": 1, "sections": 50, "section_length_km": 10.0, "sigma_mdl_db": 3.8, "sigma_dmd": 3.51e-11},
                              {"n_modes": 1, "sections": 50, "section_length_km": 10.0, "sigma_mdl_db": 3.8, "sigma_dmd": 3.51e-11}]},
            "equalizer": {"taps": [20]},
            "filter_study": {"n0_half_db": [-10, -5]}}"#,
    );
    let res = cli()
        .args(["filter-study", cfg.to_str().unwrap(), "--no-timing", "--out"])
        .arg(dir.path().join("fs"))
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(dir.path().join("fs").join("snr_vs_noise.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 * 2);
    assert!(text.starts_with("placement,engine,m,n0_half_db,harmonic_snr_db"));
}

#[test]
fn cli_bench_reports_stage_times() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"path": {"links": [{"n_modes": 1, "sections": 50, "section_length_km": 10.0, "sigma_mdl_db": 0.7, "sigma_dmd": 3.51e-11}]},
            "equalizer": {"taps": [20]}, "mc": {"n_syms": 30000}}"#,
    );
    let res = cli()
        .args(["bench", cfg.to_str().unwrap(), "--out"])
        .arg(dir.path().join("b"))
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("b").join("bench.json")).unwrap()).unwrap();
    let p = &report["points"][0];
    for key in ["channel", "discretize", "solve", "total"] {
        assert!(p["theory"][key].as_f64().unwrap() > 0.0, "{key}");
    }
    assert_eq!(p["lms_per_mu"].as_array().unwrap().len(), 3);
    assert!(p["ratio_sweep"].as_f64().unwrap() > p["ratio_single"].as_f64().unwrap());
    assert!(dir.path().join("b").join("bench.csv").exists());
}
