use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sdmeq::experiment::{
    bench, run_filter_study, run_scenario, write_bench, write_filter_study, write_run, Engines, ResultRow, RunOptions,
    ScenarioConfig,
};

#[derive(Parser)]
#[command(version, about = "Closed-form and Monte Carlo SNR of MMSE MIMO equalizers for SDM links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the master seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
    /// Comma-separated engines (theory, lms, static, iir), replacing the config's.
    #[arg(long, global = true)]
    engines: Option<String>,
    /// Leave wall times out of the tables so reruns are byte-identical.
    #[arg(long, global = true)]
    no_timing: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Keep LMS MSE trajectories in the JSON-lines output.
    #[arg(long, global = true)]
    trajectories: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep realizations, tap counts and noise levels.
    Run { config: PathBuf },
    /// Theory SNR under TX, RX and distributed in-line filtering.
    FilterStudy { config: PathBuf },
    /// Time theory against LMS Monte Carlo.
    Bench { config: PathBuf },
}

fn load(cli: &Cli, path: &Path) -> sdmeq::Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(list) = &cli.engines {
        cfg.engines = Engines::parse_list(list)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_rows(rows: &[ResultRow]) {
    println!("{:>10} {:>6} {:>5} {:>8} {:>12} {:>6} {:>10}", "engine", "real", "M", "N0/2 dB", "placement", "delta", "SNR dB");
    for r in rows {
        println!(
            "{:>10} {:>6} {:>5} {:>8.2} {:>12} {:>6} {:>10.3}",
            r.engine.name(),
            r.realization,
            r.m,
            r.n0_half_db,
            r.placement.map_or("-", |p| p.name()),
            r.delta,
            r.harmonic_snr_db
        );
    }
}

fn run(cli: &Cli) -> sdmeq::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| sdmeq::Error::InvalidSpec(e.to_string()))?;
    }
    let opts = RunOptions {
        timing: !cli.no_timing,
        trajectories: cli.trajectories,
    };
    match &cli.command {
        Command::Run { config } => {
            let cfg = load(cli, config)?;
            let rows = run_scenario(&cfg, opts)?;
            write_run(&cli.out, &rows)?;
            print_rows(&rows);
        }
        Command::FilterStudy { config } => {
            let cfg = load(cli, config)?;
            let rows = run_filter_study(&cfg, opts)?;
            write_filter_study(&cli.out, &rows)?;
            print_rows(&rows);
        }
        Command::Bench { config } => {
            let mut cfg = load(cli, config)?;
            if cli.engines.is_none() {
                cfg.engines.theory = true;
                cfg.engines.lms = true;
            }
            let report = bench(&cfg)?;
            write_bench(&cli.out, &report)?;
            for p in &report.points {
                println!(
                    "M={:<4} theory {:.3} s (channel {:.3}, discretize {:.3}, solve {:.3}) | MC {} syms: transmit {:.2} s, single {:.2} s, sweep {:.2} s | ratio {:.0}x single, {:.0}x sweep, {:.0}x sweep at {} syms",
                    p.m,
                    p.theory.total,
                    p.theory.channel,
                    p.theory.discretize,
                    p.theory.solve,
                    p.n_syms,
                    p.transmit,
                    p.mc_single,
                    p.mc_sweep,
                    p.ratio_single,
                    p.ratio_sweep,
                    p.full_scale_ratio_sweep,
                    p.full_scale_syms
                );
            }
            println!(
                "aggregate: {:.0}x single, {:.0}x sweep, {:.0}x sweep at full scale",
                report.aggregate_ratio_single, report.aggregate_ratio_sweep, report.aggregate_full_scale_ratio_sweep
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
