//! Config-driven experiments: scenario sweeps, the filter-placement study and
//! the theory-versus-simulation timing benchmark.

mod bench;
mod config;
mod output;
mod run;

pub use bench::{bench, median, time_theory, BenchPoint, BenchReport, StageTimes};
pub use config::{
    reference_link, BenchConfig, Engines, EqualizerConfig, FilterStudyConfig, Placement, ScenarioConfig, SignalConfig,
};
pub use output::{
    write_bench, write_bench_csv, write_csv, write_filter_study, write_jsonl, write_run, write_snr_vs_noise,
    write_snr_vs_realization, write_snr_vs_taps, CSV_HEADER,
};
pub use run::{
    draw_links, equalizer_channel, realization_channel, run_filter_study, run_realization, run_scenario, Engine, ResultRow, RunOptions,
};
