//! JSON scenario description. Every field has a default, so a config file
//! only needs to name what differs from the reference setup (one link, 4
//! modes, 50 sections of 10 km, 30 GBd RRC with roll-off 0.1, s = 2, 1000
//! bins over 60 GHz, N0/2 = -10 dB).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{FilterSpec, FrequencyGrid, LinkSpec, PathSpec};
use crate::discretize::{native_grid, DiscretizeOptions};
use crate::mmse::{DelayChoice, IirOptions};
use crate::pulse::PulseSpec;
use crate::simulator::McConfig;
use crate::{from_db, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalConfig {
    pub symbol_rate: f64,
    pub rolloff: f64,
    /// Equalizer samples per symbol.
    pub s: usize,
    pub n_bins: usize,
    /// Span of the channel grid; `None` means `s` times the symbol rate.
    pub bandwidth: Option<f64>,
}

impl Default for SignalConfig {
    fn default() -> Self {
        Self {
            symbol_rate: 30e9,
            rolloff: 0.1,
            s: 2,
            n_bins: 1000,
            bandwidth: None,
        }
    }
}

impl SignalConfig {
    pub fn pulse(&self) -> Result<PulseSpec> {
        PulseSpec::new(self.rolloff, self.symbol_rate)
            .map_err(|e| Error::config("signal", e.to_string()))
    }

    pub fn grid(&self) -> Result<FrequencyGrid> {
        let g = match self.bandwidth {
            None => native_grid(&self.pulse()?, self.s, self.n_bins),
            Some(b) => FrequencyGrid::centered(b, self.n_bins),
        };
        g.map_err(|e| Error::config("signal.bandwidth", e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EqualizerConfig {
    /// Tap counts `M`.
    pub taps: Vec<usize>,
    pub delta: DelayChoice,
}

impl Default for EqualizerConfig {
    fn default() -> Self {
        Self {
            taps: vec![40, 60, 100],
            delta: DelayChoice::Auto,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Engines {
    pub theory: bool,
    pub lms: bool,
    /// Simulator driven by the theory tap bank.
    #[serde(rename = "static")]
    pub static_taps: bool,
    pub iir: bool,
}

impl Default for Engines {
    fn default() -> Self {
        Self {
            theory: true,
            lms: false,
            static_taps: false,
            iir: false,
        }
    }
}

impl Engines {
    pub fn any(&self) -> bool {
        self.theory || self.lms || self.static_taps || self.iir
    }

    pub fn needs_simulation(&self) -> bool {
        self.lms || self.static_taps
    }

    /// Parse a comma-separated list such as `theory,lms`.
    pub fn parse_list(list: &str) -> Result<Self> {
        let mut e = Engines {
            theory: false,
            lms: false,
            static_taps: false,
            iir: false,
        };
        for name in list.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            match name {
                "theory" => e.theory = true,
                "lms" => e.lms = true,
                "static" => e.static_taps = true,
                "iir" => e.iir = true,
                other => return Err(Error::config("engines", format!("unknown engine {other:?}"))),
            }
        }
        Ok(e)
    }
}

/// Where the in-line filters of the filter study sit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// No filters: the baseline.
    None,
    Tx,
    Rx,
    Distributed,
}

impl Placement {
    pub fn name(&self) -> &'static str {
        match self {
            Placement::None => "none",
            Placement::Tx => "tx",
            Placement::Rx => "rx",
            Placement::Distributed => "distributed",
        }
    }

    /// `path` with one copy of `filter` per link at this placement.
    pub fn apply(&self, path: &PathSpec, filter: FilterSpec) -> PathSpec {
        let filters = match self {
            Placement::None => Vec::new(),
            Placement::Tx => path.filters_at_tx(filter),
            Placement::Rx => path.filters_at_rx(filter),
            Placement::Distributed => path.filters_distributed(filter),
        };
        path.clone().with_filters(filters)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterStudyConfig {
    pub filter: FilterSpec,
    pub placements: Vec<Placement>,
    /// Noise levels swept, dB.
    pub n0_half_db: Vec<f64>,
    /// Realization index of the fixed channel draw.
    pub realization: u64,
}

impl Default for FilterStudyConfig {
    fn default() -> Self {
        Self {
            filter: FilterSpec {
                order: 2.0,
                bandwidth_3db: 15e9,
                center: 0.0,
            },
            placements: vec![Placement::None, Placement::Tx, Placement::Rx, Placement::Distributed],
            n0_half_db: vec![-20.0, -17.5, -15.0, -12.5, -10.0, -7.5, -5.0],
            realization: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Timed repetitions per engine and point; the median is reported.
    pub repetitions: usize,
    /// Record length used to extrapolate the Monte Carlo cost.
    pub full_scale_syms: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            repetitions: 3,
            full_scale_syms: 380_000,
        }
    }
}

/// Full experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub realizations: usize,
    pub path: PathSpec,
    pub signal: SignalConfig,
    pub equalizer: EqualizerConfig,
    /// Noise levels `N0/2`, dB.
    pub n0_half_db: Vec<f64>,
    pub engines: Engines,
    pub discretize: DiscretizeOptions,
    pub mc: McConfig,
    pub iir: IirOptions,
    pub filter_study: FilterStudyConfig,
    pub bench: BenchConfig,
}

pub fn reference_link() -> LinkSpec {
    LinkSpec {
        n_modes: 4,
        sections: 50,
        section_length_km: 10.0,
        sigma_mdl_db: 3.8,
        sigma_dmd: LinkSpec::dmd_per_section(11.1e-12, 10.0),
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            seed: 1,
            realizations: 10,
            path: PathSpec::new(vec![reference_link()]),
            signal: SignalConfig::default(),
            equalizer: EqualizerConfig::default(),
            n0_half_db: vec![-10.0],
            engines: Engines::default(),
            discretize: DiscretizeOptions {
                energy_keep: 1.0 - 1e-4,
                ..DiscretizeOptions::default()
            },
            mc: McConfig::default(),
            iir: IirOptions::default(),
            filter_study: FilterStudyConfig::default(),
            bench: BenchConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn n0_half(&self) -> Vec<f64> {
        self.n0_half_db.iter().map(|&d| from_db(d)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::config("realizations", "must be at least 1"));
        }
        if !self.engines.any() {
            return Err(Error::config("engines", "at least one engine must be enabled"));
        }
        self.path.validate().map_err(|e| Error::config("path", e.to_string()))?;
        self.signal.pulse()?;
        if self.signal.s == 0 {
            return Err(Error::config("signal.s", "must be at least 1"));
        }
        self.signal.grid()?;
        if self.equalizer.taps.is_empty() || self.equalizer.taps.contains(&0) {
            return Err(Error::config("equalizer.taps", "needs at least one positive tap count"));
        }
        check_levels("n0_half_db", &self.n0_half_db)?;
        if !(self.discretize.energy_keep > 0.0 && self.discretize.energy_keep <= 1.0) {
            return Err(Error::config("discretize.energy_keep", "must lie in (0, 1]"));
        }
        if self.engines.needs_simulation() {
            self.mc.validate()?;
            if !self.mc.s_sim.is_multiple_of(self.signal.s) {
                return Err(Error::config("mc.s_sim", "must be a multiple of signal.s"));
            }
        }
        self.filter_study
            .filter
            .validate()
            .map_err(|e| Error::config("filter_study.filter", e.to_string()))?;
        check_levels("filter_study.n0_half_db", &self.filter_study.n0_half_db)?;
        if self.filter_study.placements.is_empty() {
            return Err(Error::config("filter_study.placements", "needs at least one placement"));
        }
        if self.bench.repetitions == 0 {
            return Err(Error::config("bench.repetitions", "must be at least 1"));
        }
        Ok(())
    }
}

fn check_levels(field: &str, levels: &[f64]) -> Result<()> {
    if levels.is_empty() || levels.iter().any(|x| !x.is_finite()) {
        return Err(Error::config(field, "needs at least one finite level"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_reference_setup() {
        let cfg = ScenarioConfig::from_json("{}").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert_eq!(cfg.path.dim(), 8);
        assert!((cfg.path.links[0].sigma_dmd - 35.1e-12).abs() < 0.05e-12);
        assert_eq!(cfg.signal.grid().unwrap().n_bins, 1000);
        assert!((cfg.signal.grid().unwrap().span() - 60e9).abs() < 1.0);
    }

    #[test]
    fn default_round_trips_through_json() {
        let cfg = ScenarioConfig::default();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(ScenarioConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn validation_names_the_field() {
        let cases = [
            (r#"{"engines": {"theory": false}}"#, "engines"),
            (r#"{"realizations": 0}"#, "realizations"),
            (r#"{"equalizer": {"taps": []}}"#, "equalizer.taps"),
            (r#"{"n0_half_db": []}"#, "n0_half_db"),
            (r#"{"engines": {"lms": true}, "mc": {"mu_grid": []}}"#, "mc.mu_grid"),
        ];
        for (text, field) in cases {
            match ScenarioConfig::from_json(text) {
                Err(Error::Config { field: f, .. }) => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(matches!(ScenarioConfig::from_json(r#"{"sead": 3}"#), Err(Error::Config { .. })));
    }

    #[test]
    fn engine_list_parsing() {
        let e = Engines::parse_list("theory, lms").unwrap();
        assert!(e.theory && e.lms && !e.static_taps && !e.iir);
        assert!(!Engines::parse_list("").unwrap().any());
        assert!(Engines::parse_list("theory,foo").is_err());
    }
}
