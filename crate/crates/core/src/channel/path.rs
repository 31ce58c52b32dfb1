use rand::Rng;
use serde::{Deserialize, Serialize};

use super::section::draw_link;
use super::{link_response, FilterSpec, FreqResponse, FrequencyGrid, LinkSpec, SectionParams};
use crate::{Error, Result};

/// Where an in-line filter sits. Links are indexed from 0.
///
/// Along the path, the end of link `i` is followed first by the noise injected
/// there and then by the filters placed `BeforeLink(i + 1)` (or `Rx` after
/// the last link). `Tx` filters precede every link and every injection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterPlacement {
    Tx,
    BeforeLink(usize),
    Rx,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacedFilter {
    pub placement: FilterPlacement,
    pub filter: FilterSpec,
}

/// ASE injected at the output of link `after_link`, carrying `fraction` of the
/// total noise level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseInjection {
    pub after_link: usize,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub links: Vec<LinkSpec>,
    #[serde(default)]
    pub filters: Vec<PlacedFilter>,
    /// Empty means equal shares at the output of every link.
    #[serde(default)]
    pub noise_injections: Vec<NoiseInjection>,
    /// Scale every link to unit mean power gain (the amplifier after each
    /// link restores the average launch power).
    #[serde(default = "default_true")]
    pub normalize_links: bool,
}

fn default_true() -> bool {
    true
}

impl PathSpec {
    /// Path with no filters and equal noise shares after each link.
    pub fn new(links: Vec<LinkSpec>) -> Self {
        Self {
            links,
            filters: Vec::new(),
            noise_injections: Vec::new(),
            normalize_links: true,
        }
    }

    /// `count` identical links.
    pub fn uniform(link: LinkSpec, count: usize) -> Self {
        Self::new(vec![link; count])
    }

    pub fn with_filters(mut self, filters: Vec<PlacedFilter>) -> Self {
        self.filters = filters;
        self
    }

    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    pub fn dim(&self) -> usize {
        self.links.first().map_or(0, LinkSpec::dim)
    }

    /// One copy of `filter` per link, all at the transmitter.
    pub fn filters_at_tx(&self, filter: FilterSpec) -> Vec<PlacedFilter> {
        vec![
            PlacedFilter {
                placement: FilterPlacement::Tx,
                filter
            };
            self.n_links()
        ]
    }

    /// One copy of `filter` per link, all at the receiver.
    pub fn filters_at_rx(&self, filter: FilterSpec) -> Vec<PlacedFilter> {
        vec![
            PlacedFilter {
                placement: FilterPlacement::Rx,
                filter
            };
            self.n_links()
        ]
    }

    /// One copy of `filter` at the end of every link.
    pub fn filters_distributed(&self, filter: FilterSpec) -> Vec<PlacedFilter> {
        (1..=self.n_links())
            .map(|i| PlacedFilter {
                placement: if i == self.n_links() {
                    FilterPlacement::Rx
                } else {
                    FilterPlacement::BeforeLink(i)
                },
                filter,
            })
            .collect()
    }

    /// The injections in effect: the explicit list, or equal shares.
    pub fn injections(&self) -> Vec<NoiseInjection> {
        if !self.noise_injections.is_empty() {
            return self.noise_injections.clone();
        }
        let l = self.n_links();
        (0..l)
            .map(|i| NoiseInjection {
                after_link: i,
                fraction: 1.0 / l as f64,
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .links
            .first()
            .ok_or_else(|| Error::InvalidSpec("path without links".into()))?;
        for (i, link) in self.links.iter().enumerate() {
            link.validate()?;
            if link.n_modes != first.n_modes {
                return Err(Error::InvalidSpec(format!(
                    "link {i} has {} modes, link 0 has {}",
                    link.n_modes, first.n_modes
                )));
            }
        }
        for pf in &self.filters {
            pf.filter.validate()?;
            if let FilterPlacement::BeforeLink(i) = pf.placement {
                if i >= self.n_links() {
                    return Err(Error::InvalidSpec(format!(
                        "filter placed before link {i} of a {}-link path",
                        self.n_links()
                    )));
                }
            }
        }
        let mut total = 0.0;
        for inj in &self.noise_injections {
            if inj.after_link >= self.n_links() {
                return Err(Error::InvalidSpec(format!(
                    "noise injected after link {} of a {}-link path",
                    inj.after_link,
                    self.n_links()
                )));
            }
            if !(inj.fraction > 0.0) || !inj.fraction.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "noise fraction must be positive, got {}",
                    inj.fraction
                )));
            }
            total += inj.fraction;
        }
        if !self.noise_injections.is_empty() && (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!(
                "noise fractions sum to {total}, expected 1"
            )));
        }
        Ok(())
    }

    /// Draw the sections of every link, link by link, from one stream.
    pub fn draw_sections<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<Vec<SectionParams>>> {
        self.validate()?;
        self.links.iter().map(|l| draw_link(rng, l)).collect()
    }
}

/// Total response of a path and, per noise injection, everything downstream.
#[derive(Clone, Debug)]
pub struct PathResponse {
    pub total: FreqResponse,
    pub downstream: Vec<FreqResponse>,
    pub fractions: Vec<f64>,
}

enum Stage<'a> {
    Filter(&'a FilterSpec),
    Link(&'a FreqResponse),
    Injection(usize),
}

/// Cascade already computed link responses with the filters and injections of
/// `path`. Lets one channel draw be reused under several filter placements.
pub fn compose_path(path: &PathSpec, links: &[FreqResponse]) -> Result<PathResponse> {
    path.validate()?;
    if links.len() != path.n_links() {
        return Err(Error::DimensionMismatch(format!(
            "{} link responses for a {}-link path",
            links.len(),
            path.n_links()
        )));
    }
    for l in &links[1..] {
        links[0].check_compatible(l)?;
    }
    if links[0].dim() != path.dim() {
        return Err(Error::DimensionMismatch(format!(
            "link responses of dimension {} for a {}-dimensional path",
            links[0].dim(),
            path.dim()
        )));
    }
    let injections = path.injections();
    let filters_at = |p: FilterPlacement| {
        path.filters
            .iter()
            .filter(move |pf| pf.placement == p)
            .map(|pf| Stage::Filter(&pf.filter))
    };
    let mut stages: Vec<Stage> = filters_at(FilterPlacement::Tx).collect();
    for (i, link) in links.iter().enumerate() {
        stages.extend(filters_at(FilterPlacement::BeforeLink(i)));
        stages.push(Stage::Link(link));
        stages.extend(
            injections
                .iter()
                .enumerate()
                .filter(|(_, inj)| inj.after_link == i)
                .map(|(j, _)| Stage::Injection(j)),
        );
    }
    stages.extend(filters_at(FilterPlacement::Rx));

    // Walk backwards accumulating the suffix product.
    let grid = *links[0].grid();
    let mut suffix = FreqResponse::identity(grid, path.dim());
    let mut downstream: Vec<Option<FreqResponse>> = vec![None; injections.len()];
    for stage in stages.iter().rev() {
        match stage {
            Stage::Injection(j) => downstream[*j] = Some(suffix.clone()),
            Stage::Filter(f) => {
                let gains: Vec<f64> = grid.frequencies().map(|x| f.gain(x)).collect();
                suffix.scale_bins(&gains);
            }
            Stage::Link(h) => suffix = h.then(&suffix)?,
        }
    }
    Ok(PathResponse {
        total: suffix,
        downstream: downstream
            .into_iter()
            .map(|d| d.expect("every injection is on the path"))
            .collect(),
        fractions: injections.iter().map(|i| i.fraction).collect(),
    })
}

/// Responses of every link of a drawn realization, normalized to unit mean
/// power gain when the path asks for it.
pub fn link_responses(
    path: &PathSpec,
    sections: &[Vec<SectionParams>],
    grid: &FrequencyGrid,
) -> Result<Vec<FreqResponse>> {
    sections
        .iter()
        .map(|s| {
            let mut h = link_response(s, grid)?;
            if path.normalize_links {
                h.normalize_power();
            }
            Ok(h)
        })
        .collect()
}

/// Draw a channel realization for `path` and cascade it on `grid`.
pub fn path_response<R: Rng + ?Sized>(
    path: &PathSpec,
    rng: &mut R,
    grid: &FrequencyGrid,
) -> Result<PathResponse> {
    let sections = path.draw_sections(rng)?;
    compose_path(path, &link_responses(path, &sections, grid)?)
}
