//! SDM channel synthesis.
//!
//! A link is a cascade of `K` sections; each section couples the `2N`
//! tributaries through a pair of Haar unitaries around a diagonal of
//! mode-dependent gains and delays. Links, in-line super-Gaussian filters and
//! noise injection points form the target path. The path yields the total
//! response `H(f)` and, for every noise injection, the cascade downstream of
//! it, from which the colored noise covariance and its whitening transform
//! follow.

mod filter;
mod noise;
mod path;
mod response;
mod section;

pub use filter::FilterSpec;
pub use noise::{is_white, noise_covariance, whiten, whitening_filter, WHITENING_FLOOR};
pub use path::{
    compose_path, link_responses, path_response, FilterPlacement, NoiseInjection, PathResponse, PathSpec, PlacedFilter,
};
pub use response::{FreqResponse, FrequencyGrid};
pub use section::{
    draw_link, draw_section, haar_unitary, link_response, section_response, LinkSpec, SectionParams,
};
