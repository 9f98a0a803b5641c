//! Proximity burden of environmental hazards on school populations.
//!
//! For each school the burden is its share of neighbourhood students times
//! the hazard exposure within a fixed radius (a count of point or polygon
//! sources, or kilometres of road). Zone burden is the sum over the schools
//! a zone contains. Zone burdens are then classified for choropleth display
//! and compared across zone scales and demographics.

pub mod burden;
pub mod classify;
pub mod config;
pub mod engine;
pub mod geo;
pub mod index;
pub mod ingest;
pub mod output;
pub mod par;
pub mod stats;

pub use engine::{Dataset, RunOutput, RunRequest};
pub use par::Parallelism;

/// Engine version recorded in run metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
