//! Cognitive distance between publication-producing entities.
//!
//! Three ways of comparing two publication profiles over a shared set of
//! subject categories:
//!
//! * [`barycenter`]: distance between weighted centers on a 2D base map,
//! * [`sapv`]: distance between similarity-adapted publication vectors,
//! * [`wcs`]: weighted cosine similarity under a category similarity matrix.
//!
//! [`ingest`] reads the base-map/similarity network file and CSV inputs,
//! [`analysis`] builds distance tables, rankings, assessor scores and
//! cross-method correlations, and [`cli`] ties it together.

pub mod analysis;
pub mod barycenter;
pub mod cli;
mod error;
pub mod ingest;
pub mod model;
pub mod numeric;
pub mod sapv;
pub mod wcs;

pub use error::ComputeError;
