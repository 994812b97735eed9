//! Removes handwritten marginal annotations from scanned printed-document
//! images and recovers printed text erroneously stripped with the margins.
//!
//! The pipeline works in two stages. Stage one finds the body rectangle from
//! smoothed projection profiles and strips everything outside it in one
//! stretch ([`profile`]). Stage two analyses connected components to bring
//! erroneously stripped printed text back from the margin strips: broken
//! lines at the horizontal boundaries, missed lines (headers), vertical
//! fragments beside body text lines, and the page number ([`recovery`]).
//! [`metrics`] carries the evaluation arithmetic and [`synthgen`] a
//! reproducible synthetic ground-truth corpus.

pub mod components;
pub mod error;
pub mod metrics;
pub mod preprocess;
pub mod profile;
pub mod raster;
pub mod recovery;
pub mod synthgen;

pub use error::{Error, Result};
