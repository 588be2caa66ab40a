//! Readership and citation bibliometrics.
//!
//! The crate models how articles are read and cited as they age, and turns
//! read/cite event logs into per-author and per-organization productivity
//! measures:
//!
//! - [`corpus`]: bibliographic records, TSV ingestion, whole-corpus summaries.
//! - [`obsolescence`]: the four-mode readership decay model and its fitting.
//! - [`citemodel`]: citation rates derived from the readership model.
//! - [`crosstab`]: binned reads-versus-cites tables and reference-link sessions.
//! - [`metrics`]: normalized counts, SumProd, Read10, percentiles.
//! - [`agemodel`]: the career productivity model and the synthetic corpus generator.
//! - [`rank`]: productivity-percentile comparison of organizations.
//!
//! Every estimator can be checked against corpora produced by
//! [`agemodel::generate`], whose ground truth is written alongside the data.

pub mod agemodel;
pub mod citemodel;
pub mod config;
pub mod corpus;
pub mod crosstab;
pub mod dates;
pub mod metrics;
pub mod obsolescence;
pub mod rank;
pub mod simplex;

pub use corpus::{Corpus, IngestReport};
pub use dates::DateWindow;
pub use obsolescence::{Mode, ModeSet, ObsolescenceModel};
