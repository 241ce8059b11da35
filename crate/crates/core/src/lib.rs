//! Quality and usage scoring for tabular datasets, plus the subset-selection
//! and dashboard engines built on top of those scores.
//!
//! The modules mirror the workflow: [`table`] ingests CSV, [`constraint`]
//! parses correctness rules, [`quality`] and [`usage`] score attributes and
//! records, [`subset`] tracks an analyst's filters and selections, and
//! [`dashboard`] turns chart specifications into data series.

pub mod constraint;
pub mod dashboard;
pub mod exec;
pub mod quality;
pub mod subset;
#[cfg(feature = "synth")]
pub mod synth;
pub mod table;
pub mod usage;

pub use exec::Execution;
