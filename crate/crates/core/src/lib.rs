//! Core machinery for running improvised shows where some performers speak
//! lines fed to them through an earpiece.
//!
//! * [`textgen`] trains a word n-gram model and samples topic-primed lines.
//! * [`curation`] turns a context line into a ranked, filtered candidate set.
//! * [`show`] is the event-sourced show session: roles, scenes, delivery
//!   queues, latency, voting and transcripts.
//! * [`analytics`] computes lexical features and grouped confidence intervals
//!   over transcripts and audience surveys.

pub mod analytics;
pub mod curation;
pub mod fixtures;
pub mod show;
pub mod source;
pub mod textgen;

pub use source::Source;
