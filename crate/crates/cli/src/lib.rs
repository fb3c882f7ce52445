//! File formats, configuration and the command pipeline around `ssi-core`.

pub mod config;
pub mod error;
pub mod ingest;
pub mod pipeline;
pub mod synth;
