//! Validated retweet-network analysis pipeline.
//!
//! Stages run over a directory of flat files; see [`pipeline`].

pub mod build;
pub mod config;
pub mod error;
pub mod ingest;
pub mod pipeline;
pub mod synth;

pub use config::Config;
pub use error::{PipelineError, Result};
pub use nullnet_core;
pub use pipeline::{run_pipeline, run_stage, RunManifest, Stage};
