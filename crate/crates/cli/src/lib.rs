//! Command-line pipeline around the `topoclust` library: ensemble ingestion
//! or synthesis, diagram computation, k sweeps, AIC/BIC selection and report
//! emission.

pub mod commands;
pub mod config;
pub mod pipeline;

pub use commands::{main_with_args, Cli, ClusterFile, Command};
pub use config::{Dim, FamilySelection, InputSource, RunConfig, SynthSpec, Threads, Threshold};
pub use pipeline::{run_pipeline, Report, REPORT_FILE};
