//! Configuration, manifests, CSV and SVG output, and the command-line front end.

pub mod cli;
pub mod config;
pub mod digest;
pub mod manifest;
pub mod plot;
pub mod runner;
pub mod table;

pub use config::{parse_config, parse_config_str, ExperimentKind, KernelConfig, KernelFamilyName, RunConfig};
pub use manifest::{DigestCheck, RunManifest};
pub use plot::{emit_plot, render_svg, Heatmap, Plot, PlotKind, Series};
pub use runner::{build_artifacts, execute, rerun_from_manifest, sub_run_count, Artifacts};
pub use table::Table;
