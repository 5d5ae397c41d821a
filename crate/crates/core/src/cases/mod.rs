//! Test cases, run configuration, driver and output.

pub mod bench;
pub mod config;
pub mod driver;
pub mod init;
pub mod output;
pub mod tagging;

pub use bench::{fusion_benchmark, BenchRow};
pub use config::{Case, OutputFormat, RunConfig, ShearLayerParams};
pub use driver::{run_simulation, RunSummary, Simulation};
pub use init::{init_implosion, init_shear_layer};
pub use output::{schlieren, write_snapshot};
pub use tagging::tag_patches;
