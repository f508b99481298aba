//! Experiment runner for the `ehcr` library.
//!
//! Each experiment kind turns an [`ExperimentSpec`] into a [`Table`] and
//! writes it as CSV or JSON next to a manifest holding the full spec, so any
//! result file can be regenerated with `ehcr replay <manifest>`.

pub mod cli;
pub mod grid;
pub mod run;
pub mod spec;
pub mod table;

pub use cli::run_cli;
pub use run::{manifest_path, run_experiment, run_table, spec_from_manifest, RunOutput};
pub use spec::{ExperimentKind, ExperimentSpec, OutputFormat, SolverChoice};
pub use table::{Cell, Table};
