//! Test problems, experiment runner and file formats for the randomized
//! DEIM library.

pub mod error;
pub mod experiment;
pub mod generators;
pub mod io;
pub mod sweep;
pub mod table;

pub use error::{HarnessError, Result};
pub use experiment::{
    run_experiment, BasisKind, ExperimentOutput, ExperimentSpec, Problem, SampleRule, Scale,
    SelectorKind,
};
pub use generators::{gen_corner, gen_osc, gen_source, gen_source_test, SnapshotSet, SourceRanges};
pub use io::{emit_csv, read_matrix, write_matrix};
pub use sweep::{error_sweep, ResultTable};
pub use table::{Cell, Table};
