//! Configuration, experiments, property suites and reports behind the
//! command line tool.

pub mod config;
pub mod experiments;
pub mod figures;
pub mod report;
pub mod verify;

pub use config::{AdversaryConfig, ExperimentConfig, ExperimentName, SolverConfig, SolverKind};
pub use experiments::run_experiment;
pub use figures::{figure_csv, figure_grid, FigureId, GridSpec};
pub use report::{default_output_dir, Relation, Report, RunOutput, Verdict, OUT_ENV};
pub use verify::{run_suite, Suite, SuiteSizes};
