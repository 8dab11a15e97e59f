//! Configuration-driven experiment runner: accuracy tables, the
//! asymptotic-preserving sweep, time-dependent examples and the invariant
//! check suite.

pub mod check;
pub mod config;
pub mod examples;
pub mod norms;
pub mod output;
pub mod run;
pub mod studies;

pub use check::{run_check_suite, CheckOutcome};
pub use config::{ExperimentConfig, ExperimentKind};
pub use examples::{run_example, ExampleReport};
pub use norms::{compute_error_norms, ErrorNorms, Norm};
pub use studies::{least_squares_slope, run_accuracy_study, run_ap_sweep, AccuracyTable, ApSweepResult};
