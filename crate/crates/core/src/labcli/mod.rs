//! Experiment harness: monolithic reference solver, error metrics,
//! manufactured solutions, scenario configuration, CSV reports and the
//! built-in acceptance checks.

pub mod acceptance;
pub mod config;
pub mod metrics;
pub mod mms;
pub mod monolithic;
pub mod report;
pub mod sampling;
pub mod scenario;

pub use config::ScenarioConfig;
pub use metrics::{monotone_gap, xi_norm_error};
pub use monolithic::{solve_monolithic, Monolithic};
pub use report::CsvReport;
pub use scenario::run_scenario;
