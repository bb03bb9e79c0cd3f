//! Replicated experiments: parameter sweeps, method comparisons, summary
//! statistics and CSV output.
//!
//! Runs execute in parallel but results are always gathered in
//! (cell, run) order, so outputs do not depend on scheduling.

mod csv;
mod experiment;
mod stats;

pub use csv::{fmt_real, write_comparison, write_sweep};
pub use experiment::{
    comparison_methods, optimal_m2mgs, optimal_rca, run_comparison, run_methods, run_sweep, summarize_cell,
    verify_allocation, ComparisonResult, ExperimentSpec, Metric, RunRecord, SweepCell, SweepGrid, SweepResult,
};
pub use stats::{paired_t_test, quantile_sorted, summarize, PairedTest, SummaryStats};
