//! Benchmark harness for the resampling schemes: simulated-weights accuracy
//! and runtime measurements over a (particle count, Dirichlet alpha) grid,
//! CSV and SVG reporting, and a small linear-Gaussian particle filter demo.

pub mod filter;
pub mod harness;
pub mod report;

pub use filter::{demo_filter, FilterDemoResult, FilterDemoSpec, StepStats};
pub use harness::{
    cell_metropolis_iterations, run_benchmark, summarize, BenchOptions, BenchRun, CellFailure,
    CellSummary, SchemeSpec, TrialRecord,
};
