//! Experiment runner: configuration, teaching loops, statistics, output files
//! and the convergence-guarantee suites.

pub mod config;
pub mod cost;
pub mod output;
pub mod param_run;
pub mod run;
pub mod setup;
pub mod stats;
pub mod theorem;
pub mod wstar;

pub use config::{Config, ExperimentConfig, TeacherKind};
pub use cost::{cost_scaling, CostReport, CostSettings};
pub use output::{read_trace_csv, render_svg_chart, write_svg_chart, write_trace_csv, ChartConfig, Series};
pub use run::{run_teaching, ConvergenceTrace, TraceRecord};
pub use setup::{prepare, Experiment};
pub use stats::{aggregate, compare, line_fit, paired, sign_test_upper, Curve, LineFit, Ordering, Paired};
pub use theorem::{theorem_suite, TheoremKind, TheoremReport, TheoremSettings};
pub use wstar::compute_wstar;
