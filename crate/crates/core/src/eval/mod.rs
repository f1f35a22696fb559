//! Splits, metrics and the robot-pretraining experiments.

mod distribution;
mod metrics;
mod splits;
mod subjects;
mod svg;
mod sweep;

pub use distribution::{distribution_report, interval_overlap, BoxplotStats, ChannelComparison, DistributionReport};
pub use metrics::{accuracy_of, confusion_matrix, evaluate, Confusion, EvalReport, Regime};
pub use splits::{build_splits, split_counts};
pub use subjects::{subject_protocol, SubjectRow, SubjectTable};
pub use svg::{boxplot_svg, sweep_svg};
pub use sweep::{
    fraction_sweep, spearman, stratified_subset, train_and_evaluate, SweepRow, SweepTable, DEFAULT_FRACTIONS,
};
