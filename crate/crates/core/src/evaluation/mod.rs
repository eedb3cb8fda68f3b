//! Cross-validated evaluation protocol, metrics and significance tests.

mod metrics;
mod protocol;
mod report;
mod stats;

pub use metrics::{balanced_accuracy, stratified_folds, stratified_partition, FoldAssignment};
pub use protocol::{
    run_experiment, BacRecord, DetectorRecord, ExperimentConfig, ExperimentReport, MemberRecord,
    Method, PValueRow, RankRow,
};
pub use report::{emit_report, REPORT_FILES};
pub use stats::{average_ranks, holm_adjust, wilcoxon_signed_rank, HolmResult, WilcoxonResult};
