//! Gold-standard oracles, ranking metrics and the experiment drivers that
//! measure pruning, accuracy, speed and parameter sensitivity.

pub mod experiments;
pub mod metrics;
pub mod oracle;

pub use experiments::{
    parameter_sweep, run_accuracy_experiment, run_pruning_experiment, run_timing_experiment,
    to_csv, tuned_params, write_csv, AccuracyRow, CsvRow, Method, PruningRow, QueryProtocol,
    SweepAxis, SweepRow, TimingRow, Workload,
};
pub use metrics::{mean_stderr, ndcg_at_k, precision_at_k};
pub use oracle::{brute_force_topk, RankedResult};
