//! Closed-form reach predictor, the brute-force discovery oracle,
//! connectivity sampling and metrics aggregation.

pub mod connectivity;
pub mod metrics;
pub mod oracle;
pub mod predictor;

pub use connectivity::connectivity_sample;
pub use metrics::{
    aggregate, connectivity_csv, reports_csv, summary_json, ByteCounts, FlowStats, MetricsReport,
    Summary, SummaryStat, TxCounts,
};
pub use oracle::{discovered_set, mc_discovery_oracle, oracle_fraction};
pub use predictor::{predict_discovery_fraction, PredictorInputs, RadiusReading};
