//! Dataset ingestion and preprocessing.

mod dataset;
pub mod ihepc;
pub mod normalize;
pub mod ts;
pub mod ucr;
pub mod windows;

pub use dataset::TimeSeriesDataset;
pub use ihepc::{load_ihepc, load_long_series, parse_ihepc, LongSeries};
pub use normalize::{normalize, NormStats};
pub use ts::{load_ts, parse_ts, write_ts};
pub use ucr::{load_ucr_tsv, parse_ucr};
pub use windows::{
    mean_discrepancy_targets, sliding_windows, split_ihepc, window_starts, DAY_WINDOW, IHEPC_TRAIN_LEN,
    QUARTER_WINDOW,
};
