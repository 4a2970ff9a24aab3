//! Daily case-count ingestion and the forecasting data pipeline:
//! min-max normalization to [-1, 1], chronological train/eval/test split,
//! and sliding-window construction.

mod ingest;
mod pipeline;
pub mod synthetic;

pub use ingest::{infer_format, ingest, Format};
pub use pipeline::{
    feature_matrix, split, NormalizationParams, Split, SplitSpec, Window, WindowedDataset,
    NORM_HI, NORM_LO,
};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// One day of counts. Series must be gap-free with strictly increasing dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailyRecord {
    pub date: NaiveDate,
    pub positive: u64,
    pub deaths: u64,
    pub recovered: u64,
}

/// Feature order used everywhere a feature index appears.
pub const FEATURE_NAMES: [&str; 3] = ["positive", "deaths", "recovered"];
