//! Cooling-load forecasting: feature assembly, in-crate regressors, k-fold
//! tuning and the sliding-window day-ahead / mid-day pipeline.

mod features;
mod forest;
mod gbt;
mod metrics;
mod mlp;
mod model;
mod pipeline;
mod search;
mod tree;

use chrono::{NaiveDate, NaiveDateTime};
use thiserror::Error;

pub use features::{
    anchor_value, assemble_features, AnchorWindow, Dataset, Feature, FeatureMask, FeatureSource, FeatureVector,
    SampleSet,
};
pub use forest::{Forest, MaxFeatures, RfParams};
pub use gbt::{Gbt, GbtParams, Objective};
pub use metrics::{average_metrics, compute_metrics, Metrics};
pub use mlp::{Mlp, MlpParams};
pub use model::{
    clamp_prediction, train_regressor, Algorithm, ForecastModel, Kernel, ModelParams, SvrParams, TrainingWindow,
};
pub use pipeline::{
    day_ahead_predict, midday_modify, read_predictions, tune, write_predictions, DayForecast, Forecaster, MaskChoice,
    MiddayVariant, PipelineConfig, PredictionRecord, TuneReport, HISTORY_DAY_CHOICES, MIDDAY6_HOURS,
    PREDICTION_CSV_HEADER, WINDOW_DAY_CHOICES,
};
pub use search::{
    compare_algorithms, feature_search, fold_indices, grid_search, kfold_cv, AlgorithmScore, CvOptions, FoldMode,
    GridResult, HyperParamGrid, MaskScore,
};

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("invalid forecast configuration: {0}")]
    Config(String),
    #[error("invalid forecast input: {0}")]
    Input(String),
    #[error("missing {what} at {at}")]
    MissingData { what: String, at: NaiveDateTime },
    #[error("inputs do not match the model: {0}")]
    MaskMismatch(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("forecast for {date} needs loads from {needed_from}, available from {}",
        .available_from.map_or_else(|| "nowhere".to_string(), |d| d.to_string()))]
    ShortHistory {
        date: NaiveDate,
        needed_from: NaiveDate,
        available_from: Option<NaiveDate>,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
