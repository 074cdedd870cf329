//! Feature extraction and forecasting for unevenly spaced time series.
//!
//! Unevenly spaced ("irregular") series are usually forced onto a regular
//! grid before forecasting, which throws away the information carried by
//! *when* observations happened. This crate keeps that information: it
//! resamples a series onto a grid, builds a time-delay embedding over the
//! grid, and then augments each embedding row with statistics computed from
//! the original observations that fall inside the row's time window —
//! inter-arrival statistics, timestamp entropy, window geometry and
//! small-model autopredictability — before handing the rows to a learner.
//!
//! The high-level flow:
//!
//! 1. [`data::load_csv`] — ingest and group observations per entity.
//! 2. [`resample::resample`] — aggregate into fixed-width bins, remembering
//!    which source observations landed in each bin.
//! 3. [`embed::build_embedding`] — lag matrix over the binned values.
//! 4. [`features::compute_feature_matrix`] — the irregularity feature
//!    catalog per embedding row.
//! 5. [`pipeline`] / [`eval`] — holdout evaluation, frequency sweeps and
//!    next-value forecasting with a LASSO or random-forest learner.

pub mod data;
pub mod embed;
pub mod error;
pub mod eval;
pub mod features;
pub mod learners;
pub mod matrix;
pub mod pipeline;
pub mod resample;
mod stats;

pub use data::{
    impute_input_missing, load_csv, save_csv, split_date_components, validate, ColumnSpec,
    EntityDataset, ImputeOutcome, ImputeStrategy, IrregularSeries, Observation, TimestampMode,
    ValidationReport, ANONYMOUS_ENTITY,
};
pub use embed::{build_embedding, window_observations, EmbeddingMatrix, EmbeddingRow};
pub use error::{Error, Result};
pub use eval::{
    mae, r2, run_sweep, summarize_wins, CellStatus, SweepCell, SweepGrid, SweepReport, WinSummary,
};
pub use features::{compute_feature_matrix, compute_feature_row, feature_columns, Feature, FeatureConfig, FeatureRow};
pub use learners::{FittedModel, LearnerConfig, LearnerKind};
pub use matrix::DenseMatrix;
pub use pipeline::{
    assemble_variant, forecast_dataset, forecast_next, holdout_split, merge_entities, run_dataset,
    run_entity, DesignMatrix, EntityOutcome, ExternalFeatures, Forecast, LagRule, LagSpec,
    MergedRows, PipelineConfig, SplitDataset, Variant,
};
pub use resample::{bin_index, resample, Aggregator, Imputer, RegularSeries, ResampleConfig};
