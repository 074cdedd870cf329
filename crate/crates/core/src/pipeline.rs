//! End-to-end orchestration: per-entity resample → embed → featurize,
//! merging, holdout splitting, design-matrix assembly and next-value
//! forecasting.
//!
//! Entities are processed independently (and in parallel) and their feature
//! rows merged into one dataset ordered by `(entity_id, target_time)`, so a
//! single model can capture both local and global dynamics.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;

use crate::data::{EntityDataset, IrregularSeries};
use crate::embed::{build_embedding, forecast_row};
use crate::error::{Error, Result};
use crate::features::{
    compute_feature_matrix, compute_feature_row, feature_columns, FeatureConfig, FeatureRow,
};
use crate::learners::{fit, FittedModel, LearnerConfig};
use crate::matrix::DenseMatrix;
use crate::resample::{resample, Aggregator, Imputer, RegularSeries, ResampleConfig};

/// Which design-matrix variant to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Variant {
    /// Lags only, no engineered features.
    Baseline,
    /// Lags plus the full feature catalog.
    Autofits,
    /// Autofits plus externally computed feature columns.
    Merged,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::Baseline => f.write_str("baseline"),
            Variant::Autofits => f.write_str("autofits"),
            Variant::Merged => f.write_str("merged"),
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Variant::Baseline),
            "autofits" => Ok(Variant::Autofits),
            "merged" => Ok(Variant::Merged),
            other => Err(Error::config(format!(
                "unknown variant '{other}' (expected baseline | autofits | merged)"
            ))),
        }
    }
}

/// One lag-schedule rule: frequencies in `[min, max)` use `lag`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagRule {
    pub min: f64,
    /// Open upper bound; `None` means unbounded.
    pub max: Option<f64>,
    pub lag: usize,
}

/// Either one fixed lag or a frequency-dependent schedule.
#[derive(Debug, Clone, PartialEq)]
pub enum LagSpec {
    Fixed(usize),
    Schedule(Vec<LagRule>),
}

impl LagSpec {
    /// The lag for a given (grid-unit) frequency.
    pub fn resolve(&self, frequency: f64) -> Result<usize> {
        match self {
            LagSpec::Fixed(lag) if *lag >= 1 => Ok(*lag),
            LagSpec::Fixed(_) => Err(Error::config("lag must be at least 1")),
            LagSpec::Schedule(rules) => rules
                .iter()
                .find(|r| frequency >= r.min && r.max.is_none_or(|m| frequency < m))
                .map(|r| r.lag)
                .ok_or_else(|| {
                    Error::config(format!("lag schedule does not cover frequency {frequency}"))
                }),
        }
    }

    /// Rejects empty, zero-lag or overlapping schedules.
    pub fn validate(&self) -> Result<()> {
        match self {
            LagSpec::Fixed(lag) => {
                if *lag < 1 {
                    return Err(Error::config("lag must be at least 1"));
                }
            }
            LagSpec::Schedule(rules) => {
                if rules.is_empty() {
                    return Err(Error::config("lag schedule is empty"));
                }
                for rule in rules {
                    if rule.lag < 1 {
                        return Err(Error::config("lag must be at least 1"));
                    }
                    if rule.max.is_some_and(|m| m <= rule.min) {
                        return Err(Error::config("lag rule has max <= min"));
                    }
                }
                for (i, a) in rules.iter().enumerate() {
                    for b in &rules[i + 1..] {
                        let a_end = a.max.unwrap_or(f64::INFINITY);
                        let b_end = b.max.unwrap_or(f64::INFINITY);
                        if a.min < b_end && b.min < a_end {
                            return Err(Error::config("lag schedule ranges overlap"));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Everything one pipeline run needs.
///
/// `frequency` is expressed in grid units (e.g. days); `frequency_scale`
/// converts it to the timestamps' domain units (e.g. 86400 seconds per day).
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub frequency: f64,
    pub frequency_scale: f64,
    pub aggregator: Aggregator,
    pub imputer: Imputer,
    pub lag: LagSpec,
    pub features: FeatureConfig,
    pub variant: Variant,
    pub learner: LearnerConfig,
    pub holdout_fraction: f64,
}

impl PipelineConfig {
    pub fn new(frequency: f64, lag: usize, learner: LearnerConfig) -> Self {
        PipelineConfig {
            frequency,
            frequency_scale: 1.0,
            aggregator: Aggregator::Sum,
            imputer: Imputer::Zero,
            lag: LagSpec::Fixed(lag),
            features: FeatureConfig::default(),
            variant: Variant::Autofits,
            learner,
            holdout_fraction: 0.10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.frequency.is_finite() || self.frequency <= 0.0 {
            return Err(Error::config(format!(
                "frequency must be finite and > 0, got {}",
                self.frequency
            )));
        }
        if !self.frequency_scale.is_finite() || self.frequency_scale <= 0.0 {
            return Err(Error::config("frequency_scale must be finite and > 0"));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(Error::config(format!(
                "holdout fraction must be in (0, 1), got {}",
                self.holdout_fraction
            )));
        }
        if self.learner.forest_trees == 0 {
            return Err(Error::config("forest_trees must be >= 1"));
        }
        if !self.learner.lasso_lambda.is_finite() || self.learner.lasso_lambda < 0.0 {
            return Err(Error::config("lasso_lambda must be >= 0"));
        }
        self.features.validate()?;
        self.lag.validate()?;
        self.lag.resolve(self.frequency)?;
        Ok(())
    }

    /// The same config at a different grid frequency.
    pub fn with_frequency(&self, frequency: f64) -> Self {
        PipelineConfig {
            frequency,
            ..self.clone()
        }
    }

    /// Frequency in domain (timestamp) units.
    pub fn domain_frequency(&self) -> f64 {
        self.frequency * self.frequency_scale
    }

    pub fn resample_config(&self) -> Result<ResampleConfig> {
        ResampleConfig::new(self.domain_frequency(), self.aggregator, self.imputer)
    }

    pub fn resolved_lag(&self) -> Result<usize> {
        self.lag.resolve(self.frequency)
    }
}

/// Result of running one entity through the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum EntityOutcome {
    Rows(Vec<FeatureRow>),
    /// Too few bins for even one embedding row.
    Discarded,
}

fn resample_for(series: &IrregularSeries, cfg: &PipelineConfig) -> Result<RegularSeries> {
    if !series.all_values_finite() {
        return Err(Error::data(format!(
            "entity {:?} has non-finite values; run input imputation first",
            series.entity_id().unwrap_or("")
        )));
    }
    resample(series, &cfg.resample_config()?)
}

/// Resamples, embeds and featurizes one entity; `Discarded` when the entity
/// cannot produce a single embedding row.
pub fn run_entity(series: &IrregularSeries, cfg: &PipelineConfig) -> Result<EntityOutcome> {
    let reg = resample_for(series, cfg)?;
    let emb = build_embedding(&reg, cfg.resolved_lag()?)?;
    if emb.insufficient || emb.rows.is_empty() {
        return Ok(EntityOutcome::Discarded);
    }
    Ok(EntityOutcome::Rows(compute_feature_matrix(
        &emb,
        series,
        &cfg.features,
    )))
}

/// Merged per-entity results plus a discard report.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedRows {
    pub rows: Vec<FeatureRow>,
    pub entities_used: usize,
    pub discarded: Vec<String>,
}

/// Concatenates per-entity rows ordered by `(entity_id, target_time)`.
pub fn merge_entities(mut results: Vec<(String, EntityOutcome)>) -> MergedRows {
    results.sort_by(|a, b| a.0.cmp(&b.0));
    let mut rows = Vec::new();
    let mut discarded = Vec::new();
    let mut entities_used = 0;
    for (entity, outcome) in results {
        match outcome {
            EntityOutcome::Rows(mut entity_rows) => {
                entities_used += 1;
                rows.append(&mut entity_rows);
            }
            EntityOutcome::Discarded => discarded.push(entity),
        }
    }
    MergedRows {
        rows,
        entities_used,
        discarded,
    }
}

/// Runs every entity (in parallel) and merges the results.
pub fn run_dataset(dataset: &EntityDataset, cfg: &PipelineConfig) -> Result<MergedRows> {
    let entities: Vec<(&str, &IrregularSeries)> = dataset.entities().collect();
    let results: Result<Vec<(String, EntityOutcome)>> = entities
        .par_iter()
        .map(|(id, series)| Ok((id.to_string(), run_entity(series, cfg)?)))
        .collect();
    Ok(merge_entities(results?))
}

/// Time-ordered train/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    pub train: Vec<FeatureRow>,
    pub test: Vec<FeatureRow>,
}

/// Per entity, the last `ceil(fraction * n)` rows become the test set.
///
/// Entities with a single row contribute it to the training set only, and at
/// least one training row is always kept per entity.
pub fn holdout_split(rows: &[FeatureRow], fraction: f64) -> Result<SplitDataset> {
    if rows.is_empty() {
        return Err(Error::data("cannot split an empty feature set"));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::config(format!(
            "holdout fraction must be in (0, 1), got {fraction}"
        )));
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let entity = &rows[start].entity_id;
        let mut end = start + 1;
        while end < rows.len() && rows[end].entity_id == *entity {
            end += 1;
        }
        let entity_rows = &rows[start..end];
        let n = entity_rows.len();
        let test_count = if n == 1 {
            0
        } else {
            ((fraction * n as f64).ceil() as usize).min(n - 1)
        };
        let boundary = n - test_count;
        train.extend_from_slice(&entity_rows[..boundary]);
        test.extend_from_slice(&entity_rows[boundary..]);
        start = end;
    }
    Ok(SplitDataset { train, test })
}

/// Externally computed feature columns, joined on `(entity_id, target_time)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalFeatures {
    columns: Vec<String>,
    map: HashMap<(String, u64), Vec<f64>>,
}

impl ExternalFeatures {
    /// Loads a bundle CSV with header `entity_id,target_time,<feature...>`.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Io(std::io::Error::other(format!("{}: {e}", path.display()))))?;
        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| Error::schema(format!("cannot read header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        if headers.len() < 3 || headers[0] != "entity_id" || headers[1] != "target_time" {
            return Err(Error::schema(
                "external feature file must start with entity_id,target_time and carry at least one feature column",
            ));
        }
        let columns: Vec<String> = headers[2..].to_vec();
        let mut map = HashMap::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::data(format!("csv read error: {e}")))?;
            let line = record.position().map_or(0, |p| p.line());
            let entity = record.get(0).unwrap_or("").to_string();
            let time: f64 = record
                .get(1)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: "bad target_time".to_string(),
                })?;
            let mut values = Vec::with_capacity(columns.len());
            for i in 0..columns.len() {
                let text = record.get(2 + i).unwrap_or("");
                let value: f64 = text.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("bad value '{text}' in column '{}'", columns[i]),
                })?;
                values.push(value);
            }
            map.insert((entity, time.to_bits()), values);
        }
        Ok(ExternalFeatures { columns, map })
    }

    pub fn from_rows(
        columns: Vec<String>,
        rows: impl IntoIterator<Item = (String, f64, Vec<f64>)>,
    ) -> Self {
        let map = rows
            .into_iter()
            .map(|(entity, time, values)| ((entity, time.to_bits()), values))
            .collect();
        ExternalFeatures { columns, map }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn get(&self, entity_id: Option<&str>, target_time: f64) -> Option<&[f64]> {
        self.map
            .get(&(entity_id.unwrap_or("").to_string(), target_time.to_bits()))
            .map(Vec::as_slice)
    }
}

/// An assembled design matrix with named columns and the target vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub columns: Vec<String>,
    pub matrix: DenseMatrix,
    pub targets: Vec<f64>,
}

/// Builds the design matrix for a variant.
///
/// Baseline keeps the lag columns only; autofits appends the feature catalog;
/// merged additionally joins external columns on `(entity_id, target_time)`.
/// Raw timestamps never enter the design.
pub fn assemble_variant(
    rows: &[FeatureRow],
    cfg: &FeatureConfig,
    variant: Variant,
    external: Option<&ExternalFeatures>,
) -> Result<DesignMatrix> {
    let lag = rows.first().map_or(0, |r| r.lags.len());
    let mut columns: Vec<String> = (1..=lag).map(|i| format!("lag_{i}")).collect();
    if variant != Variant::Baseline {
        columns.extend(feature_columns(cfg));
    }
    let external = match variant {
        Variant::Merged => Some(external.ok_or_else(|| {
            Error::config("merged variant requires an external feature bundle")
        })?),
        _ => None,
    };
    if let Some(ext) = external {
        columns.extend(ext.columns().iter().cloned());
    }

    let mut data = Vec::with_capacity(rows.len());
    let mut targets = Vec::with_capacity(rows.len());
    let mut missing: Vec<String> = Vec::new();
    for row in rows {
        let mut design_row = row.lags.clone();
        if variant != Variant::Baseline {
            design_row.extend_from_slice(&row.features);
        }
        if let Some(ext) = external {
            match ext.get(row.entity_id.as_deref(), row.target_time) {
                Some(values) => design_row.extend_from_slice(values),
                None => {
                    missing.push(format!(
                        "({}, {})",
                        row.entity_id.as_deref().unwrap_or(""),
                        row.target_time
                    ));
                    continue;
                }
            }
        }
        data.push(design_row);
        targets.push(row.target);
    }

    if !missing.is_empty() {
        let shown = missing.iter().take(10).cloned().collect::<Vec<_>>().join(", ");
        let suffix = if missing.len() > 10 {
            format!(" and {} more", missing.len() - 10)
        } else {
            String::new()
        };
        return Err(Error::data(format!(
            "external feature bundle misses {} keys: {shown}{suffix}",
            missing.len()
        )));
    }

    Ok(DesignMatrix {
        columns,
        matrix: DenseMatrix::from_rows(&data),
        targets,
    })
}

/// A next-value prediction for one entity.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub entity_id: Option<String>,
    pub target_time: f64,
    pub prediction: f64,
}

fn entity_forecast_feature_row(
    series: &IrregularSeries,
    cfg: &PipelineConfig,
) -> Result<Option<FeatureRow>> {
    let reg = resample_for(series, cfg)?;
    let lag = cfg.resolved_lag()?;
    if reg.len() <= lag {
        return Ok(None);
    }
    let row = forecast_row(&reg, lag).expect("len > lag implies a forecast row");
    Ok(Some(compute_feature_row(
        &row,
        series,
        reg.frequency(),
        &cfg.features,
    )))
}

fn predict_rows(
    model: &FittedModel,
    rows: &[FeatureRow],
    cfg: &PipelineConfig,
) -> Result<Vec<f64>> {
    let design = assemble_variant(rows, &cfg.features, cfg.variant, None)?;
    model.predict(&design.matrix)
}

/// Trains on all of one entity's feature rows and predicts the value of the
/// bin starting right after the observed span.
pub fn forecast_next(series: &IrregularSeries, cfg: &PipelineConfig) -> Result<Forecast> {
    let rows = match run_entity(series, cfg)? {
        EntityOutcome::Rows(rows) => rows,
        EntityOutcome::Discarded => {
            return Err(Error::data(format!(
                "entity {:?}: insufficient observations to forecast",
                series.entity_id().unwrap_or("")
            )))
        }
    };
    let design = assemble_variant(&rows, &cfg.features, cfg.variant, None)?;
    let model = fit(&cfg.learner, &design.matrix, &design.targets)?;
    let forecast_features = entity_forecast_feature_row(series, cfg)?
        .expect("a non-discarded entity has a forecast row");
    let target_time = forecast_features.target_time;
    let prediction = predict_rows(&model, &[forecast_features], cfg)?[0];
    Ok(Forecast {
        entity_id: series.entity_id().map(str::to_string),
        target_time,
        prediction,
    })
}

/// Trains one global model on the merged rows and emits one forecast per
/// retained entity. Returns the forecasts and the discarded entity ids.
pub fn forecast_dataset(
    dataset: &EntityDataset,
    cfg: &PipelineConfig,
) -> Result<(Vec<Forecast>, Vec<String>)> {
    let merged = run_dataset(dataset, cfg)?;
    if merged.rows.is_empty() {
        return Err(Error::data("all entities discarded: nothing to forecast"));
    }
    let design = assemble_variant(&merged.rows, &cfg.features, cfg.variant, None)?;
    let model = fit(&cfg.learner, &design.matrix, &design.targets)?;

    let mut forecasts = Vec::new();
    for (id, series) in dataset.entities() {
        if merged.discarded.iter().any(|d| d == id) {
            continue;
        }
        let row = entity_forecast_feature_row(series, cfg)?
            .expect("retained entities have a forecast row");
        let target_time = row.target_time;
        let prediction = predict_rows(&model, &[row], cfg)?[0];
        forecasts.push(Forecast {
            entity_id: series.entity_id().map(str::to_string),
            target_time,
            prediction,
        });
    }
    Ok((forecasts, merged.discarded))
}
