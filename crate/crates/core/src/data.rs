//! Data model and CSV ingestion for unevenly spaced series.
//!
//! A dataset holds one [`IrregularSeries`] per entity. Timestamps are plain
//! 64-bit reals in domain units: calendar data is normalized to epoch seconds
//! at load time, purely numeric timestamps (e.g. years before present) are
//! used raw, so downstream arithmetic never cares which kind it started as.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, TimeZone, Timelike, Utc};

use crate::error::{Error, Result};

/// Key under which a dataset without an entity column stores its single series.
pub const ANONYMOUS_ENTITY: &str = "";

/// One observation: a timestamp, the target value, and optional extra columns.
///
/// `aux` is positionally aligned with the owning series' `aux_columns`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub timestamp: f64,
    pub value: f64,
    pub aux: Vec<f64>,
}

/// Sorted observations for one entity.
#[derive(Debug, Clone, PartialEq)]
pub struct IrregularSeries {
    entity_id: Option<String>,
    aux_columns: Vec<String>,
    observations: Vec<Observation>,
}

impl IrregularSeries {
    /// Builds a series, sorting observations by timestamp.
    ///
    /// Timestamps must be finite; values may be non-finite until
    /// [`impute_input_missing`] has run. Duplicate timestamps are allowed.
    pub fn new(
        entity_id: Option<String>,
        aux_columns: Vec<String>,
        mut observations: Vec<Observation>,
    ) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::data(format!(
                "entity {:?}: a series needs at least one observation",
                entity_id.as_deref().unwrap_or(ANONYMOUS_ENTITY)
            )));
        }
        for obs in &observations {
            if !obs.timestamp.is_finite() {
                return Err(Error::data("non-finite timestamp"));
            }
            if obs.aux.len() != aux_columns.len() {
                return Err(Error::data("aux width does not match aux schema"));
            }
        }
        observations.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        Ok(IrregularSeries {
            entity_id,
            aux_columns,
            observations,
        })
    }

    pub fn entity_id(&self) -> Option<&str> {
        self.entity_id.as_deref()
    }

    pub fn aux_columns(&self) -> &[String] {
        &self.aux_columns
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn timestamps(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().map(|o| o.timestamp)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().map(|o| o.value)
    }

    /// True when every value and aux entry is finite.
    pub fn all_values_finite(&self) -> bool {
        self.observations
            .iter()
            .all(|o| o.value.is_finite() && o.aux.iter().all(|v| v.is_finite()))
    }
}

/// Column names of the loaded file, kept for re-serialization.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSchema {
    pub entity_column: Option<String>,
    pub timestamp_column: String,
    pub value_column: String,
    pub aux_columns: Vec<String>,
}

/// A collection of entities sharing one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityDataset {
    schema: DatasetSchema,
    entities: BTreeMap<String, IrregularSeries>,
}

impl EntityDataset {
    pub fn new(schema: DatasetSchema, entities: BTreeMap<String, IrregularSeries>) -> Result<Self> {
        for series in entities.values() {
            if series.aux_columns() != schema.aux_columns.as_slice() {
                return Err(Error::schema("entity aux schema differs from dataset schema"));
            }
        }
        Ok(EntityDataset { schema, entities })
    }

    pub fn schema(&self) -> &DatasetSchema {
        &self.schema
    }

    /// Entities in ascending id order.
    pub fn entities(&self) -> impl Iterator<Item = (&str, &IrregularSeries)> {
        self.entities.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn get(&self, entity_id: &str) -> Option<&IrregularSeries> {
        self.entities.get(entity_id)
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn total_observations(&self) -> usize {
        self.entities.values().map(IrregularSeries::len).sum()
    }
}

/// How to interpret the timestamp column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimestampMode {
    /// Plain real numbers in domain units.
    Numeric,
    /// ISO-8601 date or datetime; UTC assumed when no offset is given.
    Iso8601,
}

/// Column mapping for [`load_csv`].
#[derive(Debug, Clone)]
pub struct ColumnSpec {
    pub timestamp: String,
    pub value: String,
    pub entity: Option<String>,
    pub timestamp_mode: TimestampMode,
    /// Columns discarded at load time.
    pub drop: Vec<String>,
}

impl ColumnSpec {
    pub fn new(timestamp: impl Into<String>, value: impl Into<String>) -> Self {
        ColumnSpec {
            timestamp: timestamp.into(),
            value: value.into(),
            entity: None,
            timestamp_mode: TimestampMode::Numeric,
            drop: Vec::new(),
        }
    }

    pub fn with_entity(mut self, entity: impl Into<String>) -> Self {
        self.entity = Some(entity.into());
        self
    }

    pub fn with_timestamp_mode(mut self, mode: TimestampMode) -> Self {
        self.timestamp_mode = mode;
        self
    }

    pub fn with_drop(mut self, drop: Vec<String>) -> Self {
        self.drop = drop;
        self
    }
}

fn parse_iso8601(text: &str) -> Option<f64> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        return Some(dt.timestamp() as f64 + f64::from(dt.timestamp_subsec_nanos()) * 1e-9);
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(text, fmt) {
            let dt = Utc.from_utc_datetime(&naive);
            return Some(dt.timestamp() as f64 + f64::from(dt.timestamp_subsec_nanos()) * 1e-9);
        }
    }
    if let Ok(date) = NaiveDate::parse_from_str(text, "%Y-%m-%d") {
        let dt = Utc.from_utc_datetime(&date.and_hms_opt(0, 0, 0).unwrap());
        return Some(dt.timestamp() as f64);
    }
    None
}

fn is_missing_token(text: &str) -> bool {
    matches!(text, "" | "NA" | "N/A" | "na" | "nan" | "NaN" | "null" | "NULL")
}

/// Parses an aux cell: numeric first, then ISO-8601 (stored as epoch seconds).
fn parse_aux_cell(text: &str) -> Option<f64> {
    let trimmed = text.trim();
    if is_missing_token(trimmed) {
        return Some(f64::NAN);
    }
    if let Ok(v) = trimmed.parse::<f64>() {
        return Some(v);
    }
    parse_iso8601(trimmed)
}

/// Loads a CSV file into one series per entity.
///
/// Rows are grouped by the entity column (a single anonymous entity when none
/// is configured) and sorted by timestamp within each entity. Columns that are
/// neither mapped nor dropped become aux columns; empty value/aux cells load
/// as NaN for [`impute_input_missing`] to resolve.
pub fn load_csv(path: &Path, spec: &ColumnSpec) -> Result<EntityDataset> {
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
    if headers.is_empty() {
        return Err(Error::data(format!("{}: empty file", path.display())));
    }

    let find = |name: &str| headers.iter().position(|h| h == name);
    let ts_idx = find(&spec.timestamp)
        .ok_or_else(|| Error::schema(format!("missing timestamp column '{}'", spec.timestamp)))?;
    let value_idx = find(&spec.value)
        .ok_or_else(|| Error::schema(format!("missing value column '{}'", spec.value)))?;
    let entity_idx = match &spec.entity {
        Some(name) => Some(
            find(name).ok_or_else(|| Error::schema(format!("missing entity column '{name}'")))?,
        ),
        None => None,
    };
    for dropped in &spec.drop {
        if find(dropped).is_none() {
            return Err(Error::schema(format!("drop column '{dropped}' not in header")));
        }
    }

    let mut aux_indices = Vec::new();
    let mut aux_columns = Vec::new();
    for (idx, name) in headers.iter().enumerate() {
        let reserved = idx == ts_idx || idx == value_idx || Some(idx) == entity_idx;
        if !reserved && !spec.drop.iter().any(|d| d == name) {
            aux_indices.push(idx);
            aux_columns.push(name.clone());
        }
    }

    let mut grouped: BTreeMap<String, Vec<Observation>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::data(format!("csv read error: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        let row_err = |message: String| Error::Parse { line, message };

        let field = |idx: usize| -> Result<&str> {
            record
                .get(idx)
                .ok_or_else(|| row_err(format!("row has {} fields, expected {}", record.len(), headers.len())))
        };

        let ts_text = field(ts_idx)?;
        let timestamp = match spec.timestamp_mode {
            TimestampMode::Numeric => ts_text
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| row_err(format!("bad numeric timestamp '{ts_text}'")))?,
            TimestampMode::Iso8601 => parse_iso8601(ts_text)
                .ok_or_else(|| row_err(format!("bad ISO-8601 timestamp '{ts_text}'")))?,
        };

        let value_text = field(value_idx)?;
        let value = if is_missing_token(value_text) {
            f64::NAN
        } else {
            value_text
                .parse::<f64>()
                .map_err(|_| row_err(format!("bad value '{value_text}'")))?
        };

        let mut aux = Vec::with_capacity(aux_indices.len());
        for (&idx, name) in aux_indices.iter().zip(&aux_columns) {
            let text = field(idx)?;
            let parsed = parse_aux_cell(text)
                .ok_or_else(|| row_err(format!("bad value '{text}' in column '{name}'")))?;
            aux.push(parsed);
        }

        let entity = match entity_idx {
            Some(idx) => field(idx)?.to_string(),
            None => ANONYMOUS_ENTITY.to_string(),
        };
        grouped.entry(entity).or_default().push(Observation {
            timestamp,
            value,
            aux,
        });
    }

    if grouped.is_empty() {
        return Err(Error::data(format!("{}: no data rows", path.display())));
    }

    let mut entities = BTreeMap::new();
    for (entity, observations) in grouped {
        let entity_id = if entity_idx.is_some() {
            Some(entity.clone())
        } else {
            None
        };
        let series = IrregularSeries::new(entity_id, aux_columns.clone(), observations)?;
        entities.insert(entity, series);
    }

    let schema = DatasetSchema {
        entity_column: spec.entity.clone(),
        timestamp_column: spec.timestamp.clone(),
        value_column: spec.value.clone(),
        aux_columns,
    };
    EntityDataset::new(schema, entities)
}

fn format_cell(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

/// Writes a dataset back out with its schema's column names.
///
/// Timestamps are written numerically (epoch seconds for calendar data), so a
/// reload with `TimestampMode::Numeric` reproduces the same dataset.
pub fn save_csv(dataset: &EntityDataset, path: &Path) -> Result<()> {
    let schema = dataset.schema();
    let mut writer = csv::Writer::from_path(path)?;

    let mut header = Vec::new();
    if let Some(entity) = &schema.entity_column {
        header.push(entity.clone());
    }
    header.push(schema.timestamp_column.clone());
    header.push(schema.value_column.clone());
    header.extend(schema.aux_columns.iter().cloned());
    writer.write_record(&header)?;

    for (entity_id, series) in dataset.entities() {
        for obs in series.observations() {
            let mut record = Vec::new();
            if schema.entity_column.is_some() {
                record.push(entity_id.to_string());
            }
            record.push(format!("{}", obs.timestamp));
            record.push(format_cell(obs.value));
            record.extend(obs.aux.iter().map(|&v| format_cell(v)));
            writer.write_record(&record)?;
        }
    }
    writer.flush()?;
    Ok(())
}

const DATE_COMPONENTS: [&str; 5] = ["year", "month", "day", "weekday", "hour"];

fn date_components(epoch_seconds: f64) -> [f64; 5] {
    if !epoch_seconds.is_finite() {
        return [f64::NAN; 5];
    }
    let secs = epoch_seconds.floor() as i64;
    let dt = Utc.timestamp_opt(secs, 0).single();
    match dt {
        Some(dt) => [
            f64::from(dt.year()),
            f64::from(dt.month()),
            f64::from(dt.day()),
            f64::from(dt.weekday().num_days_from_monday()),
            f64::from(dt.hour()),
        ],
        None => [f64::NAN; 5],
    }
}

/// Replaces each named aux date column by numeric year/month/day/weekday/hour
/// components (weekday 0 = Monday). The primary timestamp column is never
/// split; naming it is an error.
pub fn split_date_components(dataset: &EntityDataset, columns: &[String]) -> Result<EntityDataset> {
    if columns.is_empty() {
        return Ok(dataset.clone());
    }
    let schema = dataset.schema();
    for column in columns {
        if *column == schema.timestamp_column {
            return Err(Error::config(format!(
                "cannot split the primary timestamp column '{column}'"
            )));
        }
        if !schema.aux_columns.contains(column) {
            return Err(Error::config(format!("no aux column named '{column}'")));
        }
    }

    let split_positions: Vec<bool> = schema
        .aux_columns
        .iter()
        .map(|name| columns.contains(name))
        .collect();

    let mut new_aux_columns = Vec::new();
    for (name, split) in schema.aux_columns.iter().zip(&split_positions) {
        if *split {
            for part in DATE_COMPONENTS {
                new_aux_columns.push(format!("{name}_{part}"));
            }
        } else {
            new_aux_columns.push(name.clone());
        }
    }

    let mut entities = BTreeMap::new();
    for (key, series) in dataset.entities() {
        let observations = series
            .observations()
            .iter()
            .map(|obs| {
                let mut aux = Vec::with_capacity(new_aux_columns.len());
                for (value, split) in obs.aux.iter().zip(&split_positions) {
                    if *split {
                        aux.extend(date_components(*value));
                    } else {
                        aux.push(*value);
                    }
                }
                Observation {
                    timestamp: obs.timestamp,
                    value: obs.value,
                    aux,
                }
            })
            .collect();
        let series = IrregularSeries::new(
            series.entity_id().map(str::to_string),
            new_aux_columns.clone(),
            observations,
        )?;
        entities.insert(key.to_string(), series);
    }

    let schema = DatasetSchema {
        aux_columns: new_aux_columns,
        ..schema.clone()
    };
    EntityDataset::new(schema, entities)
}

/// How to resolve missing (non-finite) value/aux cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImputeStrategy {
    /// Drop any row containing a non-finite value.
    DropRow,
    /// Replace non-finite cells with zero.
    FillZero,
    /// Replace non-finite cells with the per-entity column mean.
    FillMean,
}

/// Result of input imputation; entities emptied by `DropRow` are removed and
/// reported here.
#[derive(Debug, Clone)]
pub struct ImputeOutcome {
    pub dataset: EntityDataset,
    pub removed_entities: Vec<String>,
}

/// Removes or fills non-finite values so every remaining cell is finite.
pub fn impute_input_missing(dataset: &EntityDataset, strategy: ImputeStrategy) -> ImputeOutcome {
    let mut entities = BTreeMap::new();
    let mut removed = Vec::new();

    for (key, series) in dataset.entities() {
        let observations: Vec<Observation> = match strategy {
            ImputeStrategy::DropRow => series
                .observations()
                .iter()
                .filter(|o| o.value.is_finite() && o.aux.iter().all(|v| v.is_finite()))
                .cloned()
                .collect(),
            ImputeStrategy::FillZero => series
                .observations()
                .iter()
                .map(|o| Observation {
                    timestamp: o.timestamp,
                    value: if o.value.is_finite() { o.value } else { 0.0 },
                    aux: o
                        .aux
                        .iter()
                        .map(|&v| if v.is_finite() { v } else { 0.0 })
                        .collect(),
                })
                .collect(),
            ImputeStrategy::FillMean => {
                let finite_mean = |pick: &dyn Fn(&Observation) -> f64| {
                    let finite: Vec<f64> = series
                        .observations()
                        .iter()
                        .map(|o| pick(o))
                        .filter(|v| v.is_finite())
                        .collect();
                    crate::stats::mean(&finite)
                };
                let value_mean = finite_mean(&|o: &Observation| o.value);
                let aux_means: Vec<f64> = (0..series.aux_columns().len())
                    .map(|i| finite_mean(&move |o: &Observation| o.aux[i]))
                    .collect();
                series
                    .observations()
                    .iter()
                    .map(|o| Observation {
                        timestamp: o.timestamp,
                        value: if o.value.is_finite() { o.value } else { value_mean },
                        aux: o
                            .aux
                            .iter()
                            .enumerate()
                            .map(|(i, &v)| if v.is_finite() { v } else { aux_means[i] })
                            .collect(),
                    })
                    .collect()
            }
        };

        if observations.is_empty() {
            removed.push(key.to_string());
            continue;
        }
        let series = IrregularSeries::new(
            series.entity_id().map(str::to_string),
            series.aux_columns().to_vec(),
            observations,
        )
        .expect("imputation preserves series validity");
        entities.insert(key.to_string(), series);
    }

    let dataset = EntityDataset::new(dataset.schema().clone(), entities)
        .expect("imputation preserves the schema");
    ImputeOutcome {
        dataset,
        removed_entities: removed,
    }
}

/// Report-only summary of one series.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub observations: usize,
    pub duplicate_timestamps: usize,
    pub min_timestamp: f64,
    pub max_timestamp: f64,
    pub monotonic: bool,
    pub non_finite_values: usize,
}

/// Summarizes a series without modifying it.
pub fn validate(series: &IrregularSeries) -> ValidationReport {
    let obs = series.observations();
    let duplicates = obs
        .windows(2)
        .filter(|w| w[0].timestamp == w[1].timestamp)
        .count();
    let monotonic = obs.windows(2).all(|w| w[0].timestamp <= w[1].timestamp);
    let non_finite = obs
        .iter()
        .map(|o| {
            usize::from(!o.value.is_finite()) + o.aux.iter().filter(|v| !v.is_finite()).count()
        })
        .sum();
    ValidationReport {
        observations: obs.len(),
        duplicate_timestamps: duplicates,
        min_timestamp: obs.first().map_or(f64::NAN, |o| o.timestamp),
        max_timestamp: obs.last().map_or(f64::NAN, |o| o.timestamp),
        monotonic,
        non_finite_values: non_finite,
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut out = String::new();
        write!(
            out,
            "observations={} duplicates={} span=[{}, {}] monotonic={} non_finite={}",
            self.observations,
            self.duplicate_timestamps,
            self.min_timestamp,
            self.max_timestamp,
            self.monotonic,
            self.non_finite_values
        )?;
        f.write_str(&out)
    }
}
