//! Run-config file parsing and validation.
//!
//! The config is a sectioned key = value file (TOML). Everything a run needs
//! — dataset location and column mapping, resampling, lags, features,
//! learner, sweep grid and output paths — lives here so experiments are
//! reproducible from a checked-in file plus a few CLI overrides.

use std::path::{Path, PathBuf};

use autofits::{
    Aggregator, ColumnSpec, Feature, FeatureConfig, ImputeStrategy, Imputer, LagRule, LagSpec,
    LearnerConfig, LearnerKind, PipelineConfig, SweepGrid, TimestampMode, Variant,
};
use serde::Deserialize;

/// Errors with their CLI exit classification.
#[derive(Debug)]
pub enum CliError {
    /// Exit code 1.
    Config(String),
    /// Exit code 2.
    Data(String),
    /// Exit code 3.
    AllCellsFailed,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Data(msg) => write!(f, "{msg}"),
            CliError::AllCellsFailed => f.write_str("every sweep cell failed"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::AllCellsFailed => 3,
        }
    }
}

impl From<autofits::Error> for CliError {
    fn from(e: autofits::Error) -> Self {
        match e {
            autofits::Error::Config(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dataset: DatasetSection,
    resample: ResampleSection,
    embedding: EmbeddingSection,
    #[serde(default)]
    features: FeaturesSection,
    #[serde(default)]
    model: ModelSection,
    #[serde(default)]
    sweep: Option<SweepSection>,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetSection {
    path: PathBuf,
    timestamp: String,
    value: String,
    #[serde(default)]
    entity: Option<String>,
    #[serde(default = "default_timestamp_mode")]
    timestamp_mode: String,
    #[serde(default)]
    drop: Vec<String>,
    #[serde(default)]
    split_dates: Vec<String>,
    #[serde(default = "default_impute")]
    impute: String,
}

fn default_timestamp_mode() -> String {
    "numeric".to_string()
}

fn default_impute() -> String {
    "drop_row".to_string()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResampleSection {
    frequency: f64,
    #[serde(default = "default_unit")]
    unit: String,
    #[serde(default = "default_aggregator")]
    aggregator: String,
    #[serde(default = "default_imputer")]
    imputer: String,
}

fn default_unit() -> String {
    "raw".to_string()
}

fn default_aggregator() -> String {
    "sum".to_string()
}

fn default_imputer() -> String {
    "zero".to_string()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbeddingSection {
    #[serde(default)]
    lag: Option<usize>,
    #[serde(default)]
    schedule: Option<Vec<ScheduleRule>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleRule {
    min: f64,
    #[serde(default)]
    max: Option<f64>,
    lag: usize,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FeaturesSection {
    #[serde(default)]
    mov_avg_window: Option<usize>,
    #[serde(default)]
    entropy_bins: Option<usize>,
    #[serde(default)]
    reg_mod_lambda: Option<f64>,
    #[serde(default)]
    enabled: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    #[serde(default = "default_learner")]
    learner: String,
    #[serde(default = "default_lasso_lambda")]
    lasso_lambda: f64,
    #[serde(default = "default_forest_trees")]
    forest_trees: usize,
    #[serde(default = "default_variant")]
    variant: String,
    #[serde(default = "default_holdout")]
    holdout: f64,
    #[serde(default = "default_seed")]
    seed: u64,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            learner: default_learner(),
            lasso_lambda: default_lasso_lambda(),
            forest_trees: default_forest_trees(),
            variant: default_variant(),
            holdout: default_holdout(),
            seed: default_seed(),
        }
    }
}

fn default_learner() -> String {
    "lasso".to_string()
}

fn default_lasso_lambda() -> f64 {
    0.1
}

fn default_forest_trees() -> usize {
    100
}

fn default_variant() -> String {
    "autofits".to_string()
}

fn default_holdout() -> f64 {
    0.10
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    frequencies: FrequencySpec,
    #[serde(default)]
    learners: Option<Vec<String>>,
    #[serde(default)]
    variants: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum FrequencySpec {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl FrequencySpec {
    fn values(&self) -> CliResult<Vec<f64>> {
        match self {
            FrequencySpec::List(values) => Ok(values.clone()),
            FrequencySpec::Range { start, stop, step } => {
                if *step <= 0.0 || !step.is_finite() {
                    return Err(config_err("sweep frequency step must be > 0"));
                }
                if stop < start {
                    return Err(config_err("sweep frequency stop must be >= start"));
                }
                let mut values = Vec::new();
                let mut i = 0u32;
                loop {
                    let value = start + f64::from(i) * step;
                    if value > *stop + 1e-9 * step {
                        break;
                    }
                    values.push(value);
                    i += 1;
                }
                Ok(values)
            }
        }
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    #[serde(default)]
    features: Option<PathBuf>,
    #[serde(default)]
    forecast: Option<PathBuf>,
    #[serde(default)]
    report: Option<PathBuf>,
    #[serde(default)]
    wins: Option<PathBuf>,
}

/// Output locations after defaults are applied.
#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub features: PathBuf,
    pub forecast: PathBuf,
    pub report: PathBuf,
    pub wins: PathBuf,
}

/// A fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dataset_path: PathBuf,
    pub columns: ColumnSpec,
    pub split_dates: Vec<String>,
    pub impute: ImputeStrategy,
    pub pipeline: PipelineConfig,
    pub sweep: Option<SweepGrid>,
    pub output: OutputPaths,
    pub external_features: Option<PathBuf>,
}

/// CLI-level overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub variant: Option<Variant>,
    pub external_features: Option<PathBuf>,
}

fn parse_unit(unit: &str) -> CliResult<f64> {
    match unit {
        "raw" | "seconds" => Ok(1.0),
        "minutes" => Ok(60.0),
        "hours" => Ok(3600.0),
        "days" => Ok(86400.0),
        other => Err(config_err(format!(
            "unknown frequency unit '{other}' (expected raw | seconds | minutes | hours | days)"
        ))),
    }
}

fn parse_aggregator(text: &str) -> CliResult<Aggregator> {
    match text {
        "sum" => Ok(Aggregator::Sum),
        "mean" => Ok(Aggregator::Mean),
        other => Err(config_err(format!(
            "unknown aggregator '{other}' (expected sum | mean)"
        ))),
    }
}

fn parse_imputer(text: &str) -> CliResult<Imputer> {
    match text {
        "zero" => Ok(Imputer::Zero),
        "forward_fill" => Ok(Imputer::ForwardFill),
        other => Err(config_err(format!(
            "unknown imputer '{other}' (expected zero | forward_fill)"
        ))),
    }
}

fn parse_impute_strategy(text: &str) -> CliResult<ImputeStrategy> {
    match text {
        "drop_row" => Ok(ImputeStrategy::DropRow),
        "fill_zero" => Ok(ImputeStrategy::FillZero),
        "fill_mean" => Ok(ImputeStrategy::FillMean),
        other => Err(config_err(format!(
            "unknown impute strategy '{other}' (expected drop_row | fill_zero | fill_mean)"
        ))),
    }
}

fn parse_timestamp_mode(text: &str) -> CliResult<TimestampMode> {
    match text {
        "numeric" => Ok(TimestampMode::Numeric),
        "iso8601" => Ok(TimestampMode::Iso8601),
        other => Err(config_err(format!(
            "unknown timestamp mode '{other}' (expected numeric | iso8601)"
        ))),
    }
}

fn parse_feature_set(names: &[String]) -> CliResult<FeatureConfig> {
    let mut cfg = FeatureConfig::none();
    for name in names {
        let feature = Feature::from_name(name)
            .ok_or_else(|| config_err(format!("unknown feature '{name}'")))?;
        cfg.enabled.insert(feature);
    }
    Ok(cfg)
}

/// Loads, resolves and validates a config file. Fails fast: no data is read
/// here beyond the config itself.
pub fn load_config(path: &Path, overrides: &Overrides) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
    let raw: RawConfig = toml::from_str(&text)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;

    // paths in the config resolve relative to the config file
    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &PathBuf| -> PathBuf {
        if p.is_absolute() {
            p.clone()
        } else {
            base.join(p)
        }
    };

    let dataset_path = resolve(&raw.dataset.path);
    if !dataset_path.is_file() {
        return Err(config_err(format!(
            "dataset file {} does not exist",
            dataset_path.display()
        )));
    }

    let mut columns = ColumnSpec::new(&raw.dataset.timestamp, &raw.dataset.value)
        .with_timestamp_mode(parse_timestamp_mode(&raw.dataset.timestamp_mode)?)
        .with_drop(raw.dataset.drop.clone());
    if let Some(entity) = &raw.dataset.entity {
        columns = columns.with_entity(entity);
    }

    let lag = match (&raw.embedding.lag, &raw.embedding.schedule) {
        (Some(lag), None) => LagSpec::Fixed(*lag),
        (None, Some(rules)) => LagSpec::Schedule(
            rules
                .iter()
                .map(|r| LagRule {
                    min: r.min,
                    max: r.max,
                    lag: r.lag,
                })
                .collect(),
        ),
        (Some(_), Some(_)) => {
            return Err(config_err("embedding: give either lag or schedule, not both"))
        }
        (None, None) => return Err(config_err("embedding: lag or schedule is required")),
    };

    let mut features = match &raw.features.enabled {
        Some(names) => parse_feature_set(names)?,
        None => FeatureConfig::default(),
    };
    if let Some(w) = raw.features.mov_avg_window {
        features.mov_avg_window = w;
    }
    if let Some(b) = raw.features.entropy_bins {
        features.entropy_bins = b;
    }
    if let Some(l) = raw.features.reg_mod_lambda {
        features.reg_mod_lambda = l;
    }

    let learner_kind: LearnerKind = raw.model.learner.parse()?;
    let mut learner = LearnerConfig::new(learner_kind);
    learner.lasso_lambda = raw.model.lasso_lambda;
    learner.forest_trees = raw.model.forest_trees;
    learner.seed = overrides.seed.unwrap_or(raw.model.seed);

    let variant = match &overrides.variant {
        Some(v) => *v,
        None => raw.model.variant.parse()?,
    };

    let pipeline = PipelineConfig {
        frequency: raw.resample.frequency,
        frequency_scale: parse_unit(&raw.resample.unit)?,
        aggregator: parse_aggregator(&raw.resample.aggregator)?,
        imputer: parse_imputer(&raw.resample.imputer)?,
        lag,
        features,
        variant,
        learner,
        holdout_fraction: raw.model.holdout,
    };
    pipeline.validate()?;
    parse_impute_strategy(&raw.dataset.impute)?;

    let sweep = match &raw.sweep {
        Some(section) => {
            let frequencies = section.frequencies.values()?;
            if frequencies.is_empty() {
                return Err(config_err("sweep frequency grid is empty"));
            }
            let learners: Vec<LearnerKind> = match &section.learners {
                Some(names) => names
                    .iter()
                    .map(|n| n.parse::<LearnerKind>().map_err(CliError::from))
                    .collect::<CliResult<_>>()?,
                None => vec![learner_kind],
            };
            let variants: Vec<Variant> = match &section.variants {
                Some(names) => names
                    .iter()
                    .map(|n| n.parse::<Variant>().map_err(CliError::from))
                    .collect::<CliResult<_>>()?,
                None => vec![Variant::Baseline, Variant::Autofits],
            };
            for &f in &frequencies {
                if !f.is_finite() || f <= 0.0 {
                    return Err(config_err(format!("sweep frequency must be > 0, got {f}")));
                }
                pipeline.lag.resolve(f)?;
            }
            Some(SweepGrid {
                frequencies,
                learners,
                variants,
            })
        }
        None => None,
    };

    let external_features = overrides.external_features.clone();
    if let Some(external) = &external_features {
        if !external.is_file() {
            return Err(config_err(format!(
                "external feature file {} does not exist",
                external.display()
            )));
        }
    }
    let needs_external = pipeline.variant == Variant::Merged
        || sweep
            .as_ref()
            .is_some_and(|grid| grid.variants.contains(&Variant::Merged));
    if needs_external && external_features.is_none() {
        return Err(config_err(
            "the merged variant requires --external-features <path>",
        ));
    }

    let derived_wins = |report: &Path| -> PathBuf {
        let stem = report
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "sweep".to_string());
        report.with_file_name(format!("{stem}_wins.csv"))
    };
    let report = raw
        .output
        .report
        .as_ref()
        .map(|p| resolve(p))
        .unwrap_or_else(|| PathBuf::from("sweep.csv"));
    let output = OutputPaths {
        features: raw
            .output
            .features
            .as_ref()
            .map(|p| resolve(p))
            .unwrap_or_else(|| PathBuf::from("features.csv")),
        forecast: raw
            .output
            .forecast
            .as_ref()
            .map(|p| resolve(p))
            .unwrap_or_else(|| PathBuf::from("forecast.csv")),
        wins: raw
            .output
            .wins
            .as_ref()
            .map(|p| resolve(p))
            .unwrap_or_else(|| derived_wins(&report)),
        report,
    };

    Ok(RunConfig {
        dataset_path,
        columns,
        split_dates: raw.dataset.split_dates.clone(),
        impute: parse_impute_strategy(&raw.dataset.impute)?,
        pipeline,
        sweep,
        output,
        external_features,
    })
}
