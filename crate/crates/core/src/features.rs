//! The irregularity feature catalog.
//!
//! Every embedding row yields a fixed set of named columns. Features marked
//! `_orig` are computed from the original observations inside the row's
//! window; `_res` variants apply the same statistic to the resampled lag
//! bins (bin start times paired with lag values). Degenerate inputs (empty
//! or singleton windows) produce 0 rather than dropping the row, so feature
//! matrices stay rectangular; `missing_t_count_res` tells a learner when
//! that happened.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::data::IrregularSeries;
use crate::embed::{window_observations, EmbeddingMatrix, EmbeddingRow};
use crate::error::{Error, Result};
use crate::learners::{lasso_fit, ols_fit};
use crate::matrix::DenseMatrix;
use crate::stats;

const ZERO_MEAN_GUARD: f64 = 1e-12;

/// The catalog entries, in fixed output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Feature {
    RelDispT,
    TYAvgMul,
    TYAvgDifMul,
    SpaceArea2d,
    MissingTCount,
    TDifStats,
    MinMaxTDif,
    MinMaxTDifF,
    EntropyT,
    EntropyY,
    RelDispY,
    MovAvg,
    RegMod,
}

impl Feature {
    pub const ALL: [Feature; 13] = [
        Feature::RelDispT,
        Feature::TYAvgMul,
        Feature::TYAvgDifMul,
        Feature::SpaceArea2d,
        Feature::MissingTCount,
        Feature::TDifStats,
        Feature::MinMaxTDif,
        Feature::MinMaxTDifF,
        Feature::EntropyT,
        Feature::EntropyY,
        Feature::RelDispY,
        Feature::MovAvg,
        Feature::RegMod,
    ];

    /// The catalog name used as the column-name stem.
    pub fn name(self) -> &'static str {
        match self {
            Feature::RelDispT => "rel_disp_t",
            Feature::TYAvgMul => "t_y_avg_mul",
            Feature::TYAvgDifMul => "t_y_avg_dif_mul",
            Feature::SpaceArea2d => "2d_space_area",
            Feature::MissingTCount => "missing_t_count",
            Feature::TDifStats => "t_dif_stats",
            Feature::MinMaxTDif => "min_max_t_dif",
            Feature::MinMaxTDifF => "min_max_t_dif_f",
            Feature::EntropyT => "entropy_t",
            Feature::EntropyY => "entropy_y",
            Feature::RelDispY => "rel_disp_y",
            Feature::MovAvg => "mov_avg",
            Feature::RegMod => "reg_mod",
        }
    }

    pub fn from_name(name: &str) -> Option<Feature> {
        Feature::ALL.iter().copied().find(|f| f.name() == name)
    }

    /// Column names this feature contributes.
    fn columns(self) -> Vec<String> {
        let stem = self.name();
        match self {
            Feature::RelDispT | Feature::TYAvgMul | Feature::TYAvgDifMul
            | Feature::SpaceArea2d | Feature::EntropyY | Feature::RelDispY => {
                vec![format!("{stem}_orig"), format!("{stem}_res")]
            }
            Feature::MissingTCount | Feature::MovAvg => vec![format!("{stem}_res")],
            Feature::MinMaxTDif | Feature::MinMaxTDifF | Feature::EntropyT => {
                vec![format!("{stem}_orig")]
            }
            Feature::TDifStats => TIME_DIFF_STAT_NAMES
                .iter()
                .map(|stat| format!("{stem}_orig_{stat}"))
                .collect(),
            Feature::RegMod => REG_MOD_NAMES
                .iter()
                .map(|part| format!("{stem}_res_{part}"))
                .collect(),
        }
    }
}

const TIME_DIFF_STAT_NAMES: [&str; 9] = [
    "mean", "std", "var", "sum", "median", "iqr", "min", "max", "rel_disp",
];
const REG_MOD_NAMES: [&str; 6] = [
    "ols_pred",
    "ols_err",
    "ols_abs_err",
    "lasso_pred",
    "lasso_err",
    "lasso_abs_err",
];

/// Catalog configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    pub mov_avg_window: usize,
    pub entropy_bins: usize,
    pub reg_mod_lambda: f64,
    pub enabled: BTreeSet<Feature>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            mov_avg_window: 3,
            entropy_bins: 10,
            reg_mod_lambda: 0.1,
            enabled: Feature::ALL.into_iter().collect(),
        }
    }
}

impl FeatureConfig {
    /// The empty catalog: rows carry lags and target only.
    pub fn none() -> Self {
        FeatureConfig {
            enabled: BTreeSet::new(),
            ..FeatureConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mov_avg_window < 1 {
            return Err(Error::config("mov_avg_window must be >= 1"));
        }
        if self.entropy_bins < 2 {
            return Err(Error::config("entropy_bins must be >= 2"));
        }
        if !self.reg_mod_lambda.is_finite() || self.reg_mod_lambda < 0.0 {
            return Err(Error::config("reg_mod_lambda must be >= 0"));
        }
        Ok(())
    }
}

/// The enabled feature columns, in fixed catalog order.
pub fn feature_columns(cfg: &FeatureConfig) -> Vec<String> {
    Feature::ALL
        .iter()
        .filter(|f| cfg.enabled.contains(f))
        .flat_map(|f| f.columns())
        .collect()
}

/// Coefficient of variation: population std over mean.
///
/// Total on purpose: 0 for fewer than 2 points or a near-zero mean.
pub fn rel_disp(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let mean = stats::mean(x);
    if mean.abs() < ZERO_MEAN_GUARD {
        return 0.0;
    }
    stats::population_std(x) / mean
}

/// Mean of the elementwise products `t_j * y_j`; 0 on empty input.
pub fn t_y_avg_mul(ts: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(ts.len(), ys.len(), "t_y_avg_mul length mismatch");
    if ts.is_empty() {
        return 0.0;
    }
    ts.iter().zip(ys).map(|(t, y)| t * y).sum::<f64>() / ts.len() as f64
}

/// Mean of `Δt_j * Δy_j` over consecutive pairs; 0 with fewer than 2 points.
pub fn t_y_avg_dif_mul(ts: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(ts.len(), ys.len(), "t_y_avg_dif_mul length mismatch");
    if ts.len() < 2 {
        return 0.0;
    }
    let total: f64 = ts
        .windows(2)
        .zip(ys.windows(2))
        .map(|(t, y)| (t[1] - t[0]) * (y[1] - y[0]))
        .sum();
    total / (ts.len() - 1) as f64
}

/// Time span times value range; 0 with fewer than 2 points.
pub fn space_area_2d(ts: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(ts.len(), ys.len(), "space_area_2d length mismatch");
    if ts.len() < 2 {
        return 0.0;
    }
    let span = |v: &[f64]| {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &x in v {
            min = min.min(x);
            max = max.max(x);
        }
        max - min
    };
    span(ts) * span(ys)
}

/// Number of lag bins with no source observations.
pub fn missing_t_count(row: &EmbeddingRow) -> f64 {
    row.lag_imputed.iter().filter(|&&flag| flag).count() as f64
}

/// The nine summary statistics of consecutive time differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDiffStats {
    pub mean: f64,
    pub std: f64,
    pub var: f64,
    pub sum: f64,
    pub median: f64,
    pub iqr: f64,
    pub min: f64,
    pub max: f64,
    pub rel_disp: f64,
}

impl TimeDiffStats {
    pub const ZERO: TimeDiffStats = TimeDiffStats {
        mean: 0.0,
        std: 0.0,
        var: 0.0,
        sum: 0.0,
        median: 0.0,
        iqr: 0.0,
        min: 0.0,
        max: 0.0,
        rel_disp: 0.0,
    };

    fn to_vec(self) -> Vec<f64> {
        vec![
            self.mean, self.std, self.var, self.sum, self.median, self.iqr, self.min, self.max,
            self.rel_disp,
        ]
    }
}

/// Statistics over `Δ_j = ts[j+1] - ts[j]` of sorted timestamps.
///
/// All zero when there are fewer than 2 timestamps. Variance and std are
/// population-form; median and IQR interpolate between order statistics.
pub fn t_dif_stats(ts: &[f64]) -> TimeDiffStats {
    if ts.len() < 2 {
        return TimeDiffStats::ZERO;
    }
    let diffs: Vec<f64> = ts.windows(2).map(|w| w[1] - w[0]).collect();
    let mut sorted = diffs.clone();
    sorted.sort_by(f64::total_cmp);

    let mean = stats::mean(&diffs);
    let var = stats::population_variance(&diffs);
    let std = var.sqrt();
    TimeDiffStats {
        mean,
        std,
        var,
        sum: diffs.iter().sum(),
        median: stats::quantile_sorted(&sorted, 0.5),
        iqr: stats::quantile_sorted(&sorted, 0.75) - stats::quantile_sorted(&sorted, 0.25),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        rel_disp: rel_disp(&diffs),
    }
}

/// `(max - min, (max - min) / frequency)` of sorted timestamps; (0, 0) with
/// fewer than 2 points.
pub fn min_max_t_dif(ts: &[f64], frequency: f64) -> (f64, f64) {
    assert!(frequency > 0.0, "frequency must be positive");
    if ts.len() < 2 {
        return (0.0, 0.0);
    }
    let span = ts[ts.len() - 1] - ts[0];
    (span, span / frequency)
}

/// Shannon entropy (natural log) of an equal-width histogram over
/// `[min, max]` with `bins` bins; 0 for degenerate inputs.
pub fn entropy(x: &[f64], bins: usize) -> f64 {
    assert!(bins >= 2, "entropy needs at least 2 bins");
    if x.len() < 2 {
        return 0.0;
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in x {
        min = min.min(v);
        max = max.max(v);
    }
    if max == min {
        return 0.0;
    }
    let mut counts = vec![0usize; bins];
    for &v in x {
        let slot = (((v - min) / (max - min)) * bins as f64).floor() as usize;
        counts[slot.min(bins - 1)] += 1;
    }
    let n = x.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mean of the last `min(window, len)` lag values.
pub fn mov_avg(lags: &[f64], window: usize) -> f64 {
    assert!(window >= 1, "mov_avg window must be >= 1");
    if lags.is_empty() {
        return 0.0;
    }
    let take = window.min(lags.len());
    stats::mean(&lags[lags.len() - take..])
}

/// Predictions and errors from modelling the recent past.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegModFeatures {
    pub ols_prediction: f64,
    pub ols_error: f64,
    pub ols_abs_error: f64,
    pub lasso_prediction: f64,
    pub lasso_error: f64,
    pub lasso_abs_error: f64,
}

impl RegModFeatures {
    fn to_vec(self) -> Vec<f64> {
        vec![
            self.ols_prediction,
            self.ols_error,
            self.ols_abs_error,
            self.lasso_prediction,
            self.lasso_error,
            self.lasso_abs_error,
        ]
    }
}

/// Fits value-on-time models to the first `l - 1` lags and scores them on
/// the last one.
///
/// With fewer than 2 training lags, or a degenerate (constant-time) design,
/// the prediction falls back to the mean of the training lags.
pub fn reg_mod_features(row: &EmbeddingRow, lambda: f64) -> RegModFeatures {
    let lag = row.lags.len();
    let actual = row.lags[lag - 1];
    let train_values = &row.lags[..lag - 1];
    let train_times = &row.lag_timestamps[..lag - 1];

    let fallback = stats::mean(train_values);
    let degenerate =
        train_values.len() < 2 || stats::population_std(train_times) == 0.0;

    let (ols_prediction, lasso_prediction) = if degenerate {
        (fallback, fallback)
    } else {
        let x = DenseMatrix::from_rows(
            &train_times.iter().map(|&t| vec![t]).collect::<Vec<_>>(),
        );
        let probe = DenseMatrix::from_rows(&[vec![row.lag_timestamps[lag - 1]]]);
        let ols = ols_fit(&x, train_values).predict(&probe).unwrap()[0];
        let lasso = match lasso_fit(&x, train_values, lambda) {
            Ok(model) => model.predict(&probe).unwrap()[0],
            Err(_) => fallback,
        };
        (ols, lasso)
    };

    let ols_error = actual - ols_prediction;
    let lasso_error = actual - lasso_prediction;
    RegModFeatures {
        ols_prediction,
        ols_error,
        ols_abs_error: ols_error.abs(),
        lasso_prediction,
        lasso_error,
        lasso_abs_error: lasso_error.abs(),
    }
}

/// One computed feature row: carried identifiers, lags, catalog values and
/// the target.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub entity_id: Option<String>,
    pub window_start: f64,
    pub window_end: f64,
    pub target_time: f64,
    pub lags: Vec<f64>,
    /// Aligned with [`feature_columns`] for the same config.
    pub features: Vec<f64>,
    pub target: f64,
}

impl FeatureRow {
    /// Looks a feature value up by column name (test convenience).
    pub fn feature(&self, cfg: &FeatureConfig, name: &str) -> Option<f64> {
        feature_columns(cfg)
            .iter()
            .position(|c| c == name)
            .map(|i| self.features[i])
    }
}

/// Computes every enabled feature for one embedding row.
pub fn compute_feature_row(
    row: &EmbeddingRow,
    src: &IrregularSeries,
    frequency: f64,
    cfg: &FeatureConfig,
) -> FeatureRow {
    let window = window_observations(row, src);
    let t_orig: Vec<f64> = window.iter().map(|o| o.timestamp).collect();
    let y_orig: Vec<f64> = window.iter().map(|o| o.value).collect();
    let t_res = &row.lag_timestamps;
    let y_res = &row.lags;

    let mut features = Vec::new();
    for feature in Feature::ALL {
        if !cfg.enabled.contains(&feature) {
            continue;
        }
        match feature {
            Feature::RelDispT => {
                features.push(rel_disp(&t_orig));
                features.push(rel_disp(t_res));
            }
            Feature::TYAvgMul => {
                features.push(t_y_avg_mul(&t_orig, &y_orig));
                features.push(t_y_avg_mul(t_res, y_res));
            }
            Feature::TYAvgDifMul => {
                features.push(t_y_avg_dif_mul(&t_orig, &y_orig));
                features.push(t_y_avg_dif_mul(t_res, y_res));
            }
            Feature::SpaceArea2d => {
                features.push(space_area_2d(&t_orig, &y_orig));
                features.push(space_area_2d(t_res, y_res));
            }
            Feature::MissingTCount => features.push(missing_t_count(row)),
            Feature::TDifStats => features.extend(t_dif_stats(&t_orig).to_vec()),
            Feature::MinMaxTDif => features.push(min_max_t_dif(&t_orig, frequency).0),
            Feature::MinMaxTDifF => features.push(min_max_t_dif(&t_orig, frequency).1),
            Feature::EntropyT => features.push(entropy(&t_orig, cfg.entropy_bins)),
            Feature::EntropyY => {
                features.push(entropy(&y_orig, cfg.entropy_bins));
                features.push(entropy(y_res, cfg.entropy_bins));
            }
            Feature::RelDispY => {
                features.push(rel_disp(&y_orig));
                features.push(rel_disp(y_res));
            }
            Feature::MovAvg => features.push(mov_avg(y_res, cfg.mov_avg_window)),
            Feature::RegMod => {
                features.extend(reg_mod_features(row, cfg.reg_mod_lambda).to_vec())
            }
        }
    }

    FeatureRow {
        entity_id: src.entity_id().map(str::to_string),
        window_start: row.window_start,
        window_end: row.window_end,
        target_time: row.target_time,
        lags: row.lags.clone(),
        features,
        target: row.target,
    }
}

/// One feature row per embedding row, order preserved.
pub fn compute_feature_matrix(
    emb: &EmbeddingMatrix,
    src: &IrregularSeries,
    cfg: &FeatureConfig,
) -> Vec<FeatureRow> {
    emb.rows
        .par_iter()
        .map(|row| compute_feature_row(row, src, emb.frequency, cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Observation;
    use crate::embed::build_embedding;
    use crate::resample::{resample, Aggregator, Imputer, ResampleConfig};

    fn embedding_row(lags: &[f64], timestamps: &[f64]) -> EmbeddingRow {
        EmbeddingRow {
            lags: lags.to_vec(),
            lag_timestamps: timestamps.to_vec(),
            lag_imputed: vec![false; lags.len()],
            target: 0.0,
            target_time: timestamps.last().unwrap() + 1.0,
            window_start: timestamps[0],
            window_end: timestamps.last().unwrap() + 1.0,
            window_obs: vec![],
        }
    }

    #[test]
    fn rel_disp_examples() {
        assert_eq!(rel_disp(&[2.0, 2.0, 2.0]), 0.0);
        assert!((rel_disp(&[1.0, 3.0]) - 0.5).abs() < 1e-12);
        assert_eq!(rel_disp(&[-1.0, 1.0]), 0.0); // zero-mean guard
        assert_eq!(rel_disp(&[5.0]), 0.0);
    }

    #[test]
    fn t_y_avg_mul_examples() {
        assert!((t_y_avg_mul(&[1.0, 2.0], &[3.0, 4.0]) - 5.5).abs() < 1e-12);
        assert_eq!(t_y_avg_mul(&[1.0, 2.0], &[0.0, 0.0]), 0.0);
        assert_eq!(t_y_avg_mul(&[2.0], &[3.0]), 6.0);
        assert_eq!(t_y_avg_mul(&[], &[]), 0.0);
    }

    #[test]
    fn t_y_avg_dif_mul_examples() {
        assert!((t_y_avg_dif_mul(&[0.0, 1.0, 3.0], &[0.0, 2.0, 2.0]) - 1.0).abs() < 1e-12);
        assert_eq!(t_y_avg_dif_mul(&[0.0, 1.0, 2.0], &[7.0, 7.0, 7.0]), 0.0);
        assert_eq!(t_y_avg_dif_mul(&[1.0], &[2.0]), 0.0);
    }

    #[test]
    fn space_area_examples() {
        assert_eq!(space_area_2d(&[0.0, 10.0], &[2.0, 5.0]), 30.0);
        assert_eq!(space_area_2d(&[0.0, 10.0], &[4.0, 4.0]), 0.0);
        assert_eq!(space_area_2d(&[1.0], &[1.0]), 0.0);
        // regular bins: span (l-1)*f times the lag range
        let ts: Vec<f64> = (0..5).map(|i| 10.0 + 2.0 * i as f64).collect();
        let ys = [1.0, 9.0, 4.0, 2.0, 3.0];
        assert_eq!(space_area_2d(&ts, &ys), (4.0 * 2.0) * 8.0);
    }

    #[test]
    fn missing_t_count_counts_empty_bins() {
        let mut row = embedding_row(&[1.0, 2.0, 3.0], &[0.0, 1.0, 2.0]);
        assert_eq!(missing_t_count(&row), 0.0);
        row.lag_imputed = vec![true, true, true];
        assert_eq!(missing_t_count(&row), 3.0);
        row.lag_imputed = vec![true, false, true];
        assert_eq!(missing_t_count(&row), 2.0);
    }

    #[test]
    fn t_dif_stats_matches_hand_computation() {
        // diffs of [0,1,3,6] are [1,2,3]
        let s = t_dif_stats(&[0.0, 1.0, 3.0, 6.0]);
        assert!((s.mean - 2.0).abs() < 1e-12);
        assert!((s.sum - 6.0).abs() < 1e-12);
        assert_eq!(s.min, 1.0);
        assert_eq!(s.max, 3.0);
        assert_eq!(s.median, 2.0);
        assert!((s.var - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.std - 0.816496580927726).abs() < 1e-9);
        assert!((s.rel_disp - 0.408248290463863).abs() < 1e-9);
        assert!((s.iqr - 1.0).abs() < 1e-12);
    }

    #[test]
    fn t_dif_stats_degenerate_inputs() {
        let s = t_dif_stats(&[0.0, 5.0]);
        assert_eq!(s.mean, 5.0);
        assert_eq!(s.sum, 5.0);
        assert_eq!(s.min, 5.0);
        assert_eq!(s.max, 5.0);
        assert_eq!(s.median, 5.0);
        assert_eq!(s.var, 0.0);
        assert_eq!(s.std, 0.0);
        assert_eq!(s.rel_disp, 0.0);
        assert_eq!(s.iqr, 0.0);

        assert_eq!(t_dif_stats(&[3.0]), TimeDiffStats::ZERO);

        let even = t_dif_stats(&[0.0, 2.0, 4.0, 6.0]);
        assert_eq!(even.mean, 2.0);
        assert_eq!(even.std, 0.0);
        assert_eq!(even.rel_disp, 0.0);
    }

    #[test]
    fn min_max_t_dif_examples() {
        assert_eq!(min_max_t_dif(&[2.0, 9.0], 7.0), (7.0, 1.0));
        assert_eq!(min_max_t_dif(&[], 7.0), (0.0, 0.0));
        assert_eq!(min_max_t_dif(&[0.0, 1.0, 21.0], 7.0), (21.0, 3.0));
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&[4.0, 4.0, 4.0], 10), 0.0);
        let spread: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!((entropy(&spread, 10) - 10.0f64.ln()).abs() < 1e-9);
        // everything except the boundary max lands in one bin
        assert!(entropy(&[0.0, 0.0, 0.0], 10) == 0.0);
        assert_eq!(entropy(&[1.0], 10), 0.0);
    }

    #[test]
    fn mov_avg_examples() {
        assert!((mov_avg(&[1.0, 2.0, 3.0, 4.0], 3) - 3.0).abs() < 1e-12);
        assert_eq!(mov_avg(&[7.0, 7.0, 7.0], 3), 7.0);
        assert_eq!(mov_avg(&[1.0, 3.0], 10), 2.0);
    }

    #[test]
    fn reg_mod_recovers_a_perfect_line() {
        let ts = [0.0, 1.0, 2.0, 3.0];
        let lags: Vec<f64> = ts.iter().map(|t| 2.0 * t).collect();
        let row = embedding_row(&lags, &ts);
        let f = reg_mod_features(&row, 0.0);
        assert!((f.ols_prediction - 6.0).abs() < 1e-6);
        assert!(f.ols_error.abs() < 1e-6);
        assert!(f.ols_abs_error < 1e-6);
    }

    #[test]
    fn reg_mod_falls_back_for_two_lags() {
        let row = embedding_row(&[4.0, 10.0], &[0.0, 1.0]);
        let f = reg_mod_features(&row, 0.1);
        assert_eq!(f.ols_prediction, 4.0);
        assert_eq!(f.lasso_prediction, 4.0);
        assert_eq!(f.ols_error, 6.0);
        assert_eq!(f.lasso_abs_error, 6.0);
    }

    #[test]
    fn reg_mod_on_constant_lags_has_zero_errors() {
        let row = embedding_row(&[5.0, 5.0, 5.0, 5.0], &[0.0, 1.0, 2.0, 3.0]);
        let f = reg_mod_features(&row, 0.1);
        assert!((f.ols_prediction - 5.0).abs() < 1e-9);
        assert!((f.lasso_prediction - 5.0).abs() < 1e-9);
        assert!(f.ols_abs_error < 1e-9);
        assert!(f.lasso_abs_error < 1e-9);
    }

    #[test]
    fn catalog_has_32_columns_at_defaults() {
        let cfg = FeatureConfig::default();
        let columns = feature_columns(&cfg);
        assert_eq!(columns.len(), 32);
        assert!(columns.contains(&"t_dif_stats_orig_iqr".to_string()));
        assert!(columns.contains(&"missing_t_count_res".to_string()));
        assert!(columns.contains(&"reg_mod_res_lasso_abs_err".to_string()));
        assert!(!columns.contains(&"missing_t_count_orig".to_string()));

        assert!(feature_columns(&FeatureConfig::none()).is_empty());
    }

    fn small_series() -> IrregularSeries {
        let obs = vec![
            Observation { timestamp: 0.0, value: 1.0, aux: vec![] },
            Observation { timestamp: 0.5, value: 2.0, aux: vec![] },
            Observation { timestamp: 2.2, value: 3.0, aux: vec![] },
            Observation { timestamp: 5.0, value: 4.0, aux: vec![] },
            Observation { timestamp: 7.9, value: 5.0, aux: vec![] },
        ];
        IrregularSeries::new(Some("e1".to_string()), vec![], obs).unwrap()
    }

    #[test]
    fn feature_rows_share_one_key_set_and_respect_degenerate_windows() {
        let series = small_series();
        let reg = resample(
            &series,
            &ResampleConfig::new(1.0, Aggregator::Sum, Imputer::Zero).unwrap(),
        )
        .unwrap();
        let emb = build_embedding(&reg, 3).unwrap();
        let cfg = FeatureConfig::default();
        let rows = compute_feature_matrix(&emb, &series, &cfg);
        assert_eq!(rows.len(), emb.rows.len());
        let width = feature_columns(&cfg).len();
        for row in &rows {
            assert_eq!(row.features.len(), width);
            assert!(row.features.iter().all(|v| v.is_finite()));
            assert_eq!(row.entity_id.as_deref(), Some("e1"));
        }
    }

    #[test]
    fn empty_window_zeroes_orig_features_but_keeps_res() {
        let obs = vec![
            Observation { timestamp: 0.0, value: 3.0, aux: vec![] },
            Observation { timestamp: 10.0, value: 9.0, aux: vec![] },
        ];
        let series = IrregularSeries::new(None, vec![], obs).unwrap();
        let reg = resample(
            &series,
            &ResampleConfig::new(1.0, Aggregator::Mean, Imputer::ForwardFill).unwrap(),
        )
        .unwrap();
        let emb = build_embedding(&reg, 3).unwrap();
        let cfg = FeatureConfig::default();
        // row starting at bin 1 covers bins 1..=3: all imputed
        let row = compute_feature_row(&emb.rows[1], &series, 1.0, &cfg);
        assert_eq!(row.feature(&cfg, "missing_t_count_res"), Some(3.0));
        assert_eq!(row.feature(&cfg, "rel_disp_t_orig"), Some(0.0));
        assert_eq!(row.feature(&cfg, "t_dif_stats_orig_sum"), Some(0.0));
        assert_eq!(row.feature(&cfg, "min_max_t_dif_orig"), Some(0.0));
        // forward-filled lags are the constant 3.0
        assert_eq!(row.feature(&cfg, "mov_avg_res"), Some(3.0));
        assert_eq!(row.feature(&cfg, "rel_disp_y_res"), Some(0.0));
    }

    #[test]
    fn single_observation_window() {
        let obs = vec![
            Observation { timestamp: 0.25, value: 4.0, aux: vec![] },
            Observation { timestamp: 6.0, value: 9.0, aux: vec![] },
        ];
        let series = IrregularSeries::new(None, vec![], obs).unwrap();
        let reg = resample(
            &series,
            &ResampleConfig::new(1.0, Aggregator::Sum, Imputer::Zero).unwrap(),
        )
        .unwrap();
        let emb = build_embedding(&reg, 3).unwrap();
        let cfg = FeatureConfig::default();
        let row = compute_feature_row(&emb.rows[0], &series, 1.0, &cfg);
        assert_eq!(row.feature(&cfg, "t_dif_stats_orig_mean"), Some(0.0));
        assert_eq!(row.feature(&cfg, "min_max_t_dif_orig"), Some(0.0));
        assert_eq!(row.feature(&cfg, "min_max_t_dif_f_orig"), Some(0.0));
        assert_eq!(row.feature(&cfg, "t_y_avg_mul_orig"), Some(0.25 * 4.0));
    }

    #[test]
    fn disabled_catalog_gives_lags_only() {
        let series = small_series();
        let reg = resample(
            &series,
            &ResampleConfig::new(1.0, Aggregator::Sum, Imputer::Zero).unwrap(),
        )
        .unwrap();
        let emb = build_embedding(&reg, 3).unwrap();
        let rows = compute_feature_matrix(&emb, &series, &FeatureConfig::none());
        for row in &rows {
            assert!(row.features.is_empty());
            assert_eq!(row.lags.len(), 3);
        }
    }
}
