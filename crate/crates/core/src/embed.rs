//! Time-delay embedding of a regular series.
//!
//! Row `j` pairs the lag values `values[j..j+l]` with the next value as
//! target. Each row also carries its time window `[t_j, t_{j+l-1} + f)` —
//! closed at the start of the first lag bin, open at the *end* of the last
//! lag bin so that observations aggregated into that bin stay inside the
//! window — together with the indices of the source observations that fall
//! in it.

use crate::data::{IrregularSeries, Observation};
use crate::error::{Error, Result};
use crate::resample::RegularSeries;

/// One embedding row: lags, target and the originating time window.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRow {
    /// Lag values, oldest first.
    pub lags: Vec<f64>,
    /// Start times of the lag bins.
    pub lag_timestamps: Vec<f64>,
    /// Per lag bin: true when the bin held no source observations.
    pub lag_imputed: Vec<bool>,
    /// The value of the bin following the lags (NaN for a forecast row).
    pub target: f64,
    /// Start time of the target bin.
    pub target_time: f64,
    /// Window start (inclusive).
    pub window_start: f64,
    /// Window end (exclusive): end of the last lag bin.
    pub window_end: f64,
    /// Indices of source observations inside the window, time-ordered.
    pub window_obs: Vec<usize>,
}

/// All embedding rows for one regular series.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub rows: Vec<EmbeddingRow>,
    pub lag: usize,
    pub frequency: f64,
    /// Set when the series had too few bins (`k <= l`) to produce any row;
    /// drives entity discarding downstream.
    pub insufficient: bool,
}

fn make_row(reg: &RegularSeries, lag: usize, start: usize, target_index: usize) -> EmbeddingRow {
    let lags = reg.values()[start..start + lag].to_vec();
    let lag_timestamps: Vec<f64> = (start..start + lag).map(|i| reg.bin_timestamp(i)).collect();
    let lag_imputed = reg.imputed()[start..start + lag].to_vec();
    let window_obs: Vec<usize> = reg.bin_members()[start..start + lag]
        .iter()
        .flatten()
        .copied()
        .collect();
    let target = reg.values().get(target_index).copied().unwrap_or(f64::NAN);
    EmbeddingRow {
        lags,
        lag_timestamps,
        lag_imputed,
        target,
        target_time: reg.bin_timestamp(target_index),
        window_start: reg.bin_timestamp(start),
        window_end: reg.bin_timestamp(start + lag),
        window_obs,
    }
}

/// Builds the embedding matrix with `k - l` rows (none when `k <= l`).
pub fn build_embedding(reg: &RegularSeries, lag: usize) -> Result<EmbeddingMatrix> {
    if lag == 0 {
        return Err(Error::config("lag must be at least 1"));
    }
    let bins = reg.len();
    if bins <= lag {
        return Ok(EmbeddingMatrix {
            rows: Vec::new(),
            lag,
            frequency: reg.frequency(),
            insufficient: true,
        });
    }
    let rows = (0..bins - lag)
        .map(|j| make_row(reg, lag, j, j + lag))
        .collect();
    Ok(EmbeddingMatrix {
        rows,
        lag,
        frequency: reg.frequency(),
        insufficient: false,
    })
}

/// The row used for forecasting: lags are the final `l` bins and the target
/// bin starts right after the data (`target` is NaN since it is unobserved).
pub fn forecast_row(reg: &RegularSeries, lag: usize) -> Option<EmbeddingRow> {
    let bins = reg.len();
    if lag == 0 || bins < lag {
        return None;
    }
    Some(make_row(reg, lag, bins - lag, bins))
}

/// Source observations inside the row's window, time-ordered.
///
/// Equals the union of the lag bins' members, which in turn equals a brute
/// force filter on `window_start <= t < window_end`.
pub fn window_observations<'a>(
    row: &EmbeddingRow,
    src: &'a IrregularSeries,
) -> Vec<&'a Observation> {
    let obs = src.observations();
    row.window_obs.iter().map(|&i| &obs[i]).collect()
}
