//! Temporal aggregation of an irregular series into fixed-width bins.
//!
//! Bins are left-closed right-open intervals `[t0 + i*f, t0 + (i+1)*f)`
//! anchored at the first observation, so bin 0 always contains at least that
//! observation. The series is never padded beyond the last observation. Each
//! bin remembers which source observations fell into it; that mapping is what
//! the irregularity features are computed from later.

use crate::data::IrregularSeries;
use crate::error::{Error, Result};

/// How to summarize the observations inside one bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregator {
    Sum,
    Mean,
}

impl Aggregator {
    pub fn apply(self, values: &[f64]) -> f64 {
        match self {
            Aggregator::Sum => values.iter().sum(),
            Aggregator::Mean => crate::stats::mean(values),
        }
    }
}

/// How to fill bins with no observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Imputer {
    /// Empty bins get 0.
    Zero,
    /// Empty bins repeat the most recent non-empty bin's value.
    ForwardFill,
}

/// Frequency, aggregator and imputer for one resampling run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleConfig {
    frequency: f64,
    pub aggregator: Aggregator,
    pub imputer: Imputer,
}

impl ResampleConfig {
    /// Builds a config; the frequency must be finite and strictly positive.
    pub fn new(frequency: f64, aggregator: Aggregator, imputer: Imputer) -> Result<Self> {
        if !frequency.is_finite() || frequency <= 0.0 {
            return Err(Error::config(format!(
                "frequency must be finite and > 0, got {frequency}"
            )));
        }
        Ok(ResampleConfig {
            frequency,
            aggregator,
            imputer,
        })
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }
}

/// A regular series produced by [`resample`].
#[derive(Debug, Clone, PartialEq)]
pub struct RegularSeries {
    origin: f64,
    frequency: f64,
    values: Vec<f64>,
    imputed: Vec<bool>,
    bin_members: Vec<Vec<usize>>,
}

impl RegularSeries {
    /// Start of the first bin (the first observation's timestamp).
    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    /// Number of bins `k`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `imputed[i]` is true exactly when bin `i` had no source observations.
    pub fn imputed(&self) -> &[bool] {
        &self.imputed
    }

    /// Indices into the source series, per bin.
    pub fn bin_members(&self) -> &[Vec<usize>] {
        &self.bin_members
    }

    /// Start time of bin `i` (also defined for `i >= len`, e.g. the forecast bin).
    pub fn bin_timestamp(&self, index: usize) -> f64 {
        self.origin + index as f64 * self.frequency
    }

    pub fn bin_timestamps(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.bin_timestamp(i)).collect()
    }
}

/// Canonical bin assignment: the unique `i` with
/// `origin + i*f <= t < origin + (i+1)*f`, evaluated in f64.
///
/// The flooring division is only a first guess; the fix-up loops make the
/// result agree with the interval predicate even when the division rounds
/// across a boundary.
fn bin_of(origin: f64, frequency: f64, t: f64) -> usize {
    debug_assert!(t >= origin);
    let mut index = ((t - origin) / frequency).floor();
    if index < 0.0 {
        index = 0.0;
    }
    let mut index = index as usize;
    while index > 0 && t < origin + index as f64 * frequency {
        index -= 1;
    }
    while t >= origin + (index + 1) as f64 * frequency {
        index += 1;
    }
    index
}

/// Aggregates `series` into bins of width `cfg.frequency()`.
///
/// The bin count is `floor((t_last - t0) / f) + 1`: the span of the data, not
/// padded further. Non-empty bins hold the aggregator over their members;
/// empty bins are imputed and flagged.
pub fn resample(series: &IrregularSeries, cfg: &ResampleConfig) -> Result<RegularSeries> {
    let obs = series.observations();
    if obs.is_empty() {
        return Err(Error::data("cannot resample an empty series"));
    }
    let origin = obs[0].timestamp;
    let frequency = cfg.frequency();
    let last = obs[obs.len() - 1].timestamp;
    let bins = bin_of(origin, frequency, last) + 1;

    let mut bin_members: Vec<Vec<usize>> = vec![Vec::new(); bins];
    for (index, o) in obs.iter().enumerate() {
        bin_members[bin_of(origin, frequency, o.timestamp)].push(index);
    }

    let mut values = Vec::with_capacity(bins);
    let mut imputed = Vec::with_capacity(bins);
    let mut last_observed = 0.0;
    for members in &bin_members {
        if members.is_empty() {
            let value = match cfg.imputer {
                Imputer::Zero => 0.0,
                Imputer::ForwardFill => last_observed,
            };
            values.push(value);
            imputed.push(true);
        } else {
            let member_values: Vec<f64> = members.iter().map(|&i| obs[i].value).collect();
            let value = cfg.aggregator.apply(&member_values);
            values.push(value);
            imputed.push(false);
            last_observed = value;
        }
    }

    Ok(RegularSeries {
        origin,
        frequency,
        values,
        imputed,
        bin_members,
    })
}

/// Index of the bin containing time `t` (0-based).
///
/// Defined for any `t >= origin`, including times past the last bin; `t`
/// before the origin is a range error.
pub fn bin_index(reg: &RegularSeries, t: f64) -> Result<usize> {
    if !(t >= reg.origin()) {
        return Err(Error::data(format!(
            "time {t} precedes the series origin {}",
            reg.origin()
        )));
    }
    Ok(bin_of(reg.origin(), reg.frequency(), t))
}
