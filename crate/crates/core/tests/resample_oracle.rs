//! Resampling checked against a brute-force per-observation binning oracle.
//!
//! The oracle assigns each observation by linearly scanning bins until the
//! interval predicate `t0 + i*f <= t < t0 + (i+1)*f` holds, computes bin
//! values with its own sum/mean/imputation code, and never touches the
//! implementation's arithmetic.

mod common;

use autofits::{bin_index, resample, Aggregator, Imputer, IrregularSeries, ResampleConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct OracleResult {
    members: Vec<Vec<usize>>,
    values: Vec<f64>,
    imputed: Vec<bool>,
}

fn oracle_resample(
    series: &IrregularSeries,
    frequency: f64,
    aggregator: Aggregator,
    imputer: Imputer,
) -> OracleResult {
    let ts: Vec<f64> = series.timestamps().collect();
    let ys: Vec<f64> = series.values().collect();
    let origin = ts[0];

    let assign = |t: f64| -> usize {
        let mut bin = 0usize;
        loop {
            let lo = origin + bin as f64 * frequency;
            let hi = origin + (bin + 1) as f64 * frequency;
            if t >= lo && t < hi {
                return bin;
            }
            bin += 1;
        }
    };

    let bins = assign(*ts.last().unwrap()) + 1;
    let mut members = vec![Vec::new(); bins];
    for (i, &t) in ts.iter().enumerate() {
        members[assign(t)].push(i);
    }

    let mut values = Vec::with_capacity(bins);
    let mut imputed = Vec::with_capacity(bins);
    let mut last = 0.0;
    for member in &members {
        if member.is_empty() {
            imputed.push(true);
            values.push(match imputer {
                Imputer::Zero => 0.0,
                Imputer::ForwardFill => last,
            });
        } else {
            imputed.push(false);
            let sum: f64 = member.iter().map(|&i| ys[i]).sum();
            let value = match aggregator {
                Aggregator::Sum => sum,
                Aggregator::Mean => sum / member.len() as f64,
            };
            values.push(value);
            last = value;
        }
    }
    OracleResult {
        members,
        values,
        imputed,
    }
}

fn check_series(series: &IrregularSeries, frequency: f64, aggregator: Aggregator, imputer: Imputer) {
    let cfg = ResampleConfig::new(frequency, aggregator, imputer).unwrap();
    let reg = resample(series, &cfg).unwrap();
    let oracle = oracle_resample(series, frequency, aggregator, imputer);

    assert_eq!(reg.len(), oracle.values.len(), "bin count");
    assert_eq!(reg.bin_members(), oracle.members.as_slice(), "membership");
    assert_eq!(reg.imputed(), oracle.imputed.as_slice(), "imputation flags");
    for (i, (got, want)) in reg.values().iter().zip(&oracle.values).enumerate() {
        assert!(
            (got - want).abs() <= 1e-9 * want.abs().max(1.0),
            "bin {i}: {got} vs {want}"
        );
    }

    // partition: members are disjoint and cover the source
    let mut seen = vec![false; series.len()];
    for member in reg.bin_members() {
        for &i in member {
            assert!(!seen[i], "observation {i} assigned twice");
            seen[i] = true;
        }
    }
    assert!(seen.iter().all(|&s| s), "some observation unassigned");

    // bin_index agrees with the stored membership
    for (bin, member) in reg.bin_members().iter().enumerate() {
        for &i in member {
            let t = series.observations()[i].timestamp;
            assert_eq!(bin_index(&reg, t).unwrap(), bin);
        }
    }
}

#[test]
fn matches_brute_force_binning_on_random_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for round in 0..1000 {
        let series = common::random_series(&mut rng, None, 1, 200);
        let frequency = rng.gen_range(0.05..5.0);
        let aggregator = if round % 2 == 0 { Aggregator::Sum } else { Aggregator::Mean };
        let imputer = if round % 3 == 0 { Imputer::ForwardFill } else { Imputer::Zero };
        check_series(&series, frequency, aggregator, imputer);
    }
}

#[test]
fn sum_conservation_on_random_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let series = common::random_series(&mut rng, None, 1, 100);
        let frequency = rng.gen_range(0.05..5.0);
        let cfg = ResampleConfig::new(frequency, Aggregator::Sum, Imputer::Zero).unwrap();
        let reg = resample(&series, &cfg).unwrap();
        let total: f64 = reg.values().iter().sum();
        let original: f64 = series.values().sum();
        assert!((total - original).abs() <= 1e-9 * original.abs().max(1.0));
    }
}

#[test]
fn forward_fill_repeats_nearest_preceding_observed_bin() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let series = common::random_series(&mut rng, None, 2, 80);
        let frequency = rng.gen_range(0.05..1.0);
        let cfg = ResampleConfig::new(frequency, Aggregator::Mean, Imputer::ForwardFill).unwrap();
        let reg = resample(&series, &cfg).unwrap();
        let mut last = f64::NAN;
        for i in 0..reg.len() {
            if reg.imputed()[i] {
                assert_eq!(reg.values()[i], last, "bin {i}");
            } else {
                last = reg.values()[i];
            }
        }
        assert!(!reg.imputed()[0], "first bin holds the first observation");
    }
}

#[test]
fn halving_frequency_keeps_the_total_under_sum_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let series = common::random_series(&mut rng, None, 1, 120);
        let frequency = rng.gen_range(0.2..4.0);
        let total = |f: f64| {
            let cfg = ResampleConfig::new(f, Aggregator::Sum, Imputer::Zero).unwrap();
            resample(&series, &cfg).unwrap().values().iter().sum::<f64>()
        };
        let coarse = total(frequency);
        let fine = total(frequency / 2.0);
        assert!((coarse - fine).abs() <= 1e-9 * coarse.abs().max(1.0));
    }
}
