//! Embedding identities: rows are exact slices, counts are `k - l`, and the
//! per-row window equals a brute-force timestamp filter.

mod common;

use autofits::{
    build_embedding, resample, window_observations, Aggregator, Imputer, ResampleConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn rows_are_exact_slices_with_count_k_minus_l() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..200 {
        let series = common::random_series(&mut rng, None, 1, 150);
        let frequency = rng.gen_range(0.1..4.0);
        let cfg = ResampleConfig::new(frequency, Aggregator::Sum, Imputer::Zero).unwrap();
        let reg = resample(&series, &cfg).unwrap();
        let k = reg.len();
        for lag in 1..=12usize {
            let emb = build_embedding(&reg, lag).unwrap();
            if k <= lag {
                assert!(emb.rows.is_empty());
                assert!(emb.insufficient);
                continue;
            }
            assert_eq!(emb.rows.len(), k - lag);
            assert!(!emb.insufficient);
            for (j, row) in emb.rows.iter().enumerate() {
                assert_eq!(row.lags.as_slice(), &reg.values()[j..j + lag]);
                assert_eq!(row.target, reg.values()[j + lag]);
                assert_eq!(row.target_time, reg.bin_timestamp(j + lag));
                assert_eq!(row.lag_imputed.as_slice(), &reg.imputed()[j..j + lag]);
            }
        }
    }
}

#[test]
fn window_members_equal_brute_force_interval_filter() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..1000 {
        let series = common::random_series(&mut rng, None, 2, 120);
        let frequency = rng.gen_range(0.1..3.0);
        let cfg = ResampleConfig::new(frequency, Aggregator::Mean, Imputer::ForwardFill).unwrap();
        let reg = resample(&series, &cfg).unwrap();
        let lag = rng.gen_range(1..=8usize);
        let emb = build_embedding(&reg, lag).unwrap();
        for row in &emb.rows {
            let got: Vec<usize> = row.window_obs.clone();
            let expected: Vec<usize> = series
                .observations()
                .iter()
                .enumerate()
                .filter(|(_, o)| o.timestamp >= row.window_start && o.timestamp < row.window_end)
                .map(|(i, _)| i)
                .collect();
            assert_eq!(got, expected);

            // window_observations maps the same indices to observations
            let values: Vec<f64> = window_observations(row, &series)
                .iter()
                .map(|o| o.timestamp)
                .collect();
            let expected_values: Vec<f64> = expected
                .iter()
                .map(|&i| series.observations()[i].timestamp)
                .collect();
            assert_eq!(values, expected_values);
        }
    }
}
