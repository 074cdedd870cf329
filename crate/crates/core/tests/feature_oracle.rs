//! Every catalog column checked against a naive reimplementation of its
//! formula, plus the catalog's invariants.
//!
//! The naive code below recomputes each feature from the row's raw inputs —
//! window observations found by interval filtering, lag values, bin start
//! times — using straight-line arithmetic, on purpose sharing nothing with
//! the implementation.

mod common;

use std::collections::HashMap;

use autofits::{
    build_embedding, compute_feature_row, feature_columns, resample, Aggregator, EmbeddingRow,
    FeatureConfig, Imputer, IrregularSeries, ResampleConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn naive_mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

fn naive_pop_var(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = naive_mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

fn naive_rel_disp(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = naive_mean(x);
    if m.abs() < 1e-12 {
        return 0.0;
    }
    naive_pop_var(x).sqrt() / m
}

fn naive_quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.len() == 1 {
        return sorted[0];
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < sorted.len() {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

fn naive_entropy(x: &[f64], bins: usize) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return 0.0;
    }
    let mut counts = vec![0usize; bins];
    for &v in x {
        let mut slot = (((v - min) / (max - min)) * bins as f64).floor() as usize;
        if slot >= bins {
            slot = bins - 1;
        }
        counts[slot] += 1;
    }
    let n = x.len() as f64;
    let mut h = 0.0;
    for &c in &counts {
        if c > 0 {
            let p = c as f64 / n;
            h -= p * p.ln();
        }
    }
    h
}

fn soft(z: f64, g: f64) -> f64 {
    if z > g {
        z - g
    } else if z < -g {
        z + g
    } else {
        0.0
    }
}

/// Closed-form OLS prediction of `y` at `t_pred` from a 1-column design,
/// with the documented 1e-10 Gram jitter.
fn naive_ols_predict(ts: &[f64], ys: &[f64], t_pred: f64) -> f64 {
    let tm = naive_mean(ts);
    let ym = naive_mean(ys);
    let sxx: f64 = ts.iter().map(|t| (t - tm) * (t - tm)).sum();
    let sxy: f64 = ts.iter().zip(ys).map(|(t, y)| (t - tm) * (y - ym)).sum();
    let beta = sxy / (sxx + 1e-10);
    ym + beta * (t_pred - tm)
}

/// Closed-form single-coordinate LASSO prediction (one standardized column
/// converges in one soft-threshold step).
fn naive_lasso_predict(ts: &[f64], ys: &[f64], t_pred: f64, lambda: f64) -> f64 {
    let n = ts.len() as f64;
    let tm = naive_mean(ts);
    let s = naive_pop_var(ts).sqrt();
    let ym = naive_mean(ys);
    if s == 0.0 {
        return ym;
    }
    let z: f64 = ts
        .iter()
        .zip(ys)
        .map(|(t, y)| (t - tm) / s * (y - ym))
        .sum::<f64>()
        / n;
    let beta = soft(z, lambda) / s;
    (ym - beta * tm) + beta * t_pred
}

/// Recomputes the full catalog for one row from first principles.
fn naive_catalog(
    row: &EmbeddingRow,
    src: &IrregularSeries,
    frequency: f64,
    cfg: &FeatureConfig,
) -> HashMap<String, f64> {
    // window observations by brute-force interval filtering
    let mut t_orig = Vec::new();
    let mut y_orig = Vec::new();
    for o in src.observations() {
        if o.timestamp >= row.window_start && o.timestamp < row.window_end {
            t_orig.push(o.timestamp);
            y_orig.push(o.value);
        }
    }
    let t_res = &row.lag_timestamps;
    let y_res = &row.lags;
    let lag = row.lags.len();

    let avg_mul = |ts: &[f64], ys: &[f64]| {
        if ts.is_empty() {
            0.0
        } else {
            ts.iter().zip(ys).map(|(t, y)| t * y).sum::<f64>() / ts.len() as f64
        }
    };
    let avg_dif_mul = |ts: &[f64], ys: &[f64]| {
        if ts.len() < 2 {
            return 0.0;
        }
        let mut total = 0.0;
        for i in 1..ts.len() {
            total += (ts[i] - ts[i - 1]) * (ys[i] - ys[i - 1]);
        }
        total / (ts.len() - 1) as f64
    };
    let area = |ts: &[f64], ys: &[f64]| {
        if ts.len() < 2 {
            return 0.0;
        }
        let span = |v: &[f64]| {
            v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - v.iter().cloned().fold(f64::INFINITY, f64::min)
        };
        span(ts) * span(ys)
    };

    let mut out = HashMap::new();
    out.insert("rel_disp_t_orig".into(), naive_rel_disp(&t_orig));
    out.insert("rel_disp_t_res".into(), naive_rel_disp(t_res));
    out.insert("t_y_avg_mul_orig".into(), avg_mul(&t_orig, &y_orig));
    out.insert("t_y_avg_mul_res".into(), avg_mul(t_res, y_res));
    out.insert("t_y_avg_dif_mul_orig".into(), avg_dif_mul(&t_orig, &y_orig));
    out.insert("t_y_avg_dif_mul_res".into(), avg_dif_mul(t_res, y_res));
    out.insert("2d_space_area_orig".into(), area(&t_orig, &y_orig));
    out.insert("2d_space_area_res".into(), area(t_res, y_res));

    // empty lag bins by interval filtering per bin
    let mut missing = 0.0;
    for i in 0..lag {
        let lo = row.lag_timestamps[i];
        let hi = if i + 1 < lag {
            row.lag_timestamps[i + 1]
        } else {
            row.window_end
        };
        let occupied = src
            .observations()
            .iter()
            .any(|o| o.timestamp >= lo && o.timestamp < hi);
        if !occupied {
            missing += 1.0;
        }
    }
    out.insert("missing_t_count_res".into(), missing);

    let diffs: Vec<f64> = t_orig.windows(2).map(|w| w[1] - w[0]).collect();
    let stats: [(&str, f64); 9] = if t_orig.len() < 2 {
        [
            ("mean", 0.0),
            ("std", 0.0),
            ("var", 0.0),
            ("sum", 0.0),
            ("median", 0.0),
            ("iqr", 0.0),
            ("min", 0.0),
            ("max", 0.0),
            ("rel_disp", 0.0),
        ]
    } else {
        [
            ("mean", naive_mean(&diffs)),
            ("std", naive_pop_var(&diffs).sqrt()),
            ("var", naive_pop_var(&diffs)),
            ("sum", diffs.iter().sum()),
            ("median", naive_quantile(&diffs, 0.5)),
            (
                "iqr",
                naive_quantile(&diffs, 0.75) - naive_quantile(&diffs, 0.25),
            ),
            ("min", diffs.iter().cloned().fold(f64::INFINITY, f64::min)),
            ("max", diffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
            ("rel_disp", naive_rel_disp(&diffs)),
        ]
    };
    for (name, value) in stats {
        out.insert(format!("t_dif_stats_orig_{name}"), value);
    }

    let span = if t_orig.len() < 2 {
        0.0
    } else {
        t_orig[t_orig.len() - 1] - t_orig[0]
    };
    out.insert("min_max_t_dif_orig".into(), span);
    out.insert("min_max_t_dif_f_orig".into(), if t_orig.len() < 2 { 0.0 } else { span / frequency });
    out.insert("entropy_t_orig".into(), naive_entropy(&t_orig, cfg.entropy_bins));
    out.insert("entropy_y_orig".into(), naive_entropy(&y_orig, cfg.entropy_bins));
    out.insert("entropy_y_res".into(), naive_entropy(y_res, cfg.entropy_bins));
    out.insert("rel_disp_y_orig".into(), naive_rel_disp(&y_orig));
    out.insert("rel_disp_y_res".into(), naive_rel_disp(y_res));

    let take = cfg.mov_avg_window.min(lag);
    out.insert("mov_avg_res".into(), naive_mean(&y_res[lag - take..]));

    let train_t = &t_res[..lag - 1];
    let train_y = &y_res[..lag - 1];
    let actual = y_res[lag - 1];
    let degenerate = train_y.len() < 2 || naive_pop_var(train_t) == 0.0;
    let (ols_pred, lasso_pred) = if degenerate {
        let fb = naive_mean(train_y);
        (fb, fb)
    } else {
        (
            naive_ols_predict(train_t, train_y, t_res[lag - 1]),
            naive_lasso_predict(train_t, train_y, t_res[lag - 1], cfg.reg_mod_lambda),
        )
    };
    out.insert("reg_mod_res_ols_pred".into(), ols_pred);
    out.insert("reg_mod_res_ols_err".into(), actual - ols_pred);
    out.insert("reg_mod_res_ols_abs_err".into(), (actual - ols_pred).abs());
    out.insert("reg_mod_res_lasso_pred".into(), lasso_pred);
    out.insert("reg_mod_res_lasso_err".into(), actual - lasso_pred);
    out.insert("reg_mod_res_lasso_abs_err".into(), (actual - lasso_pred).abs());
    out
}

fn random_rows(
    rng: &mut ChaCha8Rng,
) -> (IrregularSeries, f64, usize, Vec<EmbeddingRow>) {
    loop {
        let series = common::random_series(rng, None, 3, 120);
        let frequency = rng.gen_range(0.1..4.0);
        let aggregator = if rng.gen_bool(0.5) { Aggregator::Sum } else { Aggregator::Mean };
        let imputer = if rng.gen_bool(0.5) { Imputer::Zero } else { Imputer::ForwardFill };
        let cfg = ResampleConfig::new(frequency, aggregator, imputer).unwrap();
        let reg = resample(&series, &cfg).unwrap();
        let lag = rng.gen_range(1..=10usize);
        let emb = build_embedding(&reg, lag).unwrap();
        if !emb.rows.is_empty() {
            return (series, frequency, lag, emb.rows);
        }
    }
}

#[test]
fn every_column_matches_its_naive_formula_on_random_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(31337);
    let cfg = FeatureConfig::default();
    let names = feature_columns(&cfg);
    let mut checked = 0usize;
    while checked < 1000 {
        let (series, frequency, _lag, rows) = random_rows(&mut rng);
        for row in rows.iter().take(5) {
            let computed = compute_feature_row(row, &series, frequency, &cfg);
            let expected = naive_catalog(row, &series, frequency, &cfg);
            assert_eq!(computed.features.len(), names.len());
            for (name, &value) in names.iter().zip(&computed.features) {
                let want = expected[name];
                assert!(
                    close(value, want),
                    "{name}: implementation {value} vs oracle {want}"
                );
            }
            checked += 1;
            if checked == 1000 {
                break;
            }
        }
    }
}

#[test]
fn rel_disp_is_scale_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let x: Vec<f64> = (0..rng.gen_range(2..30)).map(|_| rng.gen_range(0.1..50.0)).collect();
        let base = autofits::features::rel_disp(&x);
        for c in [0.5, 2.0, 3.7, 1000.0] {
            let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
            let got = autofits::features::rel_disp(&scaled);
            assert!((got - base).abs() <= 1e-9, "c={c}: {got} vs {base}");
        }
    }
}

#[test]
fn entropy_is_invariant_under_positive_affine_maps() {
    // grid-valued inputs keep the histogram arithmetic exact
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..200 {
        let x: Vec<f64> = (0..rng.gen_range(2..40))
            .map(|_| f64::from(rng.gen_range(-64i32..64)) / 16.0)
            .collect();
        let base = autofits::features::entropy(&x, 10);
        for (a, b) in [(2.0, 3.0), (0.5, -7.0), (4.0, 0.25)] {
            let mapped: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            assert_eq!(autofits::features::entropy(&mapped, 10), base, "a={a} b={b}");
        }
    }
}

#[test]
fn time_features_are_translation_covariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let len = rng.gen_range(2..20);
        let mut ts: Vec<f64> = Vec::with_capacity(len);
        let mut t = 0.0;
        for _ in 0..len {
            t += f64::from(rng.gen_range(1i32..50)) / 4.0;
            ts.push(t);
        }
        let ys: Vec<f64> = (0..len).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let shift = 1024.0;
        let shifted: Vec<f64> = ts.iter().map(|v| v + shift).collect();

        assert_eq!(
            autofits::features::t_dif_stats(&ts),
            autofits::features::t_dif_stats(&shifted)
        );
        assert_eq!(
            autofits::features::min_max_t_dif(&ts, 2.0),
            autofits::features::min_max_t_dif(&shifted, 2.0)
        );
        assert_eq!(
            autofits::features::space_area_2d(&ts, &ys),
            autofits::features::space_area_2d(&shifted, &ys)
        );
        assert_eq!(
            autofits::features::entropy(&ts, 10),
            autofits::features::entropy(&shifted, 10)
        );
    }
}

#[test]
fn t_dif_stats_are_internally_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..300 {
        let series = common::random_series(&mut rng, None, 2, 60);
        let ts: Vec<f64> = series.timestamps().collect();
        let stats = autofits::features::t_dif_stats(&ts);
        let span = ts[ts.len() - 1] - ts[0];
        assert!(close(stats.sum, span), "sum {} vs span {span}", stats.sum);
        assert!(
            close(stats.sum, autofits::features::min_max_t_dif(&ts, 1.0).0),
            "sum vs min_max_t_dif"
        );
        assert!(stats.min <= stats.median + 1e-12);
        assert!(stats.median <= stats.max + 1e-12);
        assert!(close(stats.var, stats.std * stats.std));
    }
}

#[test]
fn missing_t_count_is_bounded_and_counts_unoccupied_bins() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..200 {
        let (series, _f, lag, rows) = random_rows(&mut rng);
        for row in rows.iter().take(3) {
            let missing = autofits::features::missing_t_count(row);
            assert!(missing >= 0.0 && missing <= lag as f64);
            // equals l minus the number of distinct lag bins holding observations
            let mut occupied = 0;
            for i in 0..lag {
                let lo = row.lag_timestamps[i];
                let hi = if i + 1 < lag {
                    row.lag_timestamps[i + 1]
                } else {
                    row.window_end
                };
                if series
                    .observations()
                    .iter()
                    .any(|o| o.timestamp >= lo && o.timestamp < hi)
                {
                    occupied += 1;
                }
            }
            assert_eq!(missing, (lag - occupied) as f64);
        }
    }
}
