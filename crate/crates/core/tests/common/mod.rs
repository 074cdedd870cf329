//! Shared generators for the integration suites.

use autofits::{IrregularSeries, Observation};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A random irregular series: exponential-ish gaps, occasional duplicate
/// timestamps, values in [-10, 10).
pub fn random_series(
    rng: &mut ChaCha8Rng,
    entity_id: Option<&str>,
    min_len: usize,
    max_len: usize,
) -> IrregularSeries {
    let len = rng.gen_range(min_len..=max_len);
    let mut t = rng.gen_range(-100.0..100.0);
    let mut observations = Vec::with_capacity(len);
    for i in 0..len {
        if i > 0 && !rng.gen_bool(0.05) {
            let gap: f64 = rng.gen_range(0.01..3.0);
            t += gap * gap;
        }
        observations.push(Observation {
            timestamp: t,
            value: rng.gen_range(-10.0..10.0),
            aux: vec![],
        });
    }
    IrregularSeries::new(entity_id.map(str::to_string), vec![], observations).unwrap()
}
