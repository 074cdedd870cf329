//! Metrics, the frequency-sweep runner and report emission.
//!
//! A sweep runs the full pipeline once per grid frequency, then fits and
//! scores every (learner, variant) combination on the same holdout split.
//! Cells are independent: each derives its own RNG seed from the base seed
//! and its grid position, so parallel and sequential execution agree and a
//! rerun is byte-identical. A failing cell records its reason instead of
//! aborting the sweep.

use rayon::prelude::*;

use crate::data::EntityDataset;
use crate::error::{Error, Result};
use crate::learners::{fit, LearnerKind};
use crate::pipeline::{
    assemble_variant, holdout_split, run_dataset, ExternalFeatures, PipelineConfig, Variant,
};

/// Mean absolute error.
pub fn mae(pred: &[f64], actual: &[f64]) -> Result<f64> {
    if pred.len() != actual.len() {
        return Err(Error::data("mae: prediction/actual length mismatch"));
    }
    if pred.is_empty() {
        return Err(Error::data("mae: empty inputs"));
    }
    Ok(pred
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a).abs())
        .sum::<f64>()
        / pred.len() as f64)
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
///
/// May be negative. A constant actual vector makes it undefined; that is
/// reported as `Ok(None)` rather than an infinity.
pub fn r2(pred: &[f64], actual: &[f64]) -> Result<Option<f64>> {
    if pred.len() != actual.len() {
        return Err(Error::data("r2: prediction/actual length mismatch"));
    }
    if pred.len() < 2 {
        return Err(Error::data("r2 needs at least 2 points"));
    }
    let mean = crate::stats::mean(actual);
    let ss_tot: f64 = actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    if ss_tot == 0.0 {
        return Ok(None);
    }
    let ss_res: f64 = pred
        .iter()
        .zip(actual)
        .map(|(p, a)| (a - p) * (a - p))
        .sum();
    Ok(Some(1.0 - ss_res / ss_tot))
}

/// The grid of a sweep run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    /// Frequencies in grid units (converted by the config's scale).
    pub frequencies: Vec<f64>,
    pub learners: Vec<LearnerKind>,
    pub variants: Vec<Variant>,
}

/// Outcome marker for one sweep cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CellStatus {
    Ok,
    Failed(String),
}

impl CellStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, CellStatus::Ok)
    }
}

impl std::fmt::Display for CellStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CellStatus::Ok => f.write_str("ok"),
            CellStatus::Failed(reason) => write!(f, "failed: {reason}"),
        }
    }
}

/// Metrics for one (frequency, learner, variant) combination.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub frequency: f64,
    pub lag: usize,
    pub learner: LearnerKind,
    pub variant: Variant,
    pub mae: Option<f64>,
    /// `None` when undefined (constant test target) or the cell failed.
    pub r2: Option<f64>,
    pub n_test: usize,
    pub entities_used: usize,
    pub entities_discarded: usize,
    pub status: CellStatus,
}

/// All cells of a sweep plus reproducibility metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
    pub seed: u64,
    pub config_fingerprint: String,
    pub dataset_fingerprint: String,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn config_fingerprint(base: &PipelineConfig, grid: &SweepGrid) -> String {
    format!("{:016x}", fnv1a(format!("{base:?}|{grid:?}").as_bytes()))
}

fn dataset_fingerprint(dataset: &EntityDataset) -> String {
    let mut bytes = Vec::new();
    for (id, series) in dataset.entities() {
        bytes.extend_from_slice(id.as_bytes());
        for obs in series.observations() {
            bytes.extend_from_slice(&obs.timestamp.to_bits().to_le_bytes());
            bytes.extend_from_slice(&obs.value.to_bits().to_le_bytes());
            for aux in &obs.aux {
                bytes.extend_from_slice(&aux.to_bits().to_le_bytes());
            }
        }
    }
    format!("{:016x}", fnv1a(&bytes))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Order-independent per-cell seed so parallel scheduling cannot change results.
fn cell_seed(base: u64, freq_index: usize, learner_index: usize, variant_index: usize) -> u64 {
    splitmix(
        base ^ splitmix(freq_index as u64 + 1)
            ^ splitmix((learner_index as u64 + 1) << 16)
            ^ splitmix((variant_index as u64 + 1) << 32),
    )
}

fn failed_cells(
    frequency: f64,
    lag: usize,
    grid: &SweepGrid,
    entities_used: usize,
    entities_discarded: usize,
    reason: &str,
) -> Vec<SweepCell> {
    let mut cells = Vec::new();
    for &learner in &grid.learners {
        for &variant in &grid.variants {
            cells.push(SweepCell {
                frequency,
                lag,
                learner,
                variant,
                mae: None,
                r2: None,
                n_test: 0,
                entities_used,
                entities_discarded,
                status: CellStatus::Failed(reason.to_string()),
            });
        }
    }
    cells
}

fn sweep_frequency(
    dataset: &EntityDataset,
    base: &PipelineConfig,
    grid: &SweepGrid,
    external: Option<&ExternalFeatures>,
    freq_index: usize,
) -> Vec<SweepCell> {
    let frequency = grid.frequencies[freq_index];
    let cfg = base.with_frequency(frequency);
    let lag = match cfg.resolved_lag() {
        Ok(lag) => lag,
        Err(e) => return failed_cells(frequency, 0, grid, 0, 0, &e.to_string()),
    };

    let merged = match run_dataset(dataset, &cfg) {
        Ok(merged) => merged,
        Err(e) => return failed_cells(frequency, lag, grid, 0, 0, &e.to_string()),
    };
    let entities_used = merged.entities_used;
    let entities_discarded = merged.discarded.len();
    if merged.rows.is_empty() {
        return failed_cells(
            frequency,
            lag,
            grid,
            entities_used,
            entities_discarded,
            "all entities discarded",
        );
    }

    let split = match holdout_split(&merged.rows, cfg.holdout_fraction) {
        Ok(split) => split,
        Err(e) => {
            return failed_cells(
                frequency,
                lag,
                grid,
                entities_used,
                entities_discarded,
                &e.to_string(),
            )
        }
    };
    if split.test.is_empty() {
        return failed_cells(
            frequency,
            lag,
            grid,
            entities_used,
            entities_discarded,
            "holdout produced no test rows",
        );
    }

    let mut cells = Vec::new();
    for (learner_index, &learner) in grid.learners.iter().enumerate() {
        for (variant_index, &variant) in grid.variants.iter().enumerate() {
            let mut cell = SweepCell {
                frequency,
                lag,
                learner,
                variant,
                mae: None,
                r2: None,
                n_test: split.test.len(),
                entities_used,
                entities_discarded,
                status: CellStatus::Ok,
            };
            let result = (|| -> Result<(f64, Option<f64>)> {
                let train = assemble_variant(&split.train, &cfg.features, variant, external)?;
                let test = assemble_variant(&split.test, &cfg.features, variant, external)?;
                let mut learner_cfg = cfg.learner;
                learner_cfg.kind = learner;
                learner_cfg.seed =
                    cell_seed(cfg.learner.seed, freq_index, learner_index, variant_index);
                let model = fit(&learner_cfg, &train.matrix, &train.targets)?;
                let predictions = model.predict(&test.matrix)?;
                let mae = mae(&predictions, &test.targets)?;
                let r2 = if test.targets.len() >= 2 {
                    r2(&predictions, &test.targets)?
                } else {
                    None
                };
                Ok((mae, r2))
            })();
            match result {
                Ok((mae, r2)) => {
                    cell.mae = Some(mae);
                    cell.r2 = r2;
                }
                Err(e) => cell.status = CellStatus::Failed(e.to_string()),
            }
            cells.push(cell);
        }
    }
    cells
}

/// Runs the full grid. Cell order is (frequency, learner, variant), matching
/// the grid's own ordering.
pub fn run_sweep(
    dataset: &EntityDataset,
    base: &PipelineConfig,
    grid: &SweepGrid,
    external: Option<&ExternalFeatures>,
) -> Result<SweepReport> {
    if grid.frequencies.is_empty() || grid.learners.is_empty() || grid.variants.is_empty() {
        return Err(Error::config("sweep grid must not be empty"));
    }
    for &frequency in &grid.frequencies {
        if !frequency.is_finite() || frequency <= 0.0 {
            return Err(Error::config(format!(
                "grid frequency must be > 0, got {frequency}"
            )));
        }
        base.lag.resolve(frequency)?;
    }
    if grid.variants.contains(&Variant::Merged) && external.is_none() {
        return Err(Error::config(
            "grid includes the merged variant but no external feature bundle was given",
        ));
    }

    let cells: Vec<SweepCell> = (0..grid.frequencies.len())
        .into_par_iter()
        .flat_map_iter(|freq_index| sweep_frequency(dataset, base, grid, external, freq_index))
        .collect();

    Ok(SweepReport {
        cells,
        seed: base.learner.seed,
        config_fingerprint: config_fingerprint(base, grid),
        dataset_fingerprint: dataset_fingerprint(dataset),
    })
}

/// Win tally for one (learner, variant) pair across a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct WinRow {
    pub learner: LearnerKind,
    pub variant: Variant,
    /// Frequencies at which this learner had at least one scored cell.
    pub frequencies: usize,
    /// MAE win credits (ties split evenly).
    pub mae_wins: f64,
    /// R² win credits over frequencies where R² was defined.
    pub r2_wins: f64,
}

impl WinRow {
    pub fn mae_win_rate(&self) -> f64 {
        if self.frequencies == 0 {
            0.0
        } else {
            self.mae_wins / self.frequencies as f64
        }
    }

    pub fn r2_win_rate(&self) -> f64 {
        if self.frequencies == 0 {
            0.0
        } else {
            self.r2_wins / self.frequencies as f64
        }
    }
}

/// Per-frequency winners aggregated over the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct WinSummary {
    pub rows: Vec<WinRow>,
}

/// Credits, per (learner, frequency), one MAE win to the lowest-MAE variant
/// and one R² win to the highest-R² variant; ties split the credit evenly.
pub fn summarize_wins(report: &SweepReport) -> WinSummary {
    let mut learners: Vec<LearnerKind> = report.cells.iter().map(|c| c.learner).collect();
    learners.sort();
    learners.dedup();
    let mut variants: Vec<Variant> = report.cells.iter().map(|c| c.variant).collect();
    variants.sort();
    variants.dedup();
    let mut frequencies: Vec<f64> = report.cells.iter().map(|c| c.frequency).collect();
    frequencies.sort_by(f64::total_cmp);
    frequencies.dedup();

    let mut rows = Vec::new();
    for &learner in &learners {
        let mut tallies: Vec<WinRow> = variants
            .iter()
            .map(|&variant| WinRow {
                learner,
                variant,
                frequencies: 0,
                mae_wins: 0.0,
                r2_wins: 0.0,
            })
            .collect();

        for &frequency in &frequencies {
            let scored: Vec<&SweepCell> = report
                .cells
                .iter()
                .filter(|c| {
                    c.learner == learner
                        && c.frequency == frequency
                        && c.status.is_ok()
                        && c.mae.is_some()
                })
                .collect();
            if scored.is_empty() {
                continue;
            }
            for tally in &mut tallies {
                tally.frequencies += 1;
            }

            let best_mae = scored
                .iter()
                .map(|c| c.mae.unwrap())
                .fold(f64::INFINITY, f64::min);
            let mae_winners: Vec<Variant> = scored
                .iter()
                .filter(|c| c.mae.unwrap() == best_mae)
                .map(|c| c.variant)
                .collect();
            for winner in &mae_winners {
                if let Some(tally) = tallies.iter_mut().find(|t| t.variant == *winner) {
                    tally.mae_wins += 1.0 / mae_winners.len() as f64;
                }
            }

            let with_r2: Vec<&&SweepCell> = scored.iter().filter(|c| c.r2.is_some()).collect();
            if !with_r2.is_empty() {
                let best_r2 = with_r2
                    .iter()
                    .map(|c| c.r2.unwrap())
                    .fold(f64::NEG_INFINITY, f64::max);
                let r2_winners: Vec<Variant> = with_r2
                    .iter()
                    .filter(|c| c.r2.unwrap() == best_r2)
                    .map(|c| c.variant)
                    .collect();
                for winner in &r2_winners {
                    if let Some(tally) = tallies.iter_mut().find(|t| t.variant == *winner) {
                        tally.r2_wins += 1.0 / r2_winners.len() as f64;
                    }
                }
            }
        }
        rows.append(&mut tallies);
    }
    WinSummary { rows }
}

fn format_opt(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v}"),
        None => "NA".to_string(),
    }
}

/// Renders the report as CSV: a `#`-prefixed metadata block, then one line
/// per cell in plot-ready long format.
pub fn report_to_csv(report: &SweepReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("# seed={}\n", report.seed));
    out.push_str(&format!("# config_fingerprint={}\n", report.config_fingerprint));
    out.push_str(&format!("# dataset_fingerprint={}\n", report.dataset_fingerprint));

    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "frequency",
            "lag",
            "learner",
            "variant",
            "mae",
            "r2",
            "n_test",
            "entities_used",
            "entities_discarded",
            "status",
        ])
        .expect("in-memory write");
    for cell in &report.cells {
        writer
            .write_record([
                format!("{}", cell.frequency),
                format!("{}", cell.lag),
                cell.learner.to_string(),
                cell.variant.to_string(),
                format_opt(cell.mae),
                format_opt(cell.r2),
                format!("{}", cell.n_test),
                format!("{}", cell.entities_used),
                format!("{}", cell.entities_discarded),
                cell.status.to_string(),
            ])
            .expect("in-memory write");
    }
    out.push_str(&String::from_utf8(writer.into_inner().expect("flush")).expect("utf8"));
    out
}

/// Renders the win summary as CSV.
pub fn wins_to_csv(summary: &WinSummary) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "learner",
            "variant",
            "frequencies",
            "mae_wins",
            "mae_win_rate",
            "r2_wins",
            "r2_win_rate",
        ])
        .expect("in-memory write");
    for row in &summary.rows {
        writer
            .write_record([
                row.learner.to_string(),
                row.variant.to_string(),
                format!("{}", row.frequencies),
                format!("{}", row.mae_wins),
                format!("{}", row.mae_win_rate()),
                format!("{}", row.r2_wins),
                format!("{}", row.r2_win_rate()),
            ])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("flush")).expect("utf8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(
        frequency: f64,
        learner: LearnerKind,
        variant: Variant,
        mae: f64,
        r2: Option<f64>,
    ) -> SweepCell {
        SweepCell {
            frequency,
            lag: 3,
            learner,
            variant,
            mae: Some(mae),
            r2,
            n_test: 5,
            entities_used: 1,
            entities_discarded: 0,
            status: CellStatus::Ok,
        }
    }

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[1.0, 3.0], &[2.0, 2.0]).unwrap(), 1.0);
        // invariant under pairwise shuffling
        assert_eq!(
            mae(&[3.0, 1.0], &[2.0, 2.0]).unwrap(),
            mae(&[1.0, 3.0], &[2.0, 2.0]).unwrap()
        );
        assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mae(&[], &[]).is_err());
    }

    #[test]
    fn mae_is_translation_invariant() {
        let pred = [1.0, 4.0, -2.0];
        let actual = [0.5, 3.0, 1.0];
        let shifted_pred: Vec<f64> = pred.iter().map(|v| v + 13.25).collect();
        let shifted_actual: Vec<f64> = actual.iter().map(|v| v + 13.25).collect();
        let a = mae(&pred, &actual).unwrap();
        let b = mae(&shifted_pred, &shifted_actual).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn r2_examples() {
        let actual = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(r2(&actual, &actual).unwrap(), Some(1.0));
        // predicting the mean scores exactly zero
        let mean_pred = [2.5, 2.5, 2.5, 2.5];
        assert_eq!(r2(&mean_pred, &actual).unwrap(), Some(0.0));
        // worse than the mean goes negative
        let bad = [4.0, 3.0, 2.0, 1.0];
        assert!(r2(&bad, &actual).unwrap().unwrap() < 0.0);
        // constant actual is flagged, not infinite
        assert_eq!(r2(&[1.0, 2.0], &[3.0, 3.0]).unwrap(), None);
        assert!(r2(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn wins_split_ties_and_count_per_frequency() {
        let report = SweepReport {
            cells: vec![
                cell(1.0, LearnerKind::Lasso, Variant::Baseline, 2.0, Some(0.1)),
                cell(1.0, LearnerKind::Lasso, Variant::Autofits, 1.0, Some(0.9)),
                cell(2.0, LearnerKind::Lasso, Variant::Baseline, 1.5, Some(0.5)),
                cell(2.0, LearnerKind::Lasso, Variant::Autofits, 1.5, Some(0.5)),
            ],
            seed: 42,
            config_fingerprint: String::new(),
            dataset_fingerprint: String::new(),
        };
        let summary = summarize_wins(&report);
        let get = |variant: Variant| {
            summary
                .rows
                .iter()
                .find(|r| r.variant == variant)
                .unwrap()
                .clone()
        };
        let baseline = get(Variant::Baseline);
        let autofits = get(Variant::Autofits);
        assert_eq!(baseline.frequencies, 2);
        assert_eq!(autofits.mae_wins, 1.5);
        assert_eq!(baseline.mae_wins, 0.5);
        assert_eq!(autofits.r2_wins, 1.5);
        // credits per frequency sum to one
        assert!((baseline.mae_wins + autofits.mae_wins - 2.0).abs() < 1e-12);
        assert_eq!(autofits.mae_win_rate(), 0.75);
    }

    #[test]
    fn single_variant_wins_trivially() {
        let report = SweepReport {
            cells: vec![cell(1.0, LearnerKind::Lasso, Variant::Autofits, 1.0, None)],
            seed: 42,
            config_fingerprint: String::new(),
            dataset_fingerprint: String::new(),
        };
        let summary = summarize_wins(&report);
        assert_eq!(summary.rows.len(), 1);
        assert_eq!(summary.rows[0].mae_wins, 1.0);
        assert_eq!(summary.rows[0].mae_win_rate(), 1.0);
    }

    #[test]
    fn report_csv_has_metadata_and_header() {
        let report = SweepReport {
            cells: vec![cell(1.0, LearnerKind::Lasso, Variant::Baseline, 1.25, None)],
            seed: 7,
            config_fingerprint: "abc".to_string(),
            dataset_fingerprint: "def".to_string(),
        };
        let text = report_to_csv(&report);
        assert!(text.starts_with("# seed=7\n"));
        assert!(text.contains(
            "frequency,lag,learner,variant,mae,r2,n_test,entities_used,entities_discarded,status"
        ));
        assert!(text.contains("1,3,lasso,baseline,1.25,NA,5,1,0,ok"));
    }
}
