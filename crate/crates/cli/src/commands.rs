//! The four subcommands: extract, forecast, sweep, validate.

use std::io::Write;
use std::path::Path;

use autofits::eval::{report_to_csv, wins_to_csv};
use autofits::{
    assemble_variant, forecast_dataset, holdout_split, impute_input_missing, load_csv, run_dataset,
    run_sweep, split_date_components, validate, DesignMatrix, EntityDataset, ExternalFeatures,
    FeatureRow,
};

use crate::config::{CliError, CliResult, RunConfig};

/// Writes atomically: temp file in the target directory, then rename, so an
/// interrupted run never leaves a truncated file.
fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
    }
    let dir = dir.unwrap_or(Path::new("."));
    let mut temp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::Data(format!("cannot create temp file in {}: {e}", dir.display())))?;
    temp.write_all(contents.as_bytes())
        .map_err(|e| CliError::Data(format!("write failed: {e}")))?;
    temp.persist(path)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Load, split date columns, impute: the shared preprocessing front.
fn load_dataset(config: &RunConfig) -> CliResult<EntityDataset> {
    let dataset = load_csv(&config.dataset_path, &config.columns)?;
    let dataset = split_date_components(&dataset, &config.split_dates)?;
    let outcome = impute_input_missing(&dataset, config.impute);
    for entity in &outcome.removed_entities {
        eprintln!("warning: entity '{entity}' removed: no rows left after imputation");
    }
    if outcome.dataset.is_empty() {
        return Err(CliError::Data("no entities left after imputation".to_string()));
    }
    Ok(outcome.dataset)
}

fn load_external(config: &RunConfig) -> CliResult<Option<ExternalFeatures>> {
    match &config.external_features {
        Some(path) => Ok(Some(ExternalFeatures::load_csv(path)?)),
        None => Ok(None),
    }
}

fn format_float(v: f64) -> String {
    format!("{v}")
}

fn feature_csv(rows: &[FeatureRow], design: &DesignMatrix) -> String {
    let mut writer = csv_writer();
    let mut header = vec![
        "entity_id".to_string(),
        "window_start".to_string(),
        "window_end".to_string(),
        "target_time".to_string(),
    ];
    header.extend(design.columns.iter().cloned());
    header.push("target".to_string());
    writer.write_record(&header).expect("in-memory write");

    for (row, design_row) in rows.iter().zip(design.matrix.iter_rows()) {
        let mut record = vec![
            row.entity_id.clone().unwrap_or_default(),
            format_float(row.window_start),
            format_float(row.window_end),
            format_float(row.target_time),
        ];
        record.extend(design_row.iter().map(|&v| format_float(v)));
        record.push(format_float(row.target));
        writer.write_record(&record).expect("in-memory write");
    }
    finish_csv(writer)
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn finish_csv(writer: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(writer.into_inner().expect("flush")).expect("utf8")
}

/// `extract`: write the feature matrix for the configured variant.
pub fn cmd_extract(config: &RunConfig, output: Option<&Path>) -> CliResult<i32> {
    let dataset = load_dataset(config)?;
    let external = load_external(config)?;
    let merged = run_dataset(&dataset, &config.pipeline)?;
    if merged.rows.is_empty() {
        return Err(CliError::Data(
            "all entities discarded: no feature rows to write".to_string(),
        ));
    }
    let design = assemble_variant(
        &merged.rows,
        &config.pipeline.features,
        config.pipeline.variant,
        external.as_ref(),
    )?;
    let path = output.unwrap_or(&config.output.features);
    write_atomic(path, &feature_csv(&merged.rows, &design))?;
    println!(
        "wrote {}: rows={} columns={} entities_used={} entities_discarded={}",
        path.display(),
        merged.rows.len(),
        design.columns.len(),
        merged.entities_used,
        merged.discarded.len()
    );
    Ok(0)
}

/// `forecast`: one next-value prediction per retained entity.
pub fn cmd_forecast(config: &RunConfig, output: Option<&Path>) -> CliResult<i32> {
    let dataset = load_dataset(config)?;
    let (forecasts, discarded) = forecast_dataset(&dataset, &config.pipeline)?;

    let mut writer = csv_writer();
    writer
        .write_record(["entity_id", "target_time", "prediction"])
        .expect("in-memory write");
    for forecast in &forecasts {
        writer
            .write_record([
                forecast.entity_id.clone().unwrap_or_default(),
                format_float(forecast.target_time),
                format_float(forecast.prediction),
            ])
            .expect("in-memory write");
    }
    let path = output.unwrap_or(&config.output.forecast);
    write_atomic(path, &finish_csv(writer))?;
    println!(
        "wrote {}: forecasts={} entities_discarded={}",
        path.display(),
        forecasts.len(),
        discarded.len()
    );
    Ok(0)
}

/// `sweep`: full grid run; report plus win summary.
pub fn cmd_sweep(config: &RunConfig, output: Option<&Path>) -> CliResult<i32> {
    let grid = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("the sweep command needs a [sweep] section".to_string()))?;
    let dataset = load_dataset(config)?;
    let external = load_external(config)?;
    let report = run_sweep(&dataset, &config.pipeline, grid, external.as_ref())?;

    let report_path = output.unwrap_or(&config.output.report);
    write_atomic(report_path, &report_to_csv(&report))?;
    let summary = autofits::summarize_wins(&report);
    write_atomic(&config.output.wins, &wins_to_csv(&summary))?;

    let ok = report.cells.iter().filter(|c| c.status.is_ok()).count();
    println!(
        "wrote {} and {}: cells={} ok={} failed={}",
        report_path.display(),
        config.output.wins.display(),
        report.cells.len(),
        ok,
        report.cells.len() - ok
    );
    if ok == 0 {
        return Err(CliError::AllCellsFailed);
    }
    Ok(0)
}

/// `validate`: per-entity sanity report on stdout.
pub fn cmd_validate(config: &RunConfig) -> CliResult<i32> {
    let dataset = load_csv(&config.dataset_path, &config.columns)?;
    println!(
        "dataset {}: entities={} observations={}",
        config.dataset_path.display(),
        dataset.len(),
        dataset.total_observations()
    );
    for (id, series) in dataset.entities() {
        let report = validate(series);
        let label = if id.is_empty() { "<anonymous>" } else { id };
        println!("{label}: {report}");
    }
    // a dry run of the pipeline guards against silently empty holdouts
    match run_dataset(&dataset, &config.pipeline) {
        Ok(merged) if merged.rows.is_empty() => println!(
            "at frequency {}: all entities discarded",
            config.pipeline.frequency
        ),
        Ok(merged) => {
            if let Ok(split) = holdout_split(&merged.rows, config.pipeline.holdout_fraction) {
                println!(
                    "at frequency {}: feature_rows={} train={} test={} discarded={}",
                    config.pipeline.frequency,
                    merged.rows.len(),
                    split.train.len(),
                    split.test.len(),
                    merged.discarded.len()
                );
            }
        }
        Err(e) => println!("pipeline dry run failed: {e}"),
    }
    Ok(0)
}
