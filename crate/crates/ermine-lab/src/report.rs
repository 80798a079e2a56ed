//! Artifact rendering: replication records as CSV, rate reports as JSON,
//! and a columnar plot file, each stamped with the configuration hash and
//! the artifact version so results stay traceable to what produced them.
//!
//! Rendering is pure string building — deterministic given its inputs. The
//! one nondeterministic field anywhere in the pipeline is the wall-clock
//! `millis` column of the CSV; [`strip_timing_column`] removes it so two
//! runs of the same configuration can be compared byte for byte.

use crate::montecarlo::{ExpectationTable, RateReport, ReplicationRecord};
use serde_json::{json, Value};
use std::io;
use std::path::{Path, PathBuf};

/// Version stamp carried by every artifact.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// The two provenance comment lines that open every artifact.
pub fn provenance_header(config_hash: &str) -> String {
    format!("# config_hash: {config_hash}\n# artifact_version: {ARTIFACT_VERSION}\n")
}

/// Replication records as CSV: two provenance comment lines, a header row,
/// then one row per record in the order given. Floats use the shortest
/// round-trip decimal form; a failed solve renders its distance as `NaN`.
pub fn render_records_csv(records: &[ReplicationRecord], config_hash: &str) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["problem", "n", "rep", "seed", "distance", "status", "millis"])
        .expect("writing to a Vec cannot fail");
    for record in records {
        writer
            .write_record([
                record.problem.as_str(),
                &record.n.to_string(),
                &record.rep.to_string(),
                &record.seed.to_string(),
                &record.distance.to_string(),
                &record.status.to_string(),
                &record.millis.to_string(),
            ])
            .expect("writing to a Vec cannot fail");
    }
    let body = String::from_utf8(writer.into_inner().expect("no flush error on a Vec"))
        .expect("csv output is ASCII");
    format!("{}{body}", provenance_header(config_hash))
}

/// Drops the trailing wall-clock column from a records CSV, leaving the
/// deterministic part. Comment lines pass through untouched. The timing
/// column is last and numeric, so cutting at the final comma is exact even
/// when an earlier field is quoted.
pub fn strip_timing_column(csv_text: &str) -> String {
    let mut out = String::with_capacity(csv_text.len());
    for line in csv_text.lines() {
        if line.starts_with('#') || line.is_empty() {
            out.push_str(line);
        } else {
            match line.rfind(',') {
                Some(cut) => out.push_str(&line[..cut]),
                None => out.push_str(line),
            }
        }
        out.push('\n');
    }
    out
}

/// A rate report as pretty-printed JSON.
///
/// Top-level fields: `config_hash`, `artifact_version`, `problem`,
/// `n_grid`, `delta`, `quantiles` (object keyed by sample size), `slope`,
/// `intercept`, `r2`, `bound_curve` (array), and `flags` with `rate_pass`,
/// `tail_pass`, `expectation_pass`. Non-finite numbers and absent optional
/// checks render as `null`; keys come out sorted, so equal reports render
/// to equal bytes.
pub fn render_report_json(
    report: &RateReport,
    expectation: Option<&ExpectationTable>,
    config_hash: &str,
) -> String {
    let quantiles: serde_json::Map<String, Value> = report
        .quantiles
        .iter()
        .map(|row| {
            (
                row.n.to_string(),
                json!({
                    "q50": row.q50,
                    "q90": row.q90,
                    "q95": row.q95,
                    "mean": row.mean,
                }),
            )
        })
        .collect();
    let bound_curve: Vec<Value> = report
        .bound_curve
        .iter()
        .map(|point| {
            json!({
                "n": point.n,
                "p_n": point.p_n,
                "bound": point.bound,
                "pre_asymptotic": point.pre_asymptotic,
            })
        })
        .collect();
    let expectation_rows: Option<Vec<Value>> = expectation.map(|table| {
        table
            .rows
            .iter()
            .map(|row| {
                json!({
                    "n": row.n,
                    "mean_sq": row.mean_sq,
                    "exact": row.exact,
                    "bound": row.bound,
                    "within_tolerance": row.within_tolerance,
                    "below_bound": row.below_bound,
                })
            })
            .collect()
    });
    let document = json!({
        "config_hash": config_hash,
        "artifact_version": ARTIFACT_VERSION,
        "problem": report.problem,
        "n_grid": report.n_grid,
        "delta": report.delta,
        "quantiles": quantiles,
        "slope": report.slope,
        "intercept": report.intercept,
        "r2": report.r2,
        "bound_curve": bound_curve,
        "expectation": expectation_rows,
        "flags": {
            "rate_pass": report.flags.rate_pass,
            "tail_pass": report.flags.tail_pass,
            "expectation_pass": report.flags.expectation_pass,
        },
    });
    let mut text = serde_json::to_string_pretty(&document).expect("report document serializes");
    text.push('\n');
    text
}

/// Plot-ready columnar text: provenance comments, a header line, then one
/// space-separated row per sample size with the quantiles, the mean, and
/// the bound (`nan` where the theorem does not apply).
pub fn render_plot_data(report: &RateReport, config_hash: &str) -> String {
    let mut out = provenance_header(config_hash);
    out.push_str("n q50 q90 q95 mean bound\n");
    for (row, point) in report.quantiles.iter().zip(&report.bound_curve) {
        let bound = point
            .bound
            .map_or_else(|| "nan".to_owned(), |b| b.to_string());
        out.push_str(&format!(
            "{} {} {} {} {} {bound}\n",
            row.n, row.q50, row.q90, row.q95, row.mean
        ));
    }
    out
}

/// Writes the three experiment artifacts under `dir`, creating it if
/// needed; returns the paths written.
pub fn write_artifacts(
    dir: &Path,
    problem_id: &str,
    records_csv: &str,
    report_json: &str,
    plot_data: &str,
) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let paths = vec![
        dir.join(format!("{problem_id}_records.csv")),
        dir.join(format!("{problem_id}_report.json")),
        dir.join(format!("{problem_id}_plot.txt")),
    ];
    std::fs::write(&paths[0], records_csv)?;
    std::fs::write(&paths[1], report_json)?;
    std::fs::write(&paths[2], plot_data)?;
    Ok(paths)
}
