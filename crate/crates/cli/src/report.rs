//! Merging earlier CSV outputs into one table per metric.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use crate::commands::Ctx;
use crate::output::RunManifest;
use crate::{CliError, ReportArgs};

/// Columns that identify a row rather than measure something.
const KEY_COLUMNS: [&str; 2] = ["preset", "rate"];

#[derive(Debug, Serialize)]
struct Source {
    path: PathBuf,
    tool_version: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Row {
    preset: String,
    rate: Option<f64>,
    value: f64,
}

#[derive(Serialize)]
struct Merged {
    sources: Vec<Source>,
    tables: BTreeMap<String, Vec<Row>>,
}

fn collect_csvs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)
                .with_context(|| format!("listing {}", input.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                .collect();
            found.sort();
            files.extend(found);
        } else if input.is_file() {
            files.push(input.clone());
        } else {
            bail!(CliError::MissingInput(input.clone()));
        }
    }
    if files.is_empty() {
        bail!(CliError::MissingInput(inputs[0].clone()));
    }
    Ok(files)
}

fn manifest_for(csv: &Path) -> Option<RunManifest> {
    let own = RunManifest::path_for(csv);
    let shared = csv.with_file_name("manifest.json");
    [own, shared].iter().find(|p| p.is_file()).and_then(|p| RunManifest::load(p).ok())
}

fn read_table(path: &Path, tables: &mut BTreeMap<String, Vec<Row>>) -> Result<usize> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (preset_col, rate_col) = (col("preset"), col("rate"));
    let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
    let records = reader.records().collect::<Result<Vec<_>, _>>()?;
    let metrics: Vec<(usize, &str)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| !KEY_COLUMNS.contains(h))
        .filter(|&(i, _)| !records.is_empty() && records.iter().all(|r| r[i].parse::<f64>().is_ok()))
        .collect();
    for r in &records {
        let preset = preset_col.map_or_else(|| stem.clone(), |i| r[i].to_string());
        let rate = rate_col.and_then(|i| r[i].parse().ok());
        for &(i, name) in &metrics {
            tables.entry(name.to_string()).or_default().push(Row {
                preset: preset.clone(),
                rate,
                value: r[i].parse().expect("checked numeric"),
            });
        }
    }
    Ok(records.len())
}

fn table_csv(metric: &str, rows: &[Row]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["preset", "rate", metric])?;
    for r in rows {
        let rate = r.rate.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([r.preset.as_str(), rate.as_str(), r.value.to_string().as_str()])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn merge_reports(ctx: &Ctx, a: ReportArgs) -> Result<()> {
    let format = a.format.to_ascii_lowercase();
    if format != "csv" && format != "json" {
        bail!(CliError::Usage("--format must be csv or json".into()));
    }
    let files = collect_csvs(&a.inputs)?;
    let mut tables = BTreeMap::new();
    let mut sources = Vec::new();
    for f in &files {
        let rows = read_table(f, &mut tables)?;
        let version = manifest_for(f).map(|m| m.tool_version);
        eprintln!("{}: {rows} rows", f.display());
        sources.push(Source {
            path: f.clone(),
            tool_version: version,
        });
    }
    let versions: BTreeSet<&str> = sources.iter().filter_map(|s| s.tool_version.as_deref()).collect();
    if versions.len() > 1 {
        eprintln!(
            "warning: inputs were produced by different tool versions: {}",
            versions.into_iter().collect::<Vec<_>>().join(", ")
        );
    }
    for (metric, rows) in &tables {
        let presets: BTreeSet<&str> = rows.iter().map(|r| r.preset.as_str()).collect();
        eprintln!("{metric}: {} rows over {} presets", rows.len(), presets.len());
    }

    let mut sink = ctx.sink("report", if format == "json" { "report.json" } else { "report" });
    sink.config(&a, None);
    for f in &files {
        sink.input(f);
    }
    if format == "json" {
        return sink.write(&serde_json::to_string_pretty(&Merged { sources, tables })?);
    }
    let files = tables
        .iter()
        .map(|(metric, rows)| Ok((Some(format!("{metric}.csv")), table_csv(metric, rows)?)))
        .collect::<Result<Vec<_>>>()?;
    sink.write_many(&files)
}
