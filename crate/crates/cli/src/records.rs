//! Result rows and their CSV persistence.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// One row per (experiment, n, route). Column order is part of the file format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment_id: String,
    pub body_kind: String,
    pub d: usize,
    pub j: usize,
    pub density_kind: String,
    pub n: usize,
    pub route: String,
    pub reps: usize,
    pub deficit_mean: f64,
    pub deficit_stderr: f64,
    /// Empty when no asymptotic prediction applies.
    pub predicted: Option<f64>,
    pub wall_time_s: f64,
    pub master_seed: u64,
    pub git_or_build_id: String,
}

pub const COLUMNS: [&str; 14] = [
    "experiment_id",
    "body_kind",
    "d",
    "j",
    "density_kind",
    "n",
    "route",
    "reps",
    "deficit_mean",
    "deficit_stderr",
    "predicted",
    "wall_time_s",
    "master_seed",
    "git_or_build_id",
];

pub fn build_id() -> String {
    option_env!("RANDHULL_BUILD_ID")
        .map(str::to_string)
        .unwrap_or_else(|| format!("randhull-{}", env!("CARGO_PKG_VERSION")))
}

pub fn to_csv_string(records: &[ResultRecord]) -> CliResult<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    if records.is_empty() {
        writer.write_record(COLUMNS)?;
    }
    for r in records {
        writer.serialize(r)?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::io("<memory>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn from_csv_str(text: &str) -> CliResult<Vec<ResultRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != COLUMNS {
        return Err(CliError::validation("csv header", format!("expected {COLUMNS:?}, found {header:?}")));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(CliError::from))
        .collect()
}

pub fn read_records(path: &Path) -> CliResult<Vec<ResultRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    from_csv_str(&text)
}

/// Writes `contents` to a sibling temp file and renames it over `path`, so
/// readers see either the old file or the new one.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp: PathBuf = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut file = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    file.write_all(contents).map_err(|e| CliError::io(&tmp, e))?;
    file.sync_all().map_err(|e| CliError::io(&tmp, e))?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// Appends rows to the CSV at `path`, rewriting the file atomically.
pub fn append_records(path: &Path, new: &[ResultRecord]) -> CliResult<()> {
    let mut all = read_records(path)?;
    all.extend_from_slice(new);
    write_atomic(path, to_csv_string(&all)?.as_bytes())
}
