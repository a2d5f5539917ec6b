//! Calibration store: one JSON document holding `c^{(j,d)}` per `(j, d)`.

use std::collections::BTreeMap;
use std::path::Path;

use randhull_core::estimators::Calibration;
use randhull_core::functionals::ConstantTable;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::records::write_atomic;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoredCalibration {
    pub j: usize,
    pub d: usize,
    pub c_jd: f64,
    pub stderr: f64,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub radius: f64,
    pub master_seed: u64,
    /// RFC 3339 time of the calibration run.
    pub timestamp: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CalibrationStore {
    /// Keyed by `"j,d"`.
    pub entries: BTreeMap<String, StoredCalibration>,
}

fn key(j: usize, d: usize) -> String {
    format!("{j},{d}")
}

impl CalibrationStore {
    pub fn load(path: &Path) -> CliResult<CalibrationStore> {
        if !path.exists() {
            return Ok(CalibrationStore::default());
        }
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Store {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).expect("store serializes");
        write_atomic(path, text.as_bytes())
    }

    /// Inserts or replaces the entry for `(j, d)`.
    pub fn record(&mut self, cal: &Calibration, reps: usize, radius: f64, master_seed: u64) -> &StoredCalibration {
        let entry = StoredCalibration {
            j: cal.j,
            d: cal.d,
            c_jd: cal.c_jd,
            stderr: cal.stderr,
            n_grid: cal.n_grid.clone(),
            reps,
            radius,
            master_seed,
            timestamp: chrono::Utc::now().to_rfc3339(),
        };
        let k = key(cal.j, cal.d);
        self.entries.insert(k.clone(), entry);
        &self.entries[&k]
    }

    pub fn get(&self, j: usize, d: usize) -> Option<&StoredCalibration> {
        self.entries.get(&key(j, d))
    }

    pub fn constant_table(&self) -> ConstantTable {
        let mut table = ConstantTable::new();
        for e in self.entries.values() {
            table.insert(e.j, e.d, e.c_jd, e.stderr);
        }
        table
    }
}
