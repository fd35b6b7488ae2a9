//! On-disk formats: JSON records and envelopes, CSV tables.
//!
//! Floats in CSV are printed with 17 significant digits so a table
//! round-trips bit for bit; JSON uses serde_json's shortest round-trip
//! representation, which is exact as well. Nothing time- or host-dependent
//! is ever written.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use srip_core::ensembles::{gen_matrix, Ensemble, Measurements, SensingMatrix, SparseSignal};
use srip_core::linalg::Matrix;

use crate::error::{HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;

pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// A CSV table with a fixed column list.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    /// Header comments (`# schema_version=..`, `# config=..`) followed by
    /// standard CSV.
    pub fn to_bytes(&self, config: &Value) -> Vec<u8> {
        let mut out = format!("# schema_version={SCHEMA_VERSION}\n# config={config}\n").into_bytes();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        out.extend(w.into_inner().expect("in-memory flush"));
        out
    }
}

/// Shorthand for table cells.
pub trait Cell {
    fn cell(&self) -> String;
}

impl Cell for f64 {
    fn cell(&self) -> String {
        fmt_float(*self)
    }
}

macro_rules! int_cell {
    ($($t:ty),*) => {$(
        impl Cell for $t {
            fn cell(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
int_cell!(usize, u64, u128, u32, bool);

impl Cell for &str {
    fn cell(&self) -> String {
        (*self).to_string()
    }
}

#[macro_export]
macro_rules! row {
    ($($v:expr),* $(,)?) => {
        vec![$($crate::formats::Cell::cell(&$v)),*]
    };
}

/// Top-level JSON document of a run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Record {
    pub schema_version: u32,
    pub kind: String,
    pub config: Value,
    pub results: Value,
}

pub fn to_json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("serialisable");
    out.push(b'\n');
    out
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Parse { path: path.into(), source })
}

fn check_schema(found: u32) -> Result<()> {
    if found != SCHEMA_VERSION {
        return Err(HarnessError::config(format!("unsupported schema_version {found}")));
    }
    Ok(())
}

/// Matrix envelope. Seeded ensembles may omit `entries`; when present they
/// must match the regenerated matrix exactly.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixFile {
    pub schema_version: u32,
    pub m: usize,
    pub n: usize,
    pub ensemble: Ensemble,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<Vec<f64>>>,
}

impl MatrixFile {
    pub fn from_matrix(a: &SensingMatrix, with_entries: bool) -> Self {
        let entries = (with_entries || a.ensemble() == Ensemble::Custom)
            .then(|| (0..a.rows()).map(|j| a.row(j).to_vec()).collect());
        Self {
            schema_version: SCHEMA_VERSION,
            m: a.rows(),
            n: a.cols(),
            ensemble: a.ensemble(),
            seed: a.seed(),
            fingerprint: Some(a.fingerprint()),
            entries,
        }
    }

    pub fn to_matrix(&self) -> Result<SensingMatrix> {
        check_schema(self.schema_version)?;
        let a = match (&self.entries, self.ensemble) {
            (None, Ensemble::Custom) => return Err(HarnessError::config("custom matrix without entries")),
            (None, e) => gen_matrix(self.m, self.n, e, self.seed)?,
            (Some(rows), e) => {
                if rows.len() != self.m || rows.iter().any(|r| r.len() != self.n) {
                    return Err(HarnessError::config(format!("entries do not form a {}x{} matrix", self.m, self.n)));
                }
                if e == Ensemble::Custom {
                    let data = rows.iter().flatten().copied().collect();
                    SensingMatrix::from_matrix(Matrix::from_row_major(self.m, self.n, data))?
                } else {
                    let a = gen_matrix(self.m, self.n, e, self.seed)?;
                    if rows.iter().enumerate().any(|(j, r)| a.row(j) != r.as_slice()) {
                        return Err(HarnessError::config("entries do not match the seeded ensemble"));
                    }
                    a
                }
            }
        };
        if let Some(fp) = self.fingerprint {
            if fp != a.fingerprint() {
                return Err(HarnessError::config("matrix fingerprint mismatch"));
            }
        }
        Ok(a)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SignalFile {
    pub schema_version: u32,
    pub n: usize,
    pub support: Vec<usize>,
    pub values: Vec<f64>,
}

impl SignalFile {
    pub fn from_signal(x: &SparseSignal) -> Self {
        Self { schema_version: SCHEMA_VERSION, n: x.dim(), support: x.support().to_vec(), values: x.values().to_vec() }
    }

    pub fn to_signal(&self) -> Result<SparseSignal> {
        check_schema(self.schema_version)?;
        Ok(SparseSignal::new(self.n, self.support.clone(), self.values.clone())?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MeasurementsFile {
    pub schema_version: u32,
    pub m: usize,
    pub matrix_fingerprint: u64,
    pub b: Vec<f64>,
}

impl MeasurementsFile {
    pub fn from_measurements(b: &Measurements) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            m: b.len(),
            matrix_fingerprint: b.matrix_fingerprint(),
            b: b.values().to_vec(),
        }
    }

    /// Validates against the matrix the measurements are used with.
    pub fn to_measurements(&self, a: &SensingMatrix) -> Result<Measurements> {
        check_schema(self.schema_version)?;
        if self.m != self.b.len() || self.m != a.rows() {
            return Err(HarnessError::config(format!(
                "{} measurements for a matrix with {} rows",
                self.b.len(),
                a.rows()
            )));
        }
        if self.matrix_fingerprint != a.fingerprint() {
            return Err(HarnessError::config("measurements were taken with a different matrix"));
        }
        Ok(Measurements::new(self.b.clone(), self.matrix_fingerprint)?)
    }
}
