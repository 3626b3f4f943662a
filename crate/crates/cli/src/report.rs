//! Report JSON and CSV emission.
//!
//! Every file is written to a temporary sibling and renamed into place, so a
//! failed command never leaves a partial file behind.

use std::io::Write;
use std::path::{Path, PathBuf};

use robustmd_core::measures::{DiscretePrior, Grid, ValueFunction};
use serde::Serialize;
use serde_json::Value;
use tempfile::NamedTempFile;

use crate::error::CliError;
use crate::spec::ProblemSpec;

#[derive(Clone, Debug, Serialize)]
pub struct Report<T> {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<ProblemSpec>,
    pub provenance: Provenance,
    pub results: T,
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub version: String,
    pub grid_points: usize,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub max_spacing: f64,
    pub tol: f64,
    pub windows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lp_iterations: Option<usize>,
}

impl Provenance {
    pub fn new(grid: &Grid, tol: f64, windows: usize) -> Self {
        Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            grid_points: grid.len(),
            grid_lo: grid.lo(),
            grid_hi: grid.hi(),
            max_spacing: grid.max_spacing(),
            tol,
            windows,
            lp_iterations: None,
        }
    }
}

impl<T: Serialize> Report<T> {
    /// Pretty JSON; fails if any numeric result is not finite.
    pub fn to_json(&self) -> Result<String, CliError> {
        let value = serde_json::to_value(self).map_err(|e| CliError::Usage(e.to_string()))?;
        for key in ["provenance", "results"] {
            check_finite(&value[key], key)?;
        }
        Ok(serde_json::to_string_pretty(self).map_err(|e| CliError::Usage(e.to_string()))? + "\n")
    }
}

/// Non-finite floats serialize as `null`; optional fields are skipped when
/// absent, so any `null` left marks a bad number.
fn check_finite(v: &Value, path: &str) -> Result<(), CliError> {
    match v {
        Value::Null => Err(CliError::NonFinite(path.to_string())),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .try_for_each(|(i, x)| check_finite(x, &format!("{path}[{i}]"))),
        Value::Object(map) => map
            .iter()
            .try_for_each(|(k, x)| check_finite(x, &format!("{path}.{k}"))),
        _ => Ok(()),
    }
}

/// `x` with 9 significant digits, in the shortest of fixed or scientific
/// notation that `%.9g` would pick.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci
        .split_once('e')
        .expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if !(-5..9).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    trim_zeros(&format!("{x:.*}", (8 - exp) as usize)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Named columns of equal length.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(theta: &[f64]) -> Self {
        Table {
            headers: vec!["theta".into()],
            columns: vec![theta.to_vec()],
        }
    }

    pub fn with(mut self, name: impl Into<String>, column: Vec<f64>) -> Self {
        assert_eq!(column.len(), self.columns[0].len(), "column length");
        self.headers.push(name.into());
        self.columns.push(column);
        self
    }

    pub fn value(v: &ValueFunction) -> Self {
        Table::new(v.grid().points()).with("value", v.values().to_vec())
    }

    pub fn prior(p: &DiscretePrior) -> Self {
        Table::new(p.grid().points()).with("value", p.weights().to_vec())
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        if let Some((k, _)) = self
            .columns
            .iter()
            .enumerate()
            .find(|(_, c)| c.iter().any(|x| !x.is_finite()))
        {
            return Err(CliError::NonFinite(format!("column {}", self.headers[k])));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for i in 0..self.columns[0].len() {
            w.write_record(self.columns.iter().map(|c| sig9(c[i])))?;
        }
        w.into_inner().map_err(|e| CliError::Usage(e.to_string()))
    }
}

/// Files rendered in memory, then written together.
#[derive(Debug, Default)]
pub struct Bundle {
    files: Vec<(String, Vec<u8>)>,
}

impl Bundle {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn add_table(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        self.add(name, table.to_csv()?);
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|f| f.0.as_str())
    }

    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        let mut staged = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let mut tmp = NamedTempFile::new_in(dir).map_err(CliError::io(dir))?;
            tmp.write_all(bytes).map_err(CliError::io(tmp.path()))?;
            staged.push((tmp, dir.join(name)));
        }
        let mut written = Vec::with_capacity(staged.len());
        for (tmp, path) in staged {
            tmp.persist(&path).map_err(|e| CliError::Io {
                path: path.clone(),
                source: e.error,
            })?;
            written.push(path);
        }
        Ok(written)
    }
}
