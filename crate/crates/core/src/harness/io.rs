//! Problem directories and numeric CSV files.
//!
//! A problem directory holds `dictionary.csv` (N rows, M columns),
//! `observation.csv` (one column) and `meta.json`. Numbers are written with 17
//! significant digits, so they read back bit-exactly.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::datagen::{Planted, SyntheticSpec};
use super::HarnessError;
use crate::section::SparseProblem;

pub const DICTIONARY_FILE: &str = "dictionary.csv";
pub const OBSERVATION_FILE: &str = "observation.csv";
pub const META_FILE: &str = "meta.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemMeta {
    pub noise_precision: f64,
    pub rows: usize,
    pub columns: usize,
    #[serde(default)]
    pub spec: Option<SyntheticSpec>,
    #[serde(default)]
    pub planted: Option<Planted>,
}

pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a headerless numeric table.
pub fn write_rows(
    path: &Path,
    header: Option<&[&str]>,
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    if let Some(h) = header {
        w.write_record(h).map_err(|e| csv_err(path, e))?;
    }
    for row in rows {
        w.write_record(row.iter().map(|&v| format_number(v)))
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> HarnessError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => HarnessError::io(path, io),
        other => HarnessError::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Reads a headerless numeric table; every row must have the same width.
pub fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>, HarnessError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let mut rows = Vec::new();
    let mut width = None;
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let parse_err = |message: String| HarnessError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, field)| {
                field.parse::<f64>().map_err(|_| {
                    parse_err(format!(
                        "column {}: cannot parse {field:?} as a number",
                        c + 1
                    ))
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(parse_err(format!(
                    "expected {w} fields, found {}",
                    row.len()
                )));
            }
            _ => {}
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Parse {
        path: path.to_path_buf(),
        line: e.line() as u64,
        message: e.to_string(),
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut file = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    file.write_all(text.as_bytes())
        .and_then(|_| file.write_all(b"\n"))
        .map_err(|e| HarnessError::io(path, e))
}

pub fn write_problem(
    dir: &Path,
    problem: &SparseProblem,
    meta: &ProblemMeta,
) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let a = problem.dictionary();
    write_rows(
        &dir.join(DICTIONARY_FILE),
        None,
        a.row_iter().map(|r| r.iter().copied().collect()),
    )?;
    write_rows(
        &dir.join(OBSERVATION_FILE),
        None,
        problem.observation().iter().map(|&v| vec![v]),
    )?;
    write_json(&dir.join(META_FILE), meta)
}

fn paths(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    (
        dir.join(DICTIONARY_FILE),
        dir.join(OBSERVATION_FILE),
        dir.join(META_FILE),
    )
}

pub fn read_problem(dir: &Path) -> Result<(SparseProblem, ProblemMeta), HarnessError> {
    let (dict_path, obs_path, meta_path) = paths(dir);
    let meta: ProblemMeta = read_json(&meta_path)?;
    let rows = read_rows(&dict_path)?;
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n != meta.rows || m != meta.columns {
        return Err(HarnessError::Spec(format!(
            "{} is {n} x {m} but {} declares {} x {}",
            dict_path.display(),
            meta_path.display(),
            meta.rows,
            meta.columns
        )));
    }
    let a = DMatrix::from_row_iterator(n, m, rows.into_iter().flatten());
    let obs = read_rows(&obs_path)?;
    if let Some(pos) = obs.iter().position(|r| r.len() != 1) {
        return Err(HarnessError::Parse {
            path: obs_path,
            line: pos as u64 + 1,
            message: "observation must have exactly one column".into(),
        });
    }
    let y = DVector::from_iterator(obs.len(), obs.into_iter().map(|r| r[0]));
    let problem = SparseProblem::new(a, y, meta.noise_precision)?;
    Ok((problem, meta))
}
