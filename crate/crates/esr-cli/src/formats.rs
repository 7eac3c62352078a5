//! On-disk dataset formats.
//!
//! Two equivalent encodings of a [`Dataset`]: CSV with header
//! `y,x,w_1,...,w_d` and JSON-lines with keys `y`, `x`, `w`. Both print
//! doubles with shortest-round-trip decimal formatting, so read∘write is the
//! identity bit for bit. Counterfactual tables use CSV with header
//! `y0,y1,w_1,...,w_d`, and generators leave a JSON sidecar describing the
//! true data-generating process next to the data.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use esr_core::data::{BinaryAction, Context, CounterfactualExample, Dataset, LabeledExample};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn malformed(line: usize, reason: impl Into<String>) -> FormatError {
    FormatError::Malformed {
        line,
        reason: reason.into(),
    }
}

/// CSV header for a `d`-dimensional dataset: `y,x,w_1,...,w_d`.
fn dataset_header(d: usize) -> String {
    let mut h = String::from("y,x");
    for j in 1..=d {
        let _ = write!(h, ",w_{j}");
    }
    h
}

pub fn dataset_to_csv(ds: &Dataset) -> String {
    let mut out = dataset_header(ds.dim);
    out.push('\n');
    for ex in ds.iter() {
        let _ = write!(out, "{},{}", ex.outcome, ex.action.index());
        for &w in ex.context.as_slice() {
            let _ = write!(out, ",{w}");
        }
        out.push('\n');
    }
    out
}

pub fn write_dataset_csv(path: &Path, ds: &Dataset) -> Result<(), FormatError> {
    fs::write(path, dataset_to_csv(ds))?;
    Ok(())
}

fn parse_f64(tok: &str, line: usize, what: &str) -> Result<f64, FormatError> {
    tok.parse::<f64>()
        .map_err(|_| malformed(line, format!("bad {what} `{tok}`")))
}

pub fn dataset_from_csv(text: &str) -> Result<Dataset, FormatError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| malformed(1, "empty file, expected header"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[0] != "y" || cols[1] != "x" {
        return Err(malformed(1, "expected header y,x,w_1,..."));
    }
    let d = cols.len() - 2;
    for (j, col) in cols[2..].iter().enumerate() {
        if *col != format!("w_{}", j + 1) {
            return Err(malformed(1, format!("expected column w_{}, got `{col}`", j + 1)));
        }
    }
    let mut examples = Vec::new();
    for (idx, row) in lines {
        let line = idx + 1;
        if row.is_empty() {
            continue;
        }
        let toks: Vec<&str> = row.split(',').collect();
        if toks.len() != d + 2 {
            return Err(malformed(line, format!("{} fields, expected {}", toks.len(), d + 2)));
        }
        let y = parse_f64(toks[0], line, "outcome")?;
        let action = match toks[1] {
            "0" => BinaryAction::Zero,
            "1" => BinaryAction::One,
            other => return Err(malformed(line, format!("bad action `{other}`"))),
        };
        let features = toks[2..]
            .iter()
            .map(|t| parse_f64(t, line, "feature"))
            .collect::<Result<Vec<f64>, _>>()?;
        examples.push(LabeledExample {
            context: Context::new(features),
            action,
            outcome: y,
        });
    }
    Ok(Dataset::from_examples(d, examples))
}

pub fn read_dataset_csv(path: &Path) -> Result<Dataset, FormatError> {
    dataset_from_csv(&fs::read_to_string(path)?)
}

/// One JSON-lines row.
#[derive(Serialize, Deserialize)]
struct JsonRow {
    y: f64,
    x: u8,
    w: Vec<f64>,
}

pub fn dataset_to_jsonl(ds: &Dataset) -> String {
    let mut out = String::new();
    for ex in ds.iter() {
        let row = JsonRow {
            y: ex.outcome,
            x: ex.action.index() as u8,
            w: ex.context.as_slice().to_vec(),
        };
        out.push_str(&serde_json::to_string(&row).expect("row serializes"));
        out.push('\n');
    }
    out
}

pub fn write_dataset_jsonl(path: &Path, ds: &Dataset) -> Result<(), FormatError> {
    fs::write(path, dataset_to_jsonl(ds))?;
    Ok(())
}

/// Streaming JSON-lines reader; dimension is taken from the first row.
pub fn read_dataset_jsonl(path: &Path) -> Result<Dataset, FormatError> {
    dataset_from_jsonl_reader(BufReader::new(fs::File::open(path)?))
}

pub fn dataset_from_jsonl_reader<R: Read>(reader: BufReader<R>) -> Result<Dataset, FormatError> {
    let mut examples = Vec::new();
    let mut dim = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let row: JsonRow =
            serde_json::from_str(&line).map_err(|e| malformed(line_no, e.to_string()))?;
        let action = BinaryAction::from_index(row.x as usize)
            .ok_or_else(|| malformed(line_no, format!("bad action `{}`", row.x)))?;
        if examples.is_empty() {
            dim = row.w.len();
        } else if row.w.len() != dim {
            return Err(malformed(
                line_no,
                format!("{} features, expected {dim}", row.w.len()),
            ));
        }
        examples.push(LabeledExample {
            context: Context::new(row.w),
            action,
            outcome: row.y,
        });
    }
    Ok(Dataset::from_examples(dim, examples))
}

pub fn counterfactuals_to_csv(cfs: &[CounterfactualExample]) -> String {
    let d = cfs.first().map_or(0, |cf| cf.context.len());
    let mut out = String::from("y0,y1");
    for j in 1..=d {
        let _ = write!(out, ",w_{j}");
    }
    out.push('\n');
    for cf in cfs {
        let _ = write!(out, "{},{}", cf.y0, cf.y1);
        for &w in cf.context.as_slice() {
            let _ = write!(out, ",{w}");
        }
        out.push('\n');
    }
    out
}

pub fn write_counterfactuals_csv(
    path: &Path,
    cfs: &[CounterfactualExample],
) -> Result<(), FormatError> {
    fs::write(path, counterfactuals_to_csv(cfs))?;
    Ok(())
}

pub fn counterfactuals_from_csv(text: &str) -> Result<Vec<CounterfactualExample>, FormatError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| malformed(1, "empty file, expected header"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 || cols[0] != "y0" || cols[1] != "y1" {
        return Err(malformed(1, "expected header y0,y1,w_1,..."));
    }
    let d = cols.len() - 2;
    let mut cfs = Vec::new();
    for (idx, row) in lines {
        let line = idx + 1;
        if row.is_empty() {
            continue;
        }
        let toks: Vec<&str> = row.split(',').collect();
        if toks.len() != d + 2 {
            return Err(malformed(line, format!("{} fields, expected {}", toks.len(), d + 2)));
        }
        let y0 = parse_f64(toks[0], line, "y0")?;
        let y1 = parse_f64(toks[1], line, "y1")?;
        let features = toks[2..]
            .iter()
            .map(|t| parse_f64(t, line, "feature"))
            .collect::<Result<Vec<f64>, _>>()?;
        cfs.push(CounterfactualExample {
            context: Context::new(features),
            y0,
            y1,
        });
    }
    Ok(cfs)
}

pub fn read_counterfactuals_csv(path: &Path) -> Result<Vec<CounterfactualExample>, FormatError> {
    counterfactuals_from_csv(&fs::read_to_string(path)?)
}

/// Sidecar written next to generated data: enough of the true
/// data-generating process to evaluate policies exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSidecar {
    pub version: u32,
    pub generator: String,
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub noise_sd: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
    /// Click-rate parameters `[intercept, coefs...]` per arm, click data only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub click_rates: Option<[Vec<f64>; 2]>,
}

pub const TRUTH_VERSION: u32 = 1;

pub fn write_truth_sidecar(path: &Path, truth: &TruthSidecar) -> Result<(), FormatError> {
    let mut text = serde_json::to_string_pretty(truth)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_truth_sidecar(path: &Path) -> Result<TruthSidecar, FormatError> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
