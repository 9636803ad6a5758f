//! LIBSVM sparse text format.
//!
//! ```text
//! <label> <index>:<value> <index>:<value> ... # optional comment
//! ```
//!
//! Indices are 1-based and strictly ascending within a line.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use scorch_core::Matrix;

use super::Dataset;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    pub label: f64,
    /// `(index, value)` pairs, 1-based, ascending.
    pub features: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LibsvmData {
    pub rows: Vec<SparseRow>,
    pub n_features: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LibsvmErrorKind {
    #[error("invalid label `{0}`")]
    Label(String),
    #[error("feature `{0}` is not of the form index:value")]
    MissingColon(String),
    #[error("invalid feature index `{0}`")]
    Index(String),
    #[error("feature index 0 (indices are 1-based)")]
    ZeroIndex,
    #[error("feature index {index} after {prev}: indices must be strictly ascending")]
    NotAscending { prev: usize, index: usize },
    #[error("invalid feature value `{0}`")]
    Value(String),
    #[error("feature index {index} exceeds the declared {n_features} features")]
    TooManyFeatures { index: usize, n_features: usize },
}

#[derive(Debug, thiserror::Error)]
pub enum LibsvmError {
    #[error("line {line}: {kind}")]
    Parse { line: usize, kind: LibsvmErrorKind },
    #[error("reading line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: io::Error,
    },
    #[error("cannot open {path}: {source}")]
    Open {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("labels {0:?} cannot be mapped to {{-1, +1}}")]
    Labels(Vec<f64>),
}

impl LibsvmError {
    /// 1-based line of a parse or read failure.
    pub fn line(&self) -> Option<usize> {
        match self {
            LibsvmError::Parse { line, .. } | LibsvmError::Io { line, .. } => Some(*line),
            _ => None,
        }
    }
}

fn parse_float(tok: &str) -> Option<f64> {
    tok.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_line(text: &str) -> Result<Option<SparseRow>, LibsvmErrorKind> {
    let body = text.split('#').next().unwrap_or("");
    let mut toks = body.split_ascii_whitespace();
    let Some(label_tok) = toks.next() else {
        return Ok(None);
    };
    let label = parse_float(label_tok).ok_or_else(|| LibsvmErrorKind::Label(label_tok.into()))?;
    let mut features = Vec::new();
    let mut prev = 0usize;
    for tok in toks {
        let (i, v) = tok
            .split_once(':')
            .ok_or_else(|| LibsvmErrorKind::MissingColon(tok.into()))?;
        let index: usize = i.parse().map_err(|_| LibsvmErrorKind::Index(i.into()))?;
        if index == 0 {
            return Err(LibsvmErrorKind::ZeroIndex);
        }
        if index <= prev {
            return Err(LibsvmErrorKind::NotAscending { prev, index });
        }
        let value = parse_float(v).ok_or_else(|| LibsvmErrorKind::Value(v.into()))?;
        features.push((index, value));
        prev = index;
    }
    Ok(Some(SparseRow { label, features }))
}

/// Parse LIBSVM text. `n_features` fixes the column count; otherwise the
/// largest index seen is used.
pub fn parse_libsvm<R: BufRead>(reader: R, n_features: Option<usize>) -> Result<LibsvmData, LibsvmError> {
    let mut rows = Vec::new();
    let mut max_index = 0;
    for (k, line) in reader.lines().enumerate() {
        let line_no = k + 1;
        let text = line.map_err(|source| LibsvmError::Io { line: line_no, source })?;
        let row = parse_line(&text).map_err(|kind| LibsvmError::Parse { line: line_no, kind })?;
        let Some(row) = row else { continue };
        if let Some(&(last, _)) = row.features.last() {
            if let Some(n) = n_features {
                if last > n {
                    return Err(LibsvmError::Parse {
                        line: line_no,
                        kind: LibsvmErrorKind::TooManyFeatures {
                            index: last,
                            n_features: n,
                        },
                    });
                }
            }
            max_index = max_index.max(last);
        }
        rows.push(row);
    }
    Ok(LibsvmData {
        rows,
        n_features: n_features.unwrap_or(max_index),
    })
}

pub fn write_libsvm<W: Write>(mut out: W, data: &LibsvmData) -> io::Result<()> {
    for row in &data.rows {
        write!(out, "{}", row.label)?;
        for (i, v) in &row.features {
            write!(out, " {i}:{v}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}

/// Map binary labels onto `{−1, +1}`: `{0, 1}` and `{1, 2}` are recoded,
/// `{−1, +1}` is left alone.
pub fn normalize_labels(labels: &[f64]) -> Result<Vec<f64>, LibsvmError> {
    let mut distinct: Vec<f64> = labels.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let within = |set: &[f64]| distinct.iter().all(|v| set.contains(v));
    if within(&[-1.0, 1.0]) {
        return Ok(labels.to_vec());
    }
    let (neg, pos) = if within(&[0.0, 1.0]) {
        (0.0, 1.0)
    } else if within(&[1.0, 2.0]) {
        (1.0, 2.0)
    } else {
        return Err(LibsvmError::Labels(distinct));
    };
    log::info!("mapping labels {{{neg}, {pos}}} to {{-1, +1}}");
    Ok(labels.iter().map(|&v| if v == pos { 1.0 } else { -1.0 }).collect())
}

impl LibsvmData {
    /// Densify. With `classification`, labels go through [`normalize_labels`].
    pub fn into_dataset(self, source: &str, classification: bool) -> Result<Dataset, LibsvmError> {
        let m = self.rows.len();
        let n = self.n_features;
        let mut a = Matrix::zeros(m, n);
        let mut y = Vec::with_capacity(m);
        for (i, row) in self.rows.into_iter().enumerate() {
            let dst = a.row_mut(i);
            for (j, v) in row.features {
                dst[j - 1] = v;
            }
            y.push(row.label);
        }
        if classification {
            y = normalize_labels(&y)?;
        }
        Ok(Dataset::new(a, y, source, None))
    }
}

/// Read a LIBSVM file into a dense dataset.
pub fn read_libsvm(
    path: &Path,
    n_features: Option<usize>,
    classification: bool,
) -> Result<Dataset, LibsvmError> {
    let file = File::open(path).map_err(|source| LibsvmError::Open {
        path: path.display().to_string(),
        source,
    })?;
    parse_libsvm(BufReader::new(file), n_features)?.into_dataset(&path.display().to_string(), classification)
}
