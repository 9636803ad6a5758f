//! Datasets: LIBSVM ingestion, dense CSV export and the synthetic generators.

mod generate;
mod libsvm;

pub use generate::{
    gen_deconvolution, gen_deconvolution_with, gen_group_lasso, gen_group_lasso_with, gen_logistic,
    gen_logistic_with, DECONV_FILTER,
};
pub use libsvm::{
    normalize_labels, parse_libsvm, read_libsvm, write_libsvm, LibsvmData, LibsvmError, LibsvmErrorKind,
    SparseRow,
};

use std::io::Write;

use scorch_core::Matrix;
use serde::Serialize;

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetMeta {
    pub source: String,
    /// Fraction of nonzero design entries.
    pub density: f64,
    pub seed: Option<u64>,
}

/// Dense design `A` (m x n) and targets `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub a: Matrix,
    pub y: Vec<f64>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(a: Matrix, y: Vec<f64>, source: impl Into<String>, seed: Option<u64>) -> Self {
        let total = (a.rows() * a.cols()).max(1);
        let nz = a.as_slice().iter().filter(|v| **v != 0.0).count();
        Self {
            meta: DatasetMeta {
                source: source.into(),
                density: nz as f64 / total as f64,
                seed,
            },
            a,
            y,
        }
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// Sparse view with 1-based feature indices.
    pub fn to_libsvm(&self) -> LibsvmData {
        let rows = (0..self.m())
            .map(|i| SparseRow {
                label: self.y[i],
                features: self
                    .a
                    .row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| (j + 1, *v))
                    .collect(),
            })
            .collect();
        LibsvmData {
            rows,
            n_features: self.n(),
        }
    }

    /// One row per sample: `y,a_1,...,a_n` with a header line.
    pub fn write_dense_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["y".to_string()];
        header.extend((1..=self.n()).map(|j| format!("a{j}")));
        w.write_record(&header)?;
        for i in 0..self.m() {
            let mut rec = vec![self.y[i].to_string()];
            rec.extend(self.a.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Known solution of a synthetic instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub x_star: Vec<f64>,
    /// Group index sets (0-based), empty when the family has no groups.
    pub groups: Vec<Vec<usize>>,
    pub active_groups: Vec<usize>,
    pub nnz: usize,
}

impl GroundTruth {
    pub fn new(x_star: Vec<f64>, groups: Vec<Vec<usize>>, active_groups: Vec<usize>) -> Self {
        let nnz = x_star.iter().filter(|v| **v != 0.0).count();
        Self {
            x_star,
            groups,
            active_groups,
            nnz,
        }
    }

    /// `(1/n)‖x − x*‖²`
    pub fn mse(&self, x: &[f64]) -> f64 {
        let n = self.x_star.len().max(1);
        let d = scorch_core::linalg::dist2(x, &self.x_star);
        d * d / n as f64
    }
}
