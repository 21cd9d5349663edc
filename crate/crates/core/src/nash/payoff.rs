use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::NashError;
use crate::evaluator::write_atomic;

/// Square meta-game payoff matrix with a label per strategy. `M[i][j]` is
/// the payoff to strategy `i` against strategy `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct PayoffMatrix {
    labels: Vec<String>,
    values: DMatrix<f64>,
}

impl PayoffMatrix {
    pub fn new(labels: Vec<String>, values: DMatrix<f64>) -> Result<PayoffMatrix, NashError> {
        let k = labels.len();
        if values.nrows() != k || values.ncols() != k {
            return Err(NashError::Shape(format!(
                "{} labels for a {}x{} matrix",
                k,
                values.nrows(),
                values.ncols()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(NashError::Shape(format!("duplicate label {dup:?}")));
        }
        Ok(PayoffMatrix { labels, values })
    }

    /// Labels `0..k` as strings.
    pub fn unlabeled(values: DMatrix<f64>) -> Result<PayoffMatrix, NashError> {
        let labels = (0..values.nrows()).map(|i| i.to_string()).collect();
        PayoffMatrix::new(labels, values)
    }

    pub fn zeros(labels: Vec<String>) -> PayoffMatrix {
        let k = labels.len();
        PayoffMatrix {
            labels,
            values: DMatrix::zeros(k, k),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// `max |M + Mᵀ|`.
    pub fn antisymmetry_error(&self) -> f64 {
        (&self.values + self.values.transpose()).amax()
    }

    /// The sub-game on `indices`, in the given order.
    pub fn restrict(&self, indices: &[usize]) -> PayoffMatrix {
        PayoffMatrix {
            labels: indices.iter().map(|&i| self.labels[i].clone()).collect(),
            values: DMatrix::from_fn(indices.len(), indices.len(), |r, c| {
                self.values[(indices[r], indices[c])]
            }),
        }
    }

    /// CSV with a header row of labels followed by one row per strategy.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), NashError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.labels)?;
        for i in 0..self.len() {
            w.write_record(self.values.row(i).iter().map(|x| format!("{x}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<PayoffMatrix, NashError> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let labels: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        let k = labels.len();
        let mut data = Vec::with_capacity(k * k);
        let mut rows = 0;
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != k {
                return Err(NashError::Parse(format!("row {} has {} fields, expected {k}", rows + 1, rec.len())));
            }
            for field in rec.iter() {
                let x: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| NashError::Parse(format!("row {}: bad number {field:?}", rows + 1)))?;
                data.push(x);
            }
            rows += 1;
        }
        if rows != k {
            return Err(NashError::Parse(format!("{rows} rows for {k} labels")));
        }
        PayoffMatrix::new(labels, DMatrix::from_row_slice(k, k, &data))
    }

    pub fn save(&self, path: &Path) -> Result<(), NashError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        write_atomic(path, &buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<PayoffMatrix, NashError> {
        PayoffMatrix::read_csv(std::fs::File::open(path)?)
    }
}
