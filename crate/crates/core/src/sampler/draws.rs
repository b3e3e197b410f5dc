use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::model::VarCoefficients;
use crate::error::{Error, Result};

/// Row-major `D × cols` block of retained draws.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawMatrix {
    cols: usize,
    data: Vec<f64>,
}

impl DrawMatrix {
    pub fn with_capacity(rows: usize, cols: usize) -> Self {
        Self {
            cols,
            data: Vec::with_capacity(rows * cols),
        }
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.cols, "row width");
        self.data.extend_from_slice(row);
    }

    pub fn rows(&self) -> usize {
        self.data.len().checked_div(self.cols).unwrap_or(0)
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, d: usize) -> &[f64] {
        &self.data[d * self.cols..(d + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows()).map(|d| self.data[d * self.cols + j]).collect()
    }

    fn write_csv(&self, path: &Path, header: &[String]) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
        w.write_record(header)?;
        let mut buf = Vec::with_capacity(self.cols);
        for d in 0..self.rows() {
            buf.clear();
            buf.extend(self.row(d).iter().map(|v| v.to_string()));
            w.write_record(&buf)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    fn read_csv(path: &Path, cols: usize) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_io(path, e))?;
        let width = r.headers()?.len();
        if width != cols {
            return Err(Error::Parse(format!(
                "{}: expected {cols} columns, found {width}",
                path.display()
            )));
        }
        let mut m = Self::with_capacity(0, cols);
        for rec in r.records() {
            let rec = rec?;
            for cell in rec.iter() {
                let v: f64 = cell.parse().map_err(|_| {
                    Error::Parse(format!("{}: bad number '{cell}'", path.display()))
                })?;
                m.data.push(v);
            }
        }
        Ok(m)
    }
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::Csv(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Joint,
    Twostep,
}

/// Run lengths and chain diagnostics stored next to the draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawsMeta {
    pub method: Method,
    pub seed: u64,
    pub burn_in: usize,
    pub thin: usize,
    pub draws: usize,
    /// VAR ordering, inequality state first.
    pub variables: Vec<String>,
    pub dates: Vec<String>,
    /// Per-period MH acceptance over retained iterations (empty for two-step).
    pub acceptance_rates: Vec<f64>,
    /// Frozen per-period proposal standard deviations (empty for two-step).
    pub proposal_sds: Vec<f64>,
    pub truncation_stalls: usize,
}

/// Retained draws of `μ`, `h`, `β` and `Σ` (row-major vec of each `Σ`).
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub mu: DrawMatrix,
    pub h: DrawMatrix,
    pub beta: DrawMatrix,
    pub sigma: DrawMatrix,
    pub meta: DrawsMeta,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.beta.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.meta.variables.len()
    }

    pub fn periods(&self) -> usize {
        self.mu.cols()
    }

    pub fn coefficients(&self, d: usize) -> VarCoefficients {
        VarCoefficients::unpack(self.beta.row(d), self.dim())
    }

    pub fn beta_vector(&self, d: usize) -> DVector<f64> {
        DVector::from_column_slice(self.beta.row(d))
    }

    pub fn sigma_matrix(&self, d: usize) -> DMatrix<f64> {
        let m = self.dim();
        DMatrix::from_row_slice(m, m, self.sigma.row(d))
    }

    fn headers(&self) -> (Vec<String>, Vec<String>, Vec<String>) {
        let v = &self.meta.variables;
        let periods = self.meta.dates.clone();
        let mut beta = Vec::new();
        for a in v {
            beta.push(format!("{a}:const"));
            for b in v {
                beta.push(format!("{a}:{b}"));
            }
        }
        let sigma = v
            .iter()
            .flat_map(|a| v.iter().map(move |b| format!("{a}:{b}")))
            .collect();
        (periods, beta, sigma)
    }

    /// Writes `mu.csv`, `h.csv`, `beta.csv`, `sigma.csv` and `meta.json`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let (periods, beta, sigma) = self.headers();
        self.mu.write_csv(&dir.join("mu.csv"), &periods)?;
        self.h.write_csv(&dir.join("h.csv"), &periods)?;
        self.beta.write_csv(&dir.join("beta.csv"), &beta)?;
        self.sigma.write_csv(&dir.join("sigma.csv"), &sigma)?;
        let meta_path = dir.join("meta.json");
        let json = serde_json::to_string_pretty(&self.meta)?;
        fs::write(&meta_path, json + "\n").map_err(|e| Error::io(&meta_path, e))
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let meta_path = dir.join("meta.json");
        let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: DrawsMeta = serde_json::from_str(&text)?;
        let m = meta.variables.len();
        let t = meta.dates.len();
        if m == 0 {
            return Err(Error::Parse(format!("{}: no variables", meta_path.display())));
        }
        let draws = Self {
            mu: DrawMatrix::read_csv(&dir.join("mu.csv"), t)?,
            h: DrawMatrix::read_csv(&dir.join("h.csv"), t)?,
            beta: DrawMatrix::read_csv(&dir.join("beta.csv"), m * (m + 1))?,
            sigma: DrawMatrix::read_csv(&dir.join("sigma.csv"), m * m)?,
            meta,
        };
        let d = draws.beta.rows();
        if draws.mu.rows() != d || draws.h.rows() != d || draws.sigma.rows() != d {
            return Err(Error::Parse(format!(
                "{}: draw files have different row counts",
                dir.display()
            )));
        }
        Ok(draws)
    }
}
