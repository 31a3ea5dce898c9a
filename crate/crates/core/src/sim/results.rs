//! Rejection-rate rows and their CSV file.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::homogeneity::TestName;
use crate::transforms::TransformKind;

/// One (design point, test) cell of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "P")]
    pub p: usize,
    #[serde(rename = "M_total")]
    pub m_total: usize,
    pub lambda: f64,
    pub h: f64,
    pub transform: TransformKind,
    pub test: TestName,
    pub reps: usize,
    pub n_reject: usize,
    pub n_errors: usize,
    /// `n_reject / (reps − n_errors)`.
    pub rejection_rate: f64,
    /// `√(r(1−r)/(reps − n_errors))`.
    pub mc_std_err: f64,
    pub seed: u64,
    pub elapsed_s: f64,
}

impl PowerRow {
    /// Rate and standard error from counts; NaN when every replication failed.
    pub fn rate(n_reject: usize, n_errors: usize, reps: usize) -> (f64, f64) {
        let eff = reps.saturating_sub(n_errors) as f64;
        if eff == 0.0 {
            return (f64::NAN, f64::NAN);
        }
        let r = n_reject as f64 / eff;
        (r, (r * (1.0 - r) / eff).sqrt())
    }

    pub fn error_rate(&self) -> f64 {
        self.n_errors as f64 / self.reps.max(1) as f64
    }

    /// Identity of the cell, used to skip work already on disk.
    pub fn key(&self) -> RowKey {
        RowKey {
            n: self.n,
            t: self.t,
            p: self.p,
            m_total: self.m_total,
            lambda: self.lambda.to_bits(),
            h: self.h.to_bits(),
            transform: self.transform,
            test: self.test,
            reps: self.reps,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RowKey {
    pub n: usize,
    pub t: usize,
    pub p: usize,
    pub m_total: usize,
    pub lambda: u64,
    pub h: u64,
    pub transform: TransformKind,
    pub test: TestName,
    pub reps: usize,
    pub seed: u64,
}

/// Reads every row of a results file.
pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<PowerRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Appends rows to a results file, writing the header when the file is new,
/// and flushes after every row.
pub struct ResultSink {
    writer: csv::Writer<File>,
}

impl ResultSink {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let writer = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
        Ok(ResultSink { writer })
    }

    pub fn push(&mut self, row: &PowerRow) -> Result<()> {
        self.writer.serialize(row)?;
        self.writer.flush()?;
        Ok(())
    }
}

/// Writes rows to any writer with a header.
pub fn write_results(w: impl Write, rows: &[PowerRow]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    for r in rows {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}
