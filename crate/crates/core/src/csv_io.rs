//! CSV import/export. Floats are written with Rust's shortest round-trip
//! formatting, so re-reading a file reproduces the values bit for bit.
//!
//! Layouts:
//! - spectrum: `theta_rad,theta_deg,<value column>`
//! - dispersion table: `method,parameter,dispersion`
//! - weights: `element,re,im`
//! - snapshots: header `re_0,im_0,…,re_{N-1},im_{N-1}`, one row per snapshot
//! - matrix: no header, N rows of `re,im` pairs in row-major order

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::array::SnapshotSet;
use crate::beamformer::{Beamformer, SpectrumGrid};
use crate::error::{BeamformError, Result};
use crate::experiment::{DispersionRow, RunRecord};
use crate::linalg::{CMatrix, HermitianMatrix};

pub fn write_spectrum<W: Write>(out: W, spectrum: &SpectrumGrid, value_column: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta_rad", "theta_deg", value_column])?;
    for (t, v) in spectrum.thetas().iter().zip(spectrum.values()) {
        w.write_record([t.to_string(), t.to_degrees().to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dispersion_table<W: Write>(out: W, rows: &[DispersionRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "parameter", "dispersion"])?;
    for r in rows {
        w.write_record([r.method.clone(), r.parameter.clone(), r.dispersion.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Long-form per-trial patterns.
pub fn write_records<W: Write>(out: W, grid: &[f64], records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "method",
        "parameter",
        "trial",
        "seed",
        "covariance_hash",
        "theta_rad",
        "theta_deg",
        "value",
        "error",
    ])?;
    for r in records {
        let hash = format!("{:016x}", r.covariance_hash);
        let err = r.error.clone().unwrap_or_default();
        for (t, v) in grid.iter().zip(&r.values) {
            w.write_record([
                r.method.clone(),
                r.parameter.clone(),
                r.trial.to_string(),
                r.seed.to_string(),
                hash.clone(),
                t.to_string(),
                t.to_degrees().to_string(),
                v.to_string(),
                err.clone(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_weights<W: Write>(out: W, beamformer: &Beamformer) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["element", "re", "im"])?;
    for (i, z) in beamformer.weights().iter().enumerate() {
        w.write_record([i.to_string(), z.re.to_string(), z.im.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_snapshots<W: Write>(out: W, set: &SnapshotSet) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = set.n_elements();
    let header: Vec<String> = (0..n).flat_map(|i| [format!("re_{i}"), format!("im_{i}")]).collect();
    w.write_record(&header)?;
    for l in 0..set.len() {
        let x = set.snapshot(l);
        let row: Vec<String> = x.iter().flat_map(|z| [z.re.to_string(), z.im.to_string()]).collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_matrix<W: Write>(out: W, m: &HermitianMatrix) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let a = m.as_matrix();
    for i in 0..a.nrows() {
        let row: Vec<String> =
            (0..a.ncols()).flat_map(|j| [a[(i, j)].re.to_string(), a[(i, j)].im.to_string()]).collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a matrix written by [`write_matrix`] and checks it is Hermitian.
pub fn read_matrix<R: Read>(input: R) -> Result<HermitianMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() % 2 != 0 {
            return Err(BeamformError::Domain(format!("row {} has an odd number of columns", rows.len())));
        }
        let vals = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| BeamformError::Domain(format!("bad number `{s}`: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(vals.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect());
    }
    let n = rows.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(BeamformError::DimensionMismatch { expected: n, actual: bad.len() });
    }
    HermitianMatrix::new(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}
