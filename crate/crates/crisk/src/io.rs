//! CSV ingestion and export.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crisk_core::cge::CgeCurve;
use crisk_core::data::{Dataset, Observation};

use crate::error::CliError;

/// Which CSV columns hold the duration, the risk label and the covariates.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ColumnSpec {
    pub x: String,
    pub delta: String,
    /// `None` picks every `z<number>` column, ordered by number.
    pub z: Option<Vec<String>>,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        Self {
            x: "x".into(),
            delta: "delta".into(),
            z: None,
        }
    }
}

fn default_z_columns(headers: &csv::StringRecord) -> Vec<(u64, usize)> {
    let mut cols: Vec<(u64, usize)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| {
            let rest = h.trim().strip_prefix('z')?;
            (!rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
                .then(|| rest.parse().ok().map(|k| (k, i)))
                .flatten()
        })
        .collect();
    cols.sort();
    cols
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize, CliError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| CliError::Data(format!("missing column `{name}`")))
}

fn field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    idx: usize,
    name: &str,
    line: u64,
) -> Result<T, CliError> {
    let raw = rec.get(idx).map(str::trim).unwrap_or("");
    if raw.is_empty() {
        return Err(CliError::Data(format!("line {line}: `{name}` is empty")));
    }
    raw.parse()
        .map_err(|_| CliError::Data(format!("line {line}: cannot parse `{name}` value `{raw}`")))
}

/// Parses a comma-separated table with a header row.
pub fn read_dataset<R: Read>(reader: R, cols: &ColumnSpec) -> Result<Dataset, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Data(format!("cannot read header: {e}")))?
        .clone();
    let xi = column(&headers, &cols.x)?;
    let di = column(&headers, &cols.delta)?;
    let zi: Vec<(String, usize)> = match &cols.z {
        Some(names) => names
            .iter()
            .map(|n| column(&headers, n).map(|i| (n.clone(), i)))
            .collect::<Result<_, _>>()?,
        None => default_z_columns(&headers)
            .into_iter()
            .map(|(_, i)| (headers[i].trim().to_string(), i))
            .collect(),
    };
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Data(format!("line {line}: {e}"))
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let x: f64 = field(&rec, xi, &cols.x, line)?;
        if !(x > 0.0 && x.is_finite()) {
            return Err(CliError::Data(format!(
                "line {line}: duration must be positive, got {x}"
            )));
        }
        let delta: u32 = field(&rec, di, &cols.delta, line)?;
        let z = zi
            .iter()
            .map(|(name, i)| field::<f64>(&rec, *i, name, line))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(Observation::new(x, delta, z));
    }
    if rows.is_empty() {
        return Err(CliError::Data("the file has no data rows".into()));
    }
    Dataset::new(rows).map_err(|e| CliError::Data(e.to_string()))
}

pub fn load_csv(path: &Path, cols: &ColumnSpec) -> Result<Dataset, CliError> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    read_dataset(file, cols).map_err(|e| match e {
        CliError::Data(msg) => CliError::Data(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Writes `x, delta, z1..zk`.
pub fn write_dataset<W: Write>(writer: W, ds: &Dataset) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["x".to_string(), "delta".to_string()];
    header.extend((1..=ds.k()).map(|j| format!("z{j}")));
    w.write_record(&header)?;
    for row in ds.rows() {
        let mut rec = vec![row.x.to_string(), row.delta.to_string()];
        rec.extend(row.z.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One block per `(tau, stratum)`: the curve at time 0 and after every jump.
pub fn write_curves<W: Write>(
    writer: W,
    k: usize,
    curves: &[(f64, Vec<f64>, CgeCurve)],
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["tau".to_string(), "theta".to_string()];
    header.extend((1..=k).map(|j| format!("z{j}")));
    header.extend(["t".to_string(), "S".to_string()]);
    w.write_record(&header)?;
    for (tau, z, curve) in curves {
        let step = &curve.curve;
        let points = std::iter::once((0.0, step.initial())).chain(
            step.jump_times()
                .iter()
                .copied()
                .zip(step.values().iter().copied()),
        );
        for (t, s) in points {
            let mut rec = vec![tau.to_string(), curve.theta.to_string()];
            rec.extend(z.iter().map(f64::to_string));
            rec.extend([t.to_string(), s.to_string()]);
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Bootstrap replicate matrix, one row per successful replicate.
pub fn write_matrix<W: Write>(
    writer: W,
    names: &[String],
    rows: &[Vec<f64>],
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(names)?;
    for r in rows {
        w.write_record(r.iter().map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}
