//! CSV reading and writing. Every file has a header row and floats are
//! written with 17 significant digits so they read back bit-exact.

use std::path::Path;

use oedkit::estimate::Record;
use oedkit::{LabeledExperiment, SymMatrix};

use crate::error::{CliError, CliResult};

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn write_csv<S: AsRef<str>>(path: &Path, header: &[S], rows: &[Vec<String>]) -> CliResult<()> {
    let io = |e: csv::Error| CliError::Write {
        path: path.to_path_buf(),
        source: e.into(),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header.iter().map(AsRef::as_ref)).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Write {
        path: path.to_path_buf(),
        source: e,
    })
}

fn read_rows(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::bad_file(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| CliError::bad_file(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::bad_file(path, e))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

fn parse_cell(path: &Path, row: usize, cell: &str) -> CliResult<f64> {
    cell.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| CliError::bad_file(path, format!("row {row}: '{cell}' is not a finite number")))
}

/// Square matrix with a header naming each parameter.
pub fn read_matrix(path: &Path, labels: &[String]) -> CliResult<SymMatrix> {
    let (header, rows) = read_rows(path)?;
    let p = labels.len();
    if header.len() != p || rows.len() != p {
        return Err(CliError::bad_file(
            path,
            format!(
                "expected a {p}x{p} matrix with header ({}), found {} columns and {} rows",
                labels.join(","),
                header.len(),
                rows.len()
            ),
        ));
    }
    if header != labels {
        log::warn!("{}: header {:?} differs from model parameters {:?}", path.display(), header, labels);
    }
    let mut full = Vec::with_capacity(p);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != p {
            return Err(CliError::bad_file(path, format!("row {} has {} columns", i + 1, row.len())));
        }
        full.push(
            row.iter()
                .map(|c| parse_cell(path, i + 1, c))
                .collect::<CliResult<Vec<f64>>>()?,
        );
    }
    SymMatrix::from_rows(&full).map_err(|e| CliError::bad_file(path, e))
}

pub fn matrix_rows(m: &SymMatrix) -> Vec<Vec<String>> {
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| num(m.get(i, j))).collect())
        .collect()
}

/// `parameter,value` rows as written by `estimate`.
pub fn read_theta(path: &Path, labels: &[String]) -> CliResult<Vec<f64>> {
    let (header, rows) = read_rows(path)?;
    if header.len() != 2 || rows.len() != labels.len() {
        return Err(CliError::bad_file(
            path,
            format!("expected header parameter,value and {} rows", labels.len()),
        ));
    }
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            if row[0] != labels[i] {
                return Err(CliError::bad_file(
                    path,
                    format!("row {} names '{}', expected '{}'", i + 1, row[0], labels[i]),
                ));
            }
            parse_cell(path, i + 1, &row[1])
        })
        .collect()
}

/// One experiment per row: the design inputs followed by the measured outputs.
pub fn read_dataset(path: &Path, exp: &LabeledExperiment) -> CliResult<Vec<Record>> {
    let (header, rows) = read_rows(path)?;
    let (nd, nm) = (exp.n_inputs(), exp.n_outputs());
    if header.len() != nd + nm {
        return Err(CliError::bad_file(
            path,
            format!(
                "model '{}' needs {nd} design and {nm} output columns, header has {}",
                exp.name,
                header.len()
            ),
        ));
    }
    if rows.is_empty() {
        return Err(CliError::bad_file(path, "data file has no experiments"));
    }
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != nd + nm {
                return Err(CliError::bad_file(path, format!("row {} has {} columns", i + 1, row.len())));
            }
            let v = row
                .iter()
                .map(|c| parse_cell(path, i + 1, c))
                .collect::<CliResult<Vec<f64>>>()?;
            Ok(Record {
                design: v[..nd].to_vec(),
                y: v[nd..].to_vec(),
            })
        })
        .collect()
}

pub fn dataset_header(exp: &LabeledExperiment) -> Vec<String> {
    exp.input_names.iter().chain(&exp.output_names).cloned().collect()
}
