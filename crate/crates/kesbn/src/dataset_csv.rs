//! Datasets as CSV: a header row of variable names, then one row per case.
//!
//! Cells are category labels, coded per column in order of first appearance.
//! Quoting is not supported; a label containing a quote character, or a row
//! split into the wrong number of fields by an embedded comma, is a parse
//! error.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use kesbn_core::data::MAX_CARDINALITY;
use kesbn_core::{Dataset, Variable};

use crate::error::{Error, Result};

fn reader_for<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).quoting(false).flexible(false).from_reader(input)
}

fn csv_error(origin: &str, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            Error::parse(origin, line, 0, format!("row has {len} fields, header has {expected_len}"))
        }
        csv::ErrorKind::Utf8 { err, .. } => Error::parse(origin, line, err.field() as u64 + 1, "invalid UTF-8"),
        _ => Error::parse(origin, line, 0, e.to_string()),
    }
}

fn check_cell(origin: &str, line: u64, column: usize, cell: &str) -> Result<()> {
    if cell.is_empty() {
        return Err(Error::parse(origin, line, column as u64 + 1, "empty cell"));
    }
    if cell.contains('"') {
        return Err(Error::parse(origin, line, column as u64 + 1, "quoted cells are not supported"));
    }
    Ok(())
}

/// Parses CSV text. `origin` names the source in error messages.
pub fn read_csv<R: Read>(input: R, origin: &str) -> Result<Dataset> {
    let mut rdr = reader_for(input);
    let header = rdr.headers().map_err(|e| csv_error(origin, e))?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(kesbn_core::Error::EmptyData.into());
    }
    let mut names = Vec::with_capacity(header.len());
    for (c, name) in header.iter().enumerate() {
        check_cell(origin, 1, c, name)?;
        if names.iter().any(|n: &String| n == name) {
            return Err(Error::parse(origin, 1, c as u64 + 1, format!("duplicate column {name}")));
        }
        names.push(name.to_string());
    }

    let width = names.len();
    let mut codes: Vec<HashMap<String, u16>> = vec![HashMap::new(); width];
    let mut labels: Vec<Vec<String>> = vec![Vec::new(); width];
    let mut columns: Vec<Vec<u16>> = vec![Vec::new(); width];
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record).map_err(|e| csv_error(origin, e))? {
        let line = record.position().map_or(0, |p| p.line());
        for (c, cell) in record.iter().enumerate() {
            check_cell(origin, line, c, cell)?;
            let code = match codes[c].get(cell) {
                Some(&code) => code,
                None => {
                    if labels[c].len() == MAX_CARDINALITY {
                        return Err(Error::parse(origin, line, c as u64 + 1, "too many distinct labels"));
                    }
                    let code = labels[c].len() as u16;
                    codes[c].insert(cell.to_string(), code);
                    labels[c].push(cell.to_string());
                    code
                }
            };
            columns[c].push(code);
        }
    }
    if columns[0].is_empty() {
        return Err(kesbn_core::Error::EmptyData.into());
    }
    let variables = names.into_iter().zip(labels).map(|(n, s)| Variable::new(n, s)).collect();
    Ok(Dataset::from_columns(variables, columns)?)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(io::BufReader::new(file), &path.display().to_string())
}

fn writable(s: &str) -> bool {
    !s.is_empty() && !s.contains([',', '"', '\n', '\r'])
}

/// Writes `data` with its state labels. Labels that could not be read back
/// (empty, or containing commas, quotes or line breaks) are rejected.
pub fn write_csv<W: Write>(data: &Dataset, out: W) -> Result<()> {
    for v in data.variables() {
        if !writable(&v.name) || !v.states.iter().all(|s| writable(s)) {
            return Err(kesbn_core::Error::InvalidData(format!(
                "variable {:?} has a name or label that cannot be written as CSV",
                v.name
            ))
            .into());
        }
    }
    let mut w = csv::WriterBuilder::new().quote_style(csv::QuoteStyle::Never).from_writer(out);
    let io_err = |e: csv::Error| Error::io("<csv output>", e.into());
    w.write_record(data.names()).map_err(io_err)?;
    let vars = data.variables();
    for r in 0..data.n_rows() {
        w.write_record((0..data.n_vars()).map(|c| vars[c].states[data.value(r, c) as usize].as_str()))
            .map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))
}

pub fn save_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_csv(data, &mut out).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    out.flush().map_err(|e| Error::io(path, e))
}
