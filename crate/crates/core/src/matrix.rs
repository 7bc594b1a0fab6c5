//! Expression matrices: one gene per row, identifier first, then the `n`
//! observations at `t = 1..n`.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::spectral::MIN_LEN;

#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionMatrix {
    ids: Vec<String>,
    n: usize,
    values: Vec<f64>,
}

impl ExpressionMatrix {
    /// `values` is row-major with `ids.len()` rows of length `n`.
    pub fn new(ids: Vec<String>, n: usize, values: Vec<f64>) -> Result<Self> {
        if n < MIN_LEN {
            return Err(invalid(format!(
                "n = {n} is below the minimum of {MIN_LEN}"
            )));
        }
        if values.len() != ids.len() * n {
            return Err(invalid(format!(
                "{} values do not form {} rows of length {n}",
                values.len(),
                ids.len()
            )));
        }
        Ok(ExpressionMatrix { ids, n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn genes(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, g: usize) -> &[f64] {
        &self.values[g * self.n..(g + 1) * self.n]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.n)
    }

    /// Writes a comma-separated matrix with a `gene_id,t1,..,tn` header.
    /// Values use the shortest representation that round-trips exactly.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut line = String::from("gene_id");
        for t in 1..=self.n {
            line.push_str(&format!(",t{t}"));
        }
        writeln!(out, "{line}")?;
        for (id, row) in self.ids.iter().zip(self.rows()) {
            line.clear();
            line.push_str(id);
            for v in row {
                line.push(',');
                line.push_str(&v.to_string());
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

/// How to interpret an input matrix. `None` fields are auto-detected.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReadOptions {
    pub has_header: Option<bool>,
    pub delimiter: Option<u8>,
}

pub fn read_matrix_path(path: &Path, options: ReadOptions) -> Result<ExpressionMatrix> {
    let file =
        std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_matrix(file, options)
}

/// Parses a delimited matrix. A tab in the first non-blank line selects tab
/// delimiting, otherwise commas. Without an explicit header flag, a first row
/// whose observation cells are not all numeric is treated as a header.
pub fn read_matrix<R: Read>(mut input: R, options: ReadOptions) -> Result<ExpressionMatrix> {
    let mut text = String::new();
    input
        .read_to_string(&mut text)
        .map_err(|e| Error::Io(e.to_string()))?;
    let delimiter = options.delimiter.unwrap_or_else(|| {
        let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
        if first.contains('\t') {
            b'\t'
        } else {
            b','
        }
    });

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter)
        .from_reader(text.as_bytes());

    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut n: Option<usize> = None;
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            row: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let row = record
            .position()
            .map_or(ids.len() + 1, |p| p.line() as usize);
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let is_first = std::mem::take(&mut first);
        if is_first {
            let header = match options.has_header {
                Some(h) => h,
                None => record.iter().skip(1).any(|f| parse_cell(f).is_none()),
            };
            if header {
                n = Some(record.len().saturating_sub(1));
                continue;
            }
        }
        let width = record.len().saturating_sub(1);
        match n {
            None => {
                if width < MIN_LEN {
                    return Err(Error::Parse {
                        row,
                        message: format!("{width} observations; at least {MIN_LEN} are required"),
                    });
                }
                n = Some(width);
            }
            Some(expected) if expected != width => {
                return Err(Error::Parse {
                    row,
                    message: format!("expected {expected} observations, found {width}"),
                });
            }
            Some(_) => {}
        }
        ids.push(record.get(0).unwrap_or("").trim().to_string());
        for (col, cell) in record.iter().skip(1).enumerate() {
            let v = parse_cell(cell).ok_or_else(|| Error::Parse {
                row,
                message: format!(
                    "column {}: '{}' is not a finite number",
                    col + 2,
                    cell.trim()
                ),
            })?;
            values.push(v);
        }
    }
    let n = n.ok_or_else(|| Error::Parse {
        row: 0,
        message: "no data rows".into(),
    })?;
    ExpressionMatrix::new(ids, n, values)
}

fn parse_cell(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}
