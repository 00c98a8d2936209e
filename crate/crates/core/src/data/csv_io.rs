use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use super::dataset::{Column, Dataset};
use super::schema::{ColumnKind, Schema};
use crate::error::{Error, Result};

enum Builder {
    Numeric(Vec<f64>),
    Categorical {
        levels: Vec<String>,
        index: HashMap<String, usize>,
        fixed: bool,
        codes: Vec<usize>,
    },
}

/// Read a CSV file whose header names the schema's columns in any order.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Ingestion {
            row: 0,
            column: String::new(),
            message: e.to_string(),
        })?
        .clone();

    // header position -> schema column
    let mut position = vec![usize::MAX; schema.columns.len()];
    for (pos, name) in header.iter().enumerate() {
        let ci = schema.index_of(name).ok_or_else(|| Error::Ingestion {
            row: 0,
            column: name.to_string(),
            message: "unknown column".into(),
        })?;
        if position[ci] != usize::MAX {
            return Err(Error::Ingestion {
                row: 0,
                column: name.to_string(),
                message: "duplicate header".into(),
            });
        }
        position[ci] = pos;
    }
    if let Some(ci) = position.iter().position(|&p| p == usize::MAX) {
        return Err(Error::Ingestion {
            row: 0,
            column: schema.columns[ci].name.clone(),
            message: "column missing from header".into(),
        });
    }

    let mut builders: Vec<Builder> = schema
        .columns
        .iter()
        .map(|c| match c.kind {
            ColumnKind::Numeric => Builder::Numeric(Vec::new()),
            ColumnKind::Categorical => {
                let levels = c.levels.clone().unwrap_or_default();
                let index = levels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
                Builder::Categorical {
                    fixed: c.levels.is_some(),
                    levels,
                    index,
                    codes: Vec::new(),
                }
            }
        })
        .collect();

    for (r, record) in rdr.records().enumerate() {
        // data rows are numbered from 1; the header is row 0
        let row = r + 1;
        let record = record.map_err(|e| Error::Ingestion {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        for (ci, b) in builders.iter_mut().enumerate() {
            let name = &schema.columns[ci].name;
            let cell = record.get(position[ci]).unwrap_or("");
            if cell.trim().is_empty() {
                return Err(Error::Ingestion {
                    row,
                    column: name.clone(),
                    message: "missing value".into(),
                });
            }
            match b {
                Builder::Numeric(v) => {
                    let x: f64 = cell.trim().parse().map_err(|_| Error::Ingestion {
                        row,
                        column: name.clone(),
                        message: format!("unparseable numeric cell `{cell}`"),
                    })?;
                    if !x.is_finite() {
                        return Err(Error::Ingestion {
                            row,
                            column: name.clone(),
                            message: format!("non-finite numeric cell `{cell}`"),
                        });
                    }
                    v.push(x);
                }
                Builder::Categorical {
                    levels,
                    index,
                    fixed,
                    codes,
                } => {
                    let code = match index.get(cell) {
                        Some(&c) => c,
                        None if *fixed => {
                            return Err(Error::Ingestion {
                                row,
                                column: name.clone(),
                                message: format!("level `{cell}` not declared in schema"),
                            })
                        }
                        None => {
                            levels.push(cell.to_string());
                            index.insert(cell.to_string(), levels.len() - 1);
                            levels.len() - 1
                        }
                    };
                    codes.push(code);
                }
            }
        }
    }

    let columns: Vec<Column> = builders
        .into_iter()
        .map(|b| match b {
            Builder::Numeric(v) => Column::Numeric(v),
            Builder::Categorical { levels, codes, .. } => Column::Categorical { levels, codes },
        })
        .collect();
    let mut schema = schema.clone();
    // record observed level order so the dataset validates against its own schema
    for (spec, col) in schema.columns.iter_mut().zip(&columns) {
        if let Column::Categorical { levels, .. } = col {
            if spec.levels.is_none() {
                spec.levels = Some(levels.clone());
            }
        }
    }
    Dataset::new(schema, columns)
}

/// Write the dataset as CSV in schema column order. Numbers use the shortest
/// representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(d: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let names: Vec<&str> = d.schema().columns.iter().map(|c| c.name.as_str()).collect();
    w.write_record(&names).map_err(|e| Error::Io(e.to_string()))?;
    for r in 0..d.n_rows() {
        w.write_record(d.row_text(r)).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    write_csv(d, std::io::BufWriter::new(file))
}
