use std::collections::HashSet;

use thiserror::Error;

use super::schema::{Schema, HONESTY_COLUMN, RESPONSE_TIME_PREFIX, YES};
use crate::inference::SampleBatch;
use crate::model::{ModelError, Network, VariableSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("CSV error at line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("empty input: no header row")]
    EmptyInput,
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{0}` appears more than once")]
    DuplicateColumn(String),
    #[error("row {row}, column `{column}`: illegal value `{value}`")]
    IllegalState {
        value: String,
        row: usize,
        column: String,
    },
    #[error("row {row} has {found} fields, header has {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("filter needs meta column `{0}`, which the dataset lacks")]
    MissingMetaColumn(String),
    #[error("dataset columns do not match the model: {0}")]
    SchemaMismatch(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One respondent. `values` is aligned with [`Dataset::variables`];
/// `response_ms` with [`Dataset::response_columns`]. `None` means missing.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub values: Vec<Option<usize>>,
    pub response_ms: Vec<Option<u64>>,
    pub honesty: Option<bool>,
}

/// Tabular categorical data with optional per-question response times and
/// a self-reported honesty flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    variables: Vec<VariableSpec>,
    response_columns: Vec<String>,
    has_honesty: bool,
    records: Vec<Record>,
    provenance: String,
}

impl Dataset {
    /// `response_columns` name the variables (not the `rt_` columns) whose
    /// response times are carried.
    pub fn new(
        variables: Vec<VariableSpec>,
        response_columns: Vec<String>,
        has_honesty: bool,
        records: Vec<Record>,
        provenance: impl Into<String>,
    ) -> Result<Self, DataError> {
        for (r, rec) in records.iter().enumerate() {
            if rec.values.len() != variables.len() || rec.response_ms.len() != response_columns.len()
            {
                return Err(DataError::RaggedRow {
                    row: r + 1,
                    expected: variables.len(),
                    found: rec.values.len(),
                });
            }
            for (v, s) in variables.iter().zip(&rec.values) {
                if let Some(s) = *s {
                    if s >= v.cardinality() {
                        return Err(DataError::IllegalState {
                            value: s.to_string(),
                            row: r + 1,
                            column: v.name.clone(),
                        });
                    }
                }
            }
        }
        Ok(Dataset {
            variables,
            response_columns,
            has_honesty,
            records,
            provenance: provenance.into(),
        })
    }

    /// Complete records from an ancestral sample, without meta columns.
    pub fn from_sample_batch(network: &Network, batch: &SampleBatch) -> Self {
        let records = batch
            .records
            .iter()
            .map(|r| Record {
                values: r.iter().map(|&s| Some(s)).collect(),
                response_ms: Vec::new(),
                honesty: None,
            })
            .collect();
        Dataset {
            variables: network.variables().to_vec(),
            response_columns: Vec::new(),
            has_honesty: false,
            records,
            provenance: format!("sample:{}:seed={}", batch.generator, batch.seed),
        }
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn response_columns(&self) -> &[String] {
        &self.response_columns
    }

    pub fn has_honesty(&self) -> bool {
        self.has_honesty
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Same columns, different records.
    pub fn with_records(&self, records: Vec<Record>) -> Self {
        Dataset {
            records,
            ..self.clone_header()
        }
    }

    fn clone_header(&self) -> Self {
        Dataset {
            variables: self.variables.clone(),
            response_columns: self.response_columns.clone(),
            has_honesty: self.has_honesty,
            records: Vec::new(),
            provenance: self.provenance.clone(),
        }
    }

    /// Drops categorical columns (and their response times) by name.
    /// Unknown names are ignored.
    pub fn without_columns(&self, names: &[&str]) -> Self {
        let keep: Vec<usize> = (0..self.variables.len())
            .filter(|&i| !names.contains(&self.variables[i].name.as_str()))
            .collect();
        let keep_rt: Vec<usize> = (0..self.response_columns.len())
            .filter(|&i| !names.contains(&self.response_columns[i].as_str()))
            .collect();
        Dataset {
            variables: keep.iter().map(|&i| self.variables[i].clone()).collect(),
            response_columns: keep_rt
                .iter()
                .map(|&i| self.response_columns[i].clone())
                .collect(),
            has_honesty: self.has_honesty,
            records: self
                .records
                .iter()
                .map(|r| Record {
                    values: keep.iter().map(|&i| r.values[i]).collect(),
                    response_ms: keep_rt.iter().map(|&i| r.response_ms[i]).collect(),
                    honesty: r.honesty,
                })
                .collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Adds response-time and honesty meta columns to a dataset that has none.
    pub fn with_meta(
        &self,
        response_columns: Vec<String>,
        response_ms: Vec<Vec<Option<u64>>>,
        honesty: Vec<Option<bool>>,
    ) -> Self {
        assert_eq!(response_ms.len(), self.records.len());
        assert_eq!(honesty.len(), self.records.len());
        let records = self
            .records
            .iter()
            .zip(response_ms)
            .zip(honesty)
            .map(|((r, rt), h)| Record {
                values: r.values.clone(),
                response_ms: rt,
                honesty: h,
            })
            .collect();
        Dataset {
            variables: self.variables.clone(),
            response_columns,
            has_honesty: true,
            records,
            provenance: self.provenance.clone(),
        }
    }

    /// Header row: categorical columns, then `rt_*` columns, then `honesty`.
    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = self.variables.iter().map(|v| v.name.clone()).collect();
        h.extend(
            self.response_columns
                .iter()
                .map(|c| format!("{RESPONSE_TIME_PREFIX}{c}")),
        );
        if self.has_honesty {
            h.push(HONESTY_COLUMN.to_string());
        }
        h
    }

    /// CSV with state labels; missing cells are empty.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header()).expect("in-memory write");
        for r in &self.records {
            let mut row: Vec<String> = r
                .values
                .iter()
                .zip(&self.variables)
                .map(|(s, v)| s.map_or(String::new(), |s| v.states[s].clone()))
                .collect();
            row.extend(
                r.response_ms
                    .iter()
                    .map(|t| t.map_or(String::new(), |t| t.to_string())),
            );
            if self.has_honesty {
                row.push(match r.honesty {
                    Some(true) => YES.to_string(),
                    Some(false) => "No".to_string(),
                    None => String::new(),
                });
            }
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

enum Column<'a> {
    Variable(&'a VariableSpec),
    ResponseTime,
    Honesty,
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "?"
}

/// Parses CSV text against a schema. The header must name schema variables,
/// `rt_<game variable>` columns or `honesty`; columns may appear in any order
/// and any subset. Empty cells and `?` are missing values.
pub fn load_dataset(text: &str, schema: &Schema, provenance: &str) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let csv_err = |e: csv::Error| DataError::Csv {
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    };
    let mut rows = reader.records();
    let header = match rows.next() {
        Some(h) => h.map_err(csv_err)?,
        None => return Err(DataError::EmptyInput),
    };

    let mut seen = HashSet::new();
    let mut columns = Vec::with_capacity(header.len());
    let mut variables = Vec::new();
    let mut response_columns = Vec::new();
    let mut has_honesty = false;
    for name in header.iter() {
        if !seen.insert(name.to_string()) {
            return Err(DataError::DuplicateColumn(name.to_string()));
        }
        let col = if name == HONESTY_COLUMN {
            has_honesty = true;
            Column::Honesty
        } else if let Some(v) = schema.variable(name) {
            variables.push(v.clone());
            Column::Variable(v)
        } else if let Some(v) = schema.response_time_target(name) {
            response_columns.push(v.name.clone());
            Column::ResponseTime
        } else {
            return Err(DataError::UnknownColumn(name.to_string()));
        };
        columns.push(col);
    }

    let mut records = Vec::new();
    for (r, row) in rows.enumerate() {
        let row = row.map_err(csv_err)?;
        let row_no = r + 1;
        if row.len() != columns.len() {
            return Err(DataError::RaggedRow {
                row: row_no,
                expected: columns.len(),
                found: row.len(),
            });
        }
        let mut rec = Record {
            values: Vec::with_capacity(variables.len()),
            response_ms: Vec::with_capacity(response_columns.len()),
            honesty: None,
        };
        for ((cell, col), name) in row.iter().zip(&columns).zip(header.iter()) {
            let illegal = || DataError::IllegalState {
                value: cell.to_string(),
                row: row_no,
                column: name.to_string(),
            };
            let missing = is_missing(cell);
            match col {
                Column::Variable(v) => rec.values.push(if missing {
                    None
                } else {
                    Some(v.state_index(cell).ok_or_else(illegal)?)
                }),
                Column::ResponseTime => rec.response_ms.push(if missing {
                    None
                } else {
                    Some(cell.parse::<u64>().map_err(|_| illegal())?)
                }),
                Column::Honesty => {
                    rec.honesty = match cell {
                        _ if missing => None,
                        "Yes" => Some(true),
                        "No" => Some(false),
                        _ => return Err(illegal()),
                    }
                }
            }
        }
        records.push(rec);
    }
    Ok(Dataset {
        variables,
        response_columns,
        has_honesty,
        records,
        provenance: provenance.to_string(),
    })
}
