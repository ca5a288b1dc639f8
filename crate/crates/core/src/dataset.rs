//! Records of discrete observations with optional missing cells, and the CSV
//! format: header row of variable names, cells are state labels, `?` marks a
//! missing value.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::network::{validate_variables, Variable};

pub const MISSING: &str = "?";

/// One record; `None` is a missing cell.
pub type Record = Vec<Option<usize>>;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    variables: Vec<Variable>,
    records: Vec<Record>,
}

impl Dataset {
    pub fn new(variables: Vec<Variable>, records: Vec<Record>) -> Result<Self> {
        validate_variables(&variables)?;
        for (r, rec) in records.iter().enumerate() {
            if rec.len() != variables.len() {
                return Err(Error::parse(
                    format!("record {r}"),
                    format!("{} cells, expected {}", rec.len(), variables.len()),
                ));
            }
            for (v, cell) in rec.iter().enumerate() {
                if let Some(s) = *cell {
                    if s >= variables[v].cardinality() {
                        return Err(Error::StateOutOfRange { variable: v, state: s });
                    }
                }
            }
        }
        Ok(Dataset { variables, records })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.variables.iter().map(Variable::cardinality).collect()
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

    pub fn width(&self) -> usize {
        self.variables.len()
    }

    pub fn is_complete(&self) -> bool {
        self.records.iter().all(|r| r.iter().all(Option::is_some))
    }

    pub fn missing_count(&self) -> usize {
        self.records.iter().map(|r| r.iter().filter(|c| c.is_none()).count()).sum()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Distinct records with multiplicities, in order of first occurrence.
    pub fn weighted_unique(&self) -> Vec<(Record, f64)> {
        let mut index: HashMap<&Record, usize> = HashMap::new();
        let mut out: Vec<(Record, f64)> = Vec::new();
        for rec in &self.records {
            match index.get(rec) {
                Some(&i) => out[i].1 += 1.0,
                None => {
                    index.insert(rec, out.len());
                    out.push((rec.clone(), 1.0));
                }
            }
        }
        out
    }

    /// Checks that this dataset's schema matches `variables` exactly.
    pub fn check_schema(&self, variables: &[Variable]) -> Result<()> {
        if self.variables != variables {
            return Err(Error::SchemaMismatch("dataset columns differ from model variables".into()));
        }
        Ok(())
    }

    /// Same records, restricted to the given rows.
    pub fn subset(&self, rows: impl IntoIterator<Item = usize>) -> Dataset {
        Dataset {
            variables: self.variables.clone(),
            records: rows.into_iter().map(|r| self.records[r].clone()).collect(),
        }
    }

    /// Parses CSV against a known schema. Columns may appear in any order but
    /// must cover exactly the schema's variables.
    pub fn from_csv(text: &str, variables: &[Variable]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| Error::parse("row 1", e.to_string()))?.clone();
        let mut columns = Vec::with_capacity(header.len());
        for (col, name) in header.iter().enumerate() {
            let v = variables
                .iter()
                .position(|x| x.name == name)
                .ok_or_else(|| Error::parse(format!("row 1 column {}", col + 1), format!("unknown variable {name:?}")))?;
            if columns.contains(&v) {
                return Err(Error::parse(format!("row 1 column {}", col + 1), format!("duplicate column {name:?}")));
            }
            columns.push(v);
        }
        if columns.len() != variables.len() {
            return Err(Error::parse("row 1", format!("{} columns, expected {}", columns.len(), variables.len())));
        }
        let mut records = Vec::new();
        for (r, row) in reader.records().enumerate() {
            let line = r + 2;
            let row = row.map_err(|e| Error::parse(format!("row {line}"), e.to_string()))?;
            let mut rec = vec![None; variables.len()];
            for (col, cell) in row.iter().enumerate() {
                let v = columns[col];
                if cell == MISSING {
                    continue;
                }
                let s = variables[v].state_index(cell).ok_or_else(|| {
                    Error::parse(
                        format!("row {line} column {}", col + 1),
                        format!("unknown state {cell:?} for {}", variables[v].name),
                    )
                })?;
                rec[v] = Some(s);
            }
            records.push(rec);
        }
        Dataset::new(variables.to_vec(), records)
    }

    /// Parses CSV and infers the schema: each column's states are its distinct
    /// observed labels in sorted order.
    pub fn from_csv_inferred(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header: Vec<String> =
            reader.headers().map_err(|e| Error::parse("row 1", e.to_string()))?.iter().map(String::from).collect();
        let mut labels = vec![BTreeSet::new(); header.len()];
        let mut raw = Vec::new();
        for (r, row) in reader.records().enumerate() {
            let row = row.map_err(|e| Error::parse(format!("row {}", r + 2), e.to_string()))?;
            for (col, cell) in row.iter().enumerate() {
                if cell != MISSING {
                    labels[col].insert(cell.to_string());
                }
            }
            raw.push(row);
        }
        let variables: Vec<Variable> =
            header.iter().zip(labels).map(|(name, states)| Variable::new(name.clone(), states)).collect();
        validate_variables(&variables)?;
        let records = raw
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(col, cell)| if cell == MISSING { None } else { variables[col].state_index(cell) })
                    .collect()
            })
            .collect();
        Dataset::new(variables, records)
    }

    pub fn to_csv(&self) -> String {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(self.variables.iter().map(|v| v.name.as_str())).expect("in-memory write");
        for rec in &self.records {
            writer
                .write_record(rec.iter().enumerate().map(|(v, cell)| match cell {
                    Some(s) => self.variables[v].states[*s].as_str(),
                    None => MISSING,
                }))
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("flush")).expect("utf-8")
    }
}
