//! Data files: CSV with a header naming the schema features and a `label` column.
//!
//! An optional `patient_id` column identifies rows; other columns are ignored
//! unless a baseline reads them. Lines starting with `#` are comments.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use crate::baselines::eortc::{EortcColumns, EortcExtras};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::schema::{
    binarize_dataset, format_value, FeatureSchema, Label, LiteralVector, PatientRecord,
};

pub const LABEL_COLUMN: &str = "label";
pub const ID_COLUMN: &str = "patient_id";

/// Patient records with identifiers and, optionally, EORTC factor columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<F> {
    pub ids: Vec<String>,
    pub records: Vec<PatientRecord<F>>,
    pub eortc: Option<Vec<EortcExtras>>,
}

impl<F: Real> Dataset<F> {
    pub fn new(records: Vec<PatientRecord<F>>) -> Self {
        Dataset {
            ids: (0..records.len()).map(|i| i.to_string()).collect(),
            records,
            eortc: None,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> Result<Vec<Label>> {
        self.records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.label
                    .ok_or_else(|| Error::InvalidLabel("missing".into()).at_record(i))
            })
            .collect()
    }

    pub fn binarize(&self, schema: &FeatureSchema<F>) -> Result<Vec<(LiteralVector, Label)>> {
        binarize_dataset(&self.records, schema)
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Dataset {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            eortc: self
                .eortc
                .as_ref()
                .map(|e| indices.iter().map(|&i| e[i].clone()).collect()),
        }
    }

    pub fn positive_fraction(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let pos = self
            .records
            .iter()
            .filter(|r| r.label == Some(Label::Recurrence))
            .count();
        pos as f64 / self.len() as f64
    }

    /// Reads a data file; feature columns are matched by name.
    pub fn read_csv(path: &Path, schema: &FeatureSchema<F>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(file, schema)
    }

    pub fn read_from<R: std::io::Read>(reader: R, schema: &FeatureSchema<F>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(reader);
        let header: HashMap<String, usize> = reader
            .headers()?
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_owned(), i))
            .collect();
        let columns = schema
            .specs()
            .iter()
            .map(|s| {
                header.get(&s.name).copied().ok_or_else(|| {
                    Error::InvalidSchema(format!("data file has no column for feature `{}`", s.name))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let label_col = header.get(LABEL_COLUMN).copied();
        let id_col = header.get(ID_COLUMN).copied();
        let mut data = Dataset {
            ids: Vec::new(),
            records: Vec::new(),
            eortc: None,
        };
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let cells: Vec<&str> = columns.iter().map(|&c| record.get(c).unwrap_or("")).collect();
            let label = match label_col.map(|c| record.get(c).unwrap_or("").trim()) {
                None | Some("") => None,
                Some(text) => Some(Label::parse(text).map_err(|e| e.at_record(row))?),
            };
            let parsed = PatientRecord::parse(schema, &cells, label).map_err(|e| e.at_record(row))?;
            data.ids.push(match id_col {
                Some(c) => record.get(c).unwrap_or("").to_owned(),
                None => row.to_string(),
            });
            data.records.push(parsed);
        }
        Ok(data)
    }

    /// Writes `patient_id`, the schema features, any EORTC columns, then `label`.
    pub fn write_csv<W: Write>(&self, out: W, schema: &FeatureSchema<F>, comment: &str) -> Result<()> {
        let mut out = out;
        out.write_all(comment.as_bytes())?;
        let mut writer = csv::Writer::from_writer(out);
        let mut header = vec![ID_COLUMN.to_owned()];
        header.extend(schema.specs().iter().map(|s| s.name.clone()));
        if self.eortc.is_some() {
            // tumour count is read from the schema feature of the same name
            let columns = EortcColumns::default();
            header.extend(columns.names()[1..].iter().map(|s| s.to_string()));
        }
        header.push(LABEL_COLUMN.to_owned());
        writer.write_record(&header)?;
        for (i, record) in self.records.iter().enumerate() {
            let mut row = vec![self.ids[i].clone()];
            row.extend(record.values.iter().map(format_value));
            if let Some(eortc) = &self.eortc {
                let f = &eortc[i];
                row.push(f.tumour_size_cm.to_string());
                row.push(f.prior_recurrence.code().to_owned());
                row.push(format!("{:?}", f.t_category));
                row.push(if f.cis { "1" } else { "0" }.to_owned());
                row.push(format!("{:?}", f.grade));
            }
            row.push(record.label.map(|l| l.as_digit().to_owned()).unwrap_or_default());
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    }
}
