//! Feature schema and binarization.
//!
//! Raw patient records are turned into literal vectors of length `2B`: the
//! `B` raw bits produced by thermometer, one-hot and binary encodings, followed
//! by their `B` negations.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Outcome of the primary endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    NoRecurrence,
    Recurrence,
}

impl Label {
    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Label::Recurrence
        } else {
            Label::NoRecurrence
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Recurrence
    }

    /// Index used for per-class arrays: 0 = no recurrence, 1 = recurrence.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn flip(self) -> Self {
        Label::from_bool(!self.is_positive())
    }

    /// Parses the `0`/`1` encoding used in data files.
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "1" => Ok(Label::Recurrence),
            "0" => Ok(Label::NoRecurrence),
            other => Err(Error::InvalidLabel(other.to_owned())),
        }
    }

    pub fn as_digit(self) -> &'static str {
        if self.is_positive() {
            "1"
        } else {
            "0"
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Recurrence => "Recurrence",
            Label::NoRecurrence => "No Recurrence",
        })
    }
}

/// How a feature is encoded into raw bits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "F: Real")]
pub enum FeatureKind<F> {
    /// Thermometer encoded: one bit per cut-off, set iff `value > cutoff`.
    Continuous {
        cutoffs: Vec<F>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        unit: Option<String>,
        /// Alternative cut-off ladders, selectable by length when tuning `n_bins`.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        ladders: Vec<Vec<F>>,
    },
    /// One-hot encoded over the declared categories.
    Categorical { categories: Vec<String> },
    Binary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct FeatureSpec<F> {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind<F>,
}

impl<F: Real> FeatureSpec<F> {
    pub fn continuous(name: &str, cutoffs: &[f64], unit: Option<&str>) -> Self {
        FeatureSpec {
            name: name.to_owned(),
            kind: FeatureKind::Continuous {
                cutoffs: cutoffs.iter().map(|&c| F::of(c)).collect(),
                unit: unit.map(str::to_owned),
                ladders: Vec::new(),
            },
        }
    }

    pub fn categorical(name: &str, categories: &[&str]) -> Self {
        FeatureSpec {
            name: name.to_owned(),
            kind: FeatureKind::Categorical {
                categories: categories.iter().map(|&c| c.to_owned()).collect(),
            },
        }
    }

    pub fn binary(name: &str) -> Self {
        FeatureSpec {
            name: name.to_owned(),
            kind: FeatureKind::Binary,
        }
    }

    /// Adds alternative cut-off ladders to a continuous feature.
    pub fn with_ladders(mut self, extra: &[&[f64]]) -> Self {
        if let FeatureKind::Continuous { ladders, .. } = &mut self.kind {
            ladders.extend(extra.iter().map(|l| l.iter().map(|&c| F::of(c)).collect()));
        }
        self
    }

    /// Number of raw bits this feature contributes.
    pub fn width(&self) -> usize {
        match &self.kind {
            FeatureKind::Continuous { cutoffs, .. } => cutoffs.len(),
            FeatureKind::Categorical { categories } => categories.len(),
            FeatureKind::Binary => 1,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSchema(format!("feature `{}`: {msg}", self.name)));
        if self.name.trim().is_empty() {
            return Err(Error::InvalidSchema("feature with empty name".into()));
        }
        match &self.kind {
            FeatureKind::Continuous {
                cutoffs, ladders, ..
            } => {
                for ladder in std::iter::once(cutoffs).chain(ladders) {
                    if ladder.is_empty() {
                        return bad("cutoffs must be non-empty".into());
                    }
                    if ladder.iter().any(|c| !c.is_finite()) {
                        return bad("cutoffs must be finite".into());
                    }
                    if ladder.windows(2).any(|w| w[0] >= w[1]) {
                        return bad("cutoffs must be strictly ascending".into());
                    }
                }
            }
            FeatureKind::Categorical { categories } => {
                if categories.is_empty() {
                    return bad("categories must be non-empty".into());
                }
                for (i, c) in categories.iter().enumerate() {
                    if categories[..i].contains(c) {
                        return bad(format!("duplicate category `{c}`"));
                    }
                }
            }
            FeatureKind::Binary => {}
        }
        Ok(())
    }
}

/// What a single raw bit asserts about a record.
#[derive(Clone, Debug, PartialEq)]
pub enum BitMeaning<F> {
    Above { cutoff: F },
    Is { category: String },
    Flag,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BitInfo<F> {
    pub feature: usize,
    pub meaning: BitMeaning<F>,
}

/// Ordered feature specs plus the raw-bit provenance map.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSchema<F> {
    specs: Vec<FeatureSpec<F>>,
    offsets: Vec<usize>,
    bits: Vec<BitInfo<F>>,
    provenance: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "F: Real")]
struct SchemaDocument<F> {
    features: Vec<FeatureSpec<F>>,
}

impl<F: Real> FeatureSchema<F> {
    pub fn new(specs: Vec<FeatureSpec<F>>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidSchema("schema has no features".into()));
        }
        for (i, spec) in specs.iter().enumerate() {
            spec.validate()?;
            if specs[..i].iter().any(|s| s.name == spec.name) {
                return Err(Error::InvalidSchema(format!(
                    "duplicate feature name `{}`",
                    spec.name
                )));
            }
        }
        let mut offsets = Vec::with_capacity(specs.len());
        let mut bits = Vec::new();
        for (feature, spec) in specs.iter().enumerate() {
            offsets.push(bits.len());
            match &spec.kind {
                FeatureKind::Continuous { cutoffs, .. } => {
                    bits.extend(cutoffs.iter().map(|&cutoff| BitInfo {
                        feature,
                        meaning: BitMeaning::Above { cutoff },
                    }))
                }
                FeatureKind::Categorical { categories } => {
                    bits.extend(categories.iter().map(|c| BitInfo {
                        feature,
                        meaning: BitMeaning::Is {
                            category: c.clone(),
                        },
                    }))
                }
                FeatureKind::Binary => bits.push(BitInfo {
                    feature,
                    meaning: BitMeaning::Flag,
                }),
            }
        }
        let mut schema = FeatureSchema {
            specs,
            offsets,
            bits,
            provenance: Vec::new(),
        };
        schema.provenance = (0..schema.bits.len())
            .map(|i| schema.render_bit(i, false))
            .collect();
        for (i, text) in schema.provenance.iter().enumerate() {
            if schema.provenance[..i].contains(text) {
                return Err(Error::InvalidSchema(format!(
                    "two raw bits render as `{text}`"
                )));
            }
        }
        Ok(schema)
    }

    /// Default illustrative schema shaped like the NMIBC recurrence cohort.
    ///
    /// Cut-offs are scaffolding, not clinical claims.
    pub fn photo_like() -> Self {
        FeatureSchema::new(vec![
            FeatureSpec::continuous("HospitalStay", &[1.0, 3.0, 7.0], Some("days"))
                .with_ladders(&[&[3.0], &[1.0, 2.0, 3.0, 7.0, 14.0]]),
            FeatureSpec::continuous("TumourNumber", &[1.0, 3.0, 7.0], None)
                .with_ladders(&[&[3.0], &[1.0, 2.0, 3.0, 5.0, 7.0]]),
            FeatureSpec::continuous("EQ5DScore", &[0.41, 0.49, 0.76], None)
                .with_ladders(&[&[0.49], &[0.41, 0.49, 0.6, 0.76, 0.9]]),
            FeatureSpec::categorical("SurgeonGrade", &["Consultant", "Registrar", "Other"]),
            FeatureSpec::categorical("SmokingStatus", &["never", "former", "current"]),
        ])
        .expect("built-in schema is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SchemaDocument<F> = serde_json::from_str(text)?;
        FeatureSchema::new(doc.features)
    }

    pub fn to_json(&self) -> String {
        let doc = SchemaDocument {
            features: self.specs.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("schema serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn specs(&self) -> &[FeatureSpec<F>] {
        &self.specs
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.name == name)
    }

    /// `B`, the number of raw bits.
    pub fn raw_bit_count(&self) -> usize {
        self.bits.len()
    }

    /// `2B`, the length of every literal vector.
    pub fn literal_count(&self) -> usize {
        2 * self.bits.len()
    }

    /// First raw bit of the given feature.
    pub fn offset(&self, feature: usize) -> usize {
        self.offsets[feature]
    }

    pub fn bit(&self, index: usize) -> &BitInfo<F> {
        &self.bits[index]
    }

    /// Raw-bit provenance text, e.g. `HospitalStay > 3 days`.
    pub fn provenance(&self, bit: usize) -> Option<&str> {
        self.provenance.get(bit).map(String::as_str)
    }

    /// Human-readable text for literal `index` in `[0, 2B)`.
    pub fn describe_literal(&self, index: usize) -> Option<String> {
        let b = self.raw_bit_count();
        if index < b {
            Some(self.provenance[index].clone())
        } else if index < 2 * b {
            Some(self.render_bit(index - b, true))
        } else {
            None
        }
    }

    /// Inverse of [`describe_literal`](Self::describe_literal).
    pub fn parse_literal(&self, text: &str) -> Option<usize> {
        (0..self.literal_count()).find(|&i| self.describe_literal(i).as_deref() == Some(text))
    }

    fn render_bit(&self, bit: usize, negated: bool) -> String {
        let info = &self.bits[bit];
        let spec = &self.specs[info.feature];
        match &info.meaning {
            BitMeaning::Above { cutoff } => {
                let op = if negated { "≤" } else { ">" };
                let unit = match &spec.kind {
                    FeatureKind::Continuous { unit: Some(u), .. } => format!(" {u}"),
                    _ => String::new(),
                };
                format!("{} {op} {cutoff}{unit}", spec.name)
            }
            BitMeaning::Is { category } => {
                let op = if negated { "≠" } else { "=" };
                format!("{} {op} {category}", spec.name)
            }
            BitMeaning::Flag => {
                if negated {
                    format!("NOT {}", spec.name)
                } else {
                    spec.name.clone()
                }
            }
        }
    }

    /// Short stable identifier of the schema contents.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        hex::encode(&digest[..8])
    }

    /// Variant of this schema where every continuous feature with a declared
    /// ladder splitting it into `n_bins` intervals (`n_bins - 1` cut-offs) uses
    /// that ladder. Other features keep their cut-offs.
    pub fn with_bins(&self, n_bins: usize) -> Result<Self> {
        if n_bins < 2 {
            return Err(Error::InvalidParams("n_bins must be at least 2".into()));
        }
        let specs = self
            .specs
            .iter()
            .map(|spec| {
                let mut spec = spec.clone();
                if let FeatureKind::Continuous {
                    cutoffs, ladders, ..
                } = &mut spec.kind
                {
                    if let Some(ladder) = ladders.iter().find(|l| l.len() + 1 == n_bins) {
                        *cutoffs = ladder.clone();
                    }
                }
                spec
            })
            .collect();
        FeatureSchema::new(specs)
    }
}

/// A raw feature value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, bound = "F: Real")]
pub enum FeatureValue<F> {
    Real(F),
    Flag(bool),
    Category(String),
}

/// One patient: a value per schema feature, in schema order, plus an optional label.
#[derive(Clone, Debug, PartialEq)]
pub struct PatientRecord<F> {
    pub values: Vec<FeatureValue<F>>,
    pub label: Option<Label>,
}

impl<F: Real> PatientRecord<F> {
    pub fn new(values: Vec<FeatureValue<F>>, label: Option<Label>) -> Self {
        PatientRecord { values, label }
    }

    /// Parses one value per feature from text cells, in schema order.
    pub fn parse(schema: &FeatureSchema<F>, cells: &[&str], label: Option<Label>) -> Result<Self> {
        if cells.len() != schema.specs().len() {
            return Err(Error::LengthMismatch {
                expected: schema.specs().len(),
                actual: cells.len(),
            });
        }
        let values = schema
            .specs()
            .iter()
            .zip(cells)
            .map(|(spec, cell)| parse_value(spec, cell))
            .collect::<Result<_>>()?;
        Ok(PatientRecord { values, label })
    }
}

fn parse_value<F: Real>(spec: &FeatureSpec<F>, cell: &str) -> Result<FeatureValue<F>> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Err(Error::MissingValue(spec.name.clone()));
    }
    match &spec.kind {
        FeatureKind::Continuous { .. } => cell
            .parse::<f64>()
            .map(|v| FeatureValue::Real(F::of(v)))
            .map_err(|_| Error::Parse(format!("feature `{}`: `{cell}` is not a number", spec.name))),
        FeatureKind::Categorical { categories } => {
            if categories.iter().any(|c| c == cell) {
                Ok(FeatureValue::Category(cell.to_owned()))
            } else {
                Err(Error::UnknownCategory {
                    feature: spec.name.clone(),
                    value: cell.to_owned(),
                })
            }
        }
        FeatureKind::Binary => match cell.to_ascii_lowercase().as_str() {
            "1" | "true" | "yes" => Ok(FeatureValue::Flag(true)),
            "0" | "false" | "no" => Ok(FeatureValue::Flag(false)),
            _ => Err(Error::Parse(format!(
                "feature `{}`: `{cell}` is not a truth value",
                spec.name
            ))),
        },
    }
}

/// Text form of a value, as written to data files.
pub fn format_value<F: Real>(value: &FeatureValue<F>) -> String {
    match value {
        FeatureValue::Real(v) => v.to_string(),
        FeatureValue::Flag(b) => (if *b { "1" } else { "0" }).to_owned(),
        FeatureValue::Category(c) => c.clone(),
    }
}

/// Packed boolean input of length `2B`: raw bits then their negations.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LiteralVector {
    words: Vec<u64>,
    raw_bits: usize,
}

impl LiteralVector {
    /// Builds the vector from raw bits, appending the negations.
    pub fn from_raw(raw: &[bool]) -> Self {
        let b = raw.len();
        let mut words = vec![0u64; (2 * b).div_ceil(64)];
        for (i, &bit) in raw.iter().enumerate() {
            let neg = b + i;
            if bit {
                words[i / 64] |= 1 << (i % 64);
            } else {
                words[neg / 64] |= 1 << (neg % 64);
            }
        }
        LiteralVector { words, raw_bits: b }
    }

    /// Total number of literals, `2B`.
    pub fn len(&self) -> usize {
        2 * self.raw_bits
    }

    pub fn is_empty(&self) -> bool {
        self.raw_bits == 0
    }

    pub fn raw_bit_count(&self) -> usize {
        self.raw_bits
    }

    #[inline]
    pub fn get(&self, index: usize) -> bool {
        debug_assert!(index < self.len());
        self.words[index / 64] >> (index % 64) & 1 == 1
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn raw(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.raw_bits).map(|i| self.get(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }

    pub fn to_bools(&self) -> Vec<bool> {
        self.iter().collect()
    }
}

/// Thermometer code: bit `i` is set iff `value > cutoffs[i]`.
pub fn thermometer_encode<F: Real>(value: F, cutoffs: &[F]) -> Result<Vec<bool>> {
    if !value.is_finite() {
        return Err(Error::NonFinite {
            feature: String::new(),
            value: value.to_string(),
        });
    }
    if cutoffs.is_empty() || cutoffs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSchema(
            "cutoffs must be non-empty and strictly ascending".into(),
        ));
    }
    Ok(cutoffs.iter().map(|&c| value > c).collect())
}

/// One-hot code over `categories`.
pub fn one_hot_encode(value: &str, categories: &[String]) -> Result<Vec<bool>> {
    if !categories.iter().any(|c| c == value) {
        return Err(Error::UnknownCategory {
            feature: String::new(),
            value: value.to_owned(),
        });
    }
    Ok(categories.iter().map(|c| c == value).collect())
}

fn name_feature(err: Error, name: &str) -> Error {
    match err {
        Error::NonFinite { value, .. } => Error::NonFinite {
            feature: name.to_owned(),
            value,
        },
        Error::UnknownCategory { value, .. } => Error::UnknownCategory {
            feature: name.to_owned(),
            value,
        },
        Error::InvalidSchema(msg) => Error::InvalidSchema(format!("feature `{name}`: {msg}")),
        other => other,
    }
}

/// Raw bits (length `B`) of a record.
pub fn encode_raw<F: Real>(record: &PatientRecord<F>, schema: &FeatureSchema<F>) -> Result<Vec<bool>> {
    if record.values.len() != schema.specs().len() {
        return Err(Error::LengthMismatch {
            expected: schema.specs().len(),
            actual: record.values.len(),
        });
    }
    let mut raw = Vec::with_capacity(schema.raw_bit_count());
    for (spec, value) in schema.specs().iter().zip(&record.values) {
        let bits = match (&spec.kind, value) {
            (FeatureKind::Continuous { cutoffs, .. }, FeatureValue::Real(v)) => {
                thermometer_encode(*v, cutoffs)
            }
            (FeatureKind::Categorical { categories }, FeatureValue::Category(c)) => {
                one_hot_encode(c, categories)
            }
            (FeatureKind::Binary, FeatureValue::Flag(b)) => Ok(vec![*b]),
            (kind, _) => Err(Error::WrongKind {
                feature: spec.name.clone(),
                expected: match kind {
                    FeatureKind::Continuous { .. } => "a real number",
                    FeatureKind::Categorical { .. } => "a category label",
                    FeatureKind::Binary => "a truth value",
                },
            }),
        }
        .map_err(|e| name_feature(e, &spec.name))?;
        raw.extend(bits);
    }
    Ok(raw)
}

pub fn binarize_record<F: Real>(
    record: &PatientRecord<F>,
    schema: &FeatureSchema<F>,
) -> Result<LiteralVector> {
    encode_raw(record, schema).map(|raw| LiteralVector::from_raw(&raw))
}

/// Binarizes labelled records, preserving order. Fails on the first bad record.
pub fn binarize_dataset<F: Real>(
    records: &[PatientRecord<F>],
    schema: &FeatureSchema<F>,
) -> Result<Vec<(LiteralVector, Label)>> {
    records
        .iter()
        .enumerate()
        .map(|(i, record)| {
            let x = binarize_record(record, schema).map_err(|e| e.at_record(i))?;
            let label = record
                .label
                .ok_or_else(|| Error::InvalidLabel("missing".into()).at_record(i))?;
            Ok((x, label))
        })
        .collect()
}
