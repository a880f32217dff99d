//! EORTC recurrence risk tables for non-muscle-invasive bladder cancer.
//!
//! Component points: tumour count 0/3/6, size 0/3, prior recurrence rate 0/2/4,
//! T category 0/1, concurrent CIS 0/1, grade 0/1/2. Score range 0..=17,
//! grouped as 0, 1–4, 5–9, 10–17.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::Label;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TumourCount {
    Single,
    TwoToSeven,
    EightOrMore,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TumourSize {
    Under3Cm,
    AtLeast3Cm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PriorRecurrence {
    Primary,
    AtMostOncePerYear,
    MoreThanOncePerYear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TCategory {
    Ta,
    T1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Grade {
    G1,
    G2,
    G3,
}

impl TumourCount {
    pub const ALL: [TumourCount; 3] = [Self::Single, Self::TwoToSeven, Self::EightOrMore];

    pub fn from_count(count: u32) -> Self {
        match count {
            0 | 1 => Self::Single,
            2..=7 => Self::TwoToSeven,
            _ => Self::EightOrMore,
        }
    }

    pub fn points(self) -> u8 {
        match self {
            Self::Single => 0,
            Self::TwoToSeven => 3,
            Self::EightOrMore => 6,
        }
    }
}

impl TumourSize {
    pub const ALL: [TumourSize; 2] = [Self::Under3Cm, Self::AtLeast3Cm];

    pub fn from_cm(cm: f64) -> Self {
        if cm < 3.0 {
            Self::Under3Cm
        } else {
            Self::AtLeast3Cm
        }
    }

    pub fn points(self) -> u8 {
        match self {
            Self::Under3Cm => 0,
            Self::AtLeast3Cm => 3,
        }
    }
}

impl PriorRecurrence {
    pub const ALL: [PriorRecurrence; 3] = [
        Self::Primary,
        Self::AtMostOncePerYear,
        Self::MoreThanOncePerYear,
    ];

    pub fn points(self) -> u8 {
        match self {
            Self::Primary => 0,
            Self::AtMostOncePerYear => 2,
            Self::MoreThanOncePerYear => 4,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Self::Primary => "primary",
            Self::AtMostOncePerYear => "le1",
            Self::MoreThanOncePerYear => "gt1",
        }
    }
}

impl TCategory {
    pub const ALL: [TCategory; 2] = [Self::Ta, Self::T1];

    pub fn points(self) -> u8 {
        match self {
            Self::Ta => 0,
            Self::T1 => 1,
        }
    }
}

impl Grade {
    pub const ALL: [Grade; 3] = [Self::G1, Self::G2, Self::G3];

    pub fn points(self) -> u8 {
        match self {
            Self::G1 => 0,
            Self::G2 => 1,
            Self::G3 => 2,
        }
    }
}

/// The six factors scored by the recurrence table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EortcFactors {
    pub tumour_count: TumourCount,
    pub size: TumourSize,
    pub prior_recurrence: PriorRecurrence,
    pub t_category: TCategory,
    pub cis: bool,
    pub grade: Grade,
}

impl EortcFactors {
    /// Every one of the 216 factor combinations.
    pub fn all() -> Vec<EortcFactors> {
        let mut out = Vec::with_capacity(216);
        for tumour_count in TumourCount::ALL {
            for size in TumourSize::ALL {
                for prior_recurrence in PriorRecurrence::ALL {
                    for t_category in TCategory::ALL {
                        for cis in [false, true] {
                            for grade in Grade::ALL {
                                out.push(EortcFactors {
                                    tumour_count,
                                    size,
                                    prior_recurrence,
                                    t_category,
                                    cis,
                                    grade,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Factor columns other than tumour count, which is usually a model feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EortcExtras {
    pub tumour_size_cm: f64,
    pub prior_recurrence: PriorRecurrence,
    pub t_category: TCategory,
    pub cis: bool,
    pub grade: Grade,
}

impl EortcExtras {
    pub fn with_count(&self, count: u32) -> EortcFactors {
        EortcFactors {
            tumour_count: TumourCount::from_count(count),
            size: TumourSize::from_cm(self.tumour_size_cm),
            prior_recurrence: self.prior_recurrence,
            t_category: self.t_category,
            cis: self.cis,
            grade: self.grade,
        }
    }
}

/// Recurrence risk group, ordered from lowest to highest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RiskGroup {
    /// Score 0.
    Low,
    /// Score 1–4.
    IntermediateLow,
    /// Score 5–9.
    IntermediateHigh,
    /// Score 10–17.
    High,
}

impl RiskGroup {
    pub const ALL: [RiskGroup; 4] = [
        Self::Low,
        Self::IntermediateLow,
        Self::IntermediateHigh,
        Self::High,
    ];

    pub fn from_score(score: u8) -> Self {
        match score {
            0 => Self::Low,
            1..=4 => Self::IntermediateLow,
            5..=9 => Self::IntermediateHigh,
            _ => Self::High,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Parses either a band (`0`, `1-4`, `5-9`, `10-17`) or a group index (`0`..`3`).
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "1-4" | "1" => Ok(Self::IntermediateLow),
            "5-9" | "2" => Ok(Self::IntermediateHigh),
            "10-17" | "3" => Ok(Self::High),
            "0" => Ok(Self::Low),
            other => Err(Error::Parse(format!("unknown EORTC risk group `{other}`"))),
        }
    }
}

impl fmt::Display for RiskGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Low => "0",
            Self::IntermediateLow => "1-4",
            Self::IntermediateHigh => "5-9",
            Self::High => "10-17",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EortcResult {
    pub score: u8,
    pub risk_group: RiskGroup,
}

pub const MAX_SCORE: u8 = 17;

/// Default operating point: predict recurrence from the 5–9 group upward.
pub const DEFAULT_THRESHOLD: RiskGroup = RiskGroup::IntermediateHigh;

pub fn eortc_recurrence_score(f: &EortcFactors) -> EortcResult {
    let score = f.tumour_count.points()
        + f.size.points()
        + f.prior_recurrence.points()
        + f.t_category.points()
        + u8::from(f.cis)
        + f.grade.points();
    EortcResult {
        score,
        risk_group: RiskGroup::from_score(score),
    }
}

pub fn eortc_predict(result: &EortcResult, threshold: RiskGroup) -> Label {
    Label::from_bool(result.risk_group >= threshold)
}

/// Data-file columns holding the EORTC factors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EortcColumns {
    /// Integer tumour count.
    pub tumour_count: String,
    /// Largest tumour diameter in cm.
    pub tumour_size_cm: String,
    /// `primary`, `le1` (at most one recurrence per year) or `gt1`.
    pub prior_recurrence: String,
    /// `Ta` or `T1`.
    pub t_category: String,
    /// `0`/`1`.
    pub cis: String,
    /// `G1`, `G2` or `G3`.
    pub grade: String,
}

impl Default for EortcColumns {
    fn default() -> Self {
        EortcColumns {
            tumour_count: "TumourNumber".into(),
            tumour_size_cm: "TumourSizeCm".into(),
            prior_recurrence: "PriorRecurrence".into(),
            t_category: "TCategory".into(),
            cis: "CIS".into(),
            grade: "Grade".into(),
        }
    }
}

impl EortcColumns {
    pub fn names(&self) -> [&str; 6] {
        [
            &self.tumour_count,
            &self.tumour_size_cm,
            &self.prior_recurrence,
            &self.t_category,
            &self.cis,
            &self.grade,
        ]
    }
}

/// Parses factors from the six mapped cells, in [`EortcColumns::names`] order.
pub fn parse_factors(cells: [&str; 6]) -> Result<EortcFactors> {
    let bad = |what: &str, v: &str| Error::Parse(format!("EORTC {what}: unrecognised value `{v}`"));
    let [count, size, prior, t, cis, grade] = cells.map(str::trim);
    let count: f64 = count.parse().map_err(|_| bad("tumour count", count))?;
    if !(count.is_finite() && count >= 0.0) {
        return Err(bad("tumour count", &count.to_string()));
    }
    let size_cm: f64 = size.parse().map_err(|_| bad("tumour size", size))?;
    if !size_cm.is_finite() {
        return Err(bad("tumour size", size));
    }
    let prior_recurrence = match prior.to_ascii_lowercase().as_str() {
        "primary" => PriorRecurrence::Primary,
        "le1" => PriorRecurrence::AtMostOncePerYear,
        "gt1" => PriorRecurrence::MoreThanOncePerYear,
        _ => return Err(bad("prior recurrence", prior)),
    };
    let t_category = match t.to_ascii_uppercase().as_str() {
        "TA" => TCategory::Ta,
        "T1" => TCategory::T1,
        _ => return Err(bad("T category", t)),
    };
    let cis = match cis.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => true,
        "0" | "false" | "no" => false,
        _ => return Err(bad("CIS", cis)),
    };
    let grade = match grade.to_ascii_uppercase().as_str() {
        "G1" => Grade::G1,
        "G2" => Grade::G2,
        "G3" => Grade::G3,
        _ => return Err(bad("grade", grade)),
    };
    Ok(EortcFactors {
        tumour_count: TumourCount::from_count(count as u32),
        size: TumourSize::from_cm(size_cm),
        prior_recurrence,
        t_category,
        cis,
        grade,
    })
}

/// Reads the EORTC factors of every data row.
pub fn read_factors(path: &Path, columns: &EortcColumns) -> Result<Vec<EortcFactors>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let header: HashMap<String, usize> = reader
        .headers()?
        .iter()
        .enumerate()
        .map(|(i, h)| (h.trim().to_owned(), i))
        .collect();
    let idx = columns.names().map(|name| {
        header
            .get(name)
            .copied()
            .ok_or_else(|| Error::Parse(format!("EORTC column `{name}` not found")))
    });
    let idx: Vec<usize> = idx.into_iter().collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let cell = |k: usize| record.get(idx[k]).unwrap_or("");
        let factors = parse_factors([cell(0), cell(1), cell(2), cell(3), cell(4), cell(5)])
            .map_err(|e| e.at_record(row))?;
        out.push(factors);
    }
    Ok(out)
}
