//! Human-readable rules, per-patient clause activations and clause importance.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::provenance::Provenance;
use crate::scalar::Real;
use crate::schema::{BitMeaning, FeatureKind, FeatureSchema, Label, LiteralVector};
use crate::tm::{Mode, Polarity, TsetlinMachine};

/// A clause rendered through the schema provenance map.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadableClause {
    pub id: usize,
    pub polarity: Polarity,
    /// Included literal indices, ascending.
    pub literals: Vec<usize>,
    /// One text per included literal, same order as `literals`.
    pub predicates: Vec<String>,
    /// Inference-mode firings on a reference dataset, when computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fire_count: Option<usize>,
}

impl ReadableClause {
    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    /// `IF a AND b THEN Recurrence`.
    pub fn render(&self) -> String {
        let outcome = self.polarity.votes_for();
        if self.is_empty() {
            format!("IF ⊤ THEN {outcome} (empty clause, never fires at inference)")
        } else {
            format!("IF {} THEN {outcome}", self.predicates.join(" AND "))
        }
    }

    /// Logically equivalent, shorter predicate list: thermometer literals of one
    /// feature collapse into a single bound or interval, and one-hot
    /// exclusions implied by an inclusion are dropped.
    pub fn condensed<F: Real>(&self, schema: &FeatureSchema<F>) -> Vec<String> {
        let b = schema.raw_bit_count();
        let mut out = Vec::new();
        for (f, spec) in schema.specs().iter().enumerate() {
            let start = schema.offset(f);
            let end = start + spec.width();
            let raw: Vec<usize> = self
                .literals
                .iter()
                .copied()
                .filter(|&l| l >= start && l < end)
                .collect();
            let neg: Vec<usize> = self
                .literals
                .iter()
                .filter(|&&l| l >= b)
                .map(|&l| l - b)
                .filter(|&l| l >= start && l < end)
                .collect();
            if raw.is_empty() && neg.is_empty() {
                continue;
            }
            match &spec.kind {
                FeatureKind::Continuous { unit, .. } => {
                    let cutoff = |bit: usize| match &schema.bit(bit).meaning {
                        BitMeaning::Above { cutoff } => *cutoff,
                        _ => unreachable!("continuous feature bits are thresholds"),
                    };
                    let lower = raw.iter().map(|&i| cutoff(i)).reduce(F::max);
                    let upper = neg.iter().map(|&i| cutoff(i)).reduce(F::min);
                    let unit = unit.as_deref().map(|u| format!(" {u}")).unwrap_or_default();
                    let name = &spec.name;
                    out.push(match (lower, upper) {
                        (Some(lo), Some(hi)) if lo >= hi => format!("⊥ ({name} > {lo} and ≤ {hi})"),
                        (Some(lo), Some(hi)) => format!("{lo} < {name} ≤ {hi}{unit}"),
                        (Some(lo), None) => format!("{name} > {lo}{unit}"),
                        (None, Some(hi)) => format!("{name} ≤ {hi}{unit}"),
                        (None, None) => unreachable!(),
                    });
                }
                FeatureKind::Categorical { .. } | FeatureKind::Binary => {
                    let contradictory = raw.len() > 1 || raw.iter().any(|r| neg.contains(r));
                    if contradictory {
                        out.push(format!("⊥ ({} contradiction)", spec.name));
                    } else if let Some(&r) = raw.first() {
                        out.push(schema.describe_literal(r).expect("in range"));
                    } else {
                        out.extend(neg.iter().map(|&n| schema.describe_literal(b + n).expect("in range")));
                    }
                }
            }
        }
        out
    }
}

/// One readable entry per clause, in clause order.
pub fn extract_rules<F: Real>(model: &TsetlinMachine<F>, schema: &FeatureSchema<F>) -> Result<Vec<ReadableClause>> {
    if !model.is_trained() {
        return Err(Error::Untrained);
    }
    model.check_schema(schema)?;
    let b = schema.raw_bit_count();
    model
        .clauses()
        .iter()
        .enumerate()
        .map(|(id, clause)| {
            let literals = clause.included_literals();
            let predicates = literals
                .iter()
                .map(|&l| {
                    let bit = if l < b { l } else { l - b };
                    schema.provenance(bit).ok_or(Error::ProvenanceGap(bit))?;
                    schema.describe_literal(l).ok_or(Error::ProvenanceGap(bit))
                })
                .collect::<Result<_>>()?;
            Ok(ReadableClause {
                id,
                polarity: clause.polarity(),
                literals,
                predicates,
                fire_count: None,
            })
        })
        .collect()
}

/// Patients × clauses firing record at inference, with true and predicted labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseActivationMatrix {
    pub cells: Vec<Vec<bool>>,
    pub true_labels: Vec<Label>,
    pub predicted: Vec<Label>,
    pub clause_count: usize,
}

impl ClauseActivationMatrix {
    pub fn patients(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// How often each clause fires over all patients.
    pub fn fire_counts(&self) -> Vec<usize> {
        (0..self.clause_count)
            .map(|c| self.cells.iter().filter(|row| row[c]).count())
            .collect()
    }
}

pub fn activation_matrix<F: Real>(
    model: &TsetlinMachine<F>,
    data: &[(LiteralVector, Label)],
) -> Result<ClauseActivationMatrix> {
    let mut matrix = ClauseActivationMatrix {
        cells: Vec::with_capacity(data.len()),
        true_labels: Vec::with_capacity(data.len()),
        predicted: Vec::with_capacity(data.len()),
        clause_count: model.clauses().len(),
    };
    for (x, y) in data {
        matrix.cells.push(model.clause_outputs(x)?);
        matrix.true_labels.push(*y);
        matrix.predicted.push(model.predict(x)?);
    }
    Ok(matrix)
}

/// Fills `fire_count` of every rule from an activation matrix.
pub fn attach_fire_counts(rules: &mut [ReadableClause], matrix: &ClauseActivationMatrix) {
    let counts = matrix.fire_counts();
    for rule in rules {
        rule.fire_count = counts.get(rule.id).copied();
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct ClauseImportance<F> {
    pub clause: usize,
    /// Fire rate among patients whose true label is recurrence.
    pub positive_rate: F,
    /// Fire rate among patients whose true label is no recurrence.
    pub negative_rate: F,
    /// `positive_rate - negative_rate`.
    pub importance: F,
}

/// Importance of every clause, ranked by descending `|importance|`, ties by clause id.
pub fn clause_importance<F: Real>(matrix: &ClauseActivationMatrix) -> Result<Vec<ClauseImportance<F>>> {
    let positives = matrix.true_labels.iter().filter(|l| l.is_positive()).count();
    let negatives = matrix.patients() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass(
            "clause importance needs patients of both classes".into(),
        ));
    }
    let mut ranked: Vec<ClauseImportance<F>> = (0..matrix.clause_count)
        .map(|c| {
            let mut fired = [0usize; 2];
            for (row, label) in matrix.cells.iter().zip(&matrix.true_labels) {
                if row[c] {
                    fired[label.index()] += 1;
                }
            }
            let positive_rate = F::ratio(fired[1], positives);
            let negative_rate = F::ratio(fired[0], negatives);
            ClauseImportance {
                clause: c,
                positive_rate,
                negative_rate,
                importance: positive_rate - negative_rate,
            }
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.importance
            .abs()
            .partial_cmp(&a.importance.abs())
            .expect("rates are finite")
            .then(a.clause.cmp(&b.clause))
    });
    Ok(ranked)
}

#[derive(Serialize)]
#[serde(bound = "F: Real")]
struct LegendEntry<'a, F> {
    rank: usize,
    clause: usize,
    column: String,
    polarity: Polarity,
    rule: String,
    predicates: &'a [String],
    importance: F,
    positive_rate: F,
    negative_rate: F,
}

#[derive(Serialize)]
#[serde(bound = "F: Real")]
struct Legend<'a, F> {
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<&'a Provenance>,
    clauses: Vec<LegendEntry<'a, F>>,
}

/// Writes the heatmap CSV and its clause legend JSON.
///
/// CSV rows hold one patient each: true label, predicted label, then the
/// firing bits of the `top_k` most important clauses.
pub fn export_heatmap_data<F: Real>(
    matrix: &ClauseActivationMatrix,
    rules: &[ReadableClause],
    top_k: usize,
    csv_path: &Path,
    legend_path: &Path,
    provenance: Option<&Provenance>,
) -> Result<()> {
    if top_k == 0 {
        return Err(Error::InvalidParams("top_k must be at least 1".into()));
    }
    if matrix.is_empty() {
        return Err(Error::EmptyData);
    }
    let ranked = clause_importance::<F>(matrix)?;
    let top = &ranked[..top_k.min(ranked.len())];

    let mut out = std::io::BufWriter::new(std::fs::File::create(csv_path)?);
    if let Some(p) = provenance {
        out.write_all(p.csv_comment().as_bytes())?;
    }
    writeln!(
        out,
        "# columns: true_label, predicted_label (1 = recurrence), then one 0/1 firing column \
         per clause C<id>, ordered by descending |importance|"
    )?;
    let mut header = vec!["true_label".to_owned(), "predicted_label".to_owned()];
    header.extend(top.iter().map(|t| format!("C{}", t.clause)));
    writeln!(out, "{}", header.join(","))?;
    for (p, row) in matrix.cells.iter().enumerate() {
        let mut cells = vec![
            matrix.true_labels[p].as_digit(),
            matrix.predicted[p].as_digit(),
        ];
        cells.extend(top.iter().map(|t| if row[t.clause] { "1" } else { "0" }));
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;

    let legend = Legend {
        provenance,
        clauses: top
            .iter()
            .enumerate()
            .map(|(rank, t)| {
                let rule = rules
                    .iter()
                    .find(|r| r.id == t.clause)
                    .ok_or_else(|| Error::InvalidParams(format!("no readable rule for clause {}", t.clause)))?;
                Ok(LegendEntry {
                    rank: rank + 1,
                    clause: t.clause,
                    column: format!("C{}", t.clause),
                    polarity: rule.polarity,
                    rule: rule.render(),
                    predicates: &rule.predicates,
                    importance: t.importance,
                    positive_rate: t.positive_rate,
                    negative_rate: t.negative_rate,
                })
            })
            .collect::<Result<_>>()?,
    };
    let mut text = serde_json::to_string_pretty(&legend)?;
    text.push('\n');
    std::fs::write(legend_path, text)?;
    Ok(())
}

/// Why the model decided what it did for one patient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatientExplanation {
    pub class_sum: i32,
    pub prediction: Label,
    pub fired: Vec<ReadableClause>,
}

impl PatientExplanation {
    pub fn render(&self) -> String {
        let mut out = format!(
            "prediction: {} (class sum {:+})\nfired clauses: {}\n",
            self.prediction,
            self.class_sum,
            self.fired.len()
        );
        for rule in &self.fired {
            out.push_str(&format!("  C{}: {}\n", rule.id, rule.render()));
        }
        out
    }
}

pub fn explain_patient<F: Real>(
    model: &TsetlinMachine<F>,
    rules: &[ReadableClause],
    x: &LiteralVector,
) -> Result<PatientExplanation> {
    let outputs = model.clause_outputs(x)?;
    Ok(PatientExplanation {
        class_sum: model.class_sum(x, Mode::Infer)?,
        prediction: model.predict(x)?,
        fired: rules
            .iter()
            .filter(|r| outputs.get(r.id).copied().unwrap_or(false))
            .cloned()
            .collect(),
    })
}
