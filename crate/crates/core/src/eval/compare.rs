use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, MetricsReport};
use crate::baselines::eortc::{eortc_predict, eortc_recurrence_score, EortcFactors, RiskGroup};
use crate::baselines::logistic::{lr_predict, LrModel};
use crate::error::{Error, Result};
use crate::provenance::Provenance;
use crate::scalar::Real;
use crate::schema::{Label, LiteralVector};
use crate::tm::TsetlinMachine;

/// Rows every model is scored on: binarized inputs plus optional EORTC factors.
#[derive(Clone, Debug, Default)]
pub struct EvalSet {
    pub ids: Vec<String>,
    pub rows: Vec<(LiteralVector, Label)>,
    pub eortc: Option<Vec<EortcFactors>>,
}

impl EvalSet {
    pub fn labels(&self) -> Vec<Label> {
        self.rows.iter().map(|(_, y)| *y).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct Prediction<F> {
    pub label: Label,
    /// Class sum, probability or risk score, depending on the model.
    pub score: Option<F>,
}

pub trait Predictor<F: Real> {
    fn name(&self) -> &str;
    fn predict_row(&self, set: &EvalSet, row: usize) -> Result<Prediction<F>>;
}

impl<F: Real> Predictor<F> for TsetlinMachine<F> {
    fn name(&self) -> &str {
        "TM"
    }

    fn predict_row(&self, set: &EvalSet, row: usize) -> Result<Prediction<F>> {
        let x = &set.rows[row].0;
        Ok(Prediction {
            label: self.predict(x)?,
            score: Some(F::of(self.class_sum(x, crate::tm::Mode::Infer)? as f64)),
        })
    }
}

impl<F: Real> Predictor<F> for LrModel<F> {
    fn name(&self) -> &str {
        "LR"
    }

    fn predict_row(&self, set: &EvalSet, row: usize) -> Result<Prediction<F>> {
        let (label, p) = lr_predict(self, &set.rows[row].0)?;
        Ok(Prediction { label, score: Some(p) })
    }
}

/// EORTC recurrence table used as a classifier at a risk-group threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EortcPredictor {
    pub threshold: RiskGroup,
}

impl<F: Real> Predictor<F> for EortcPredictor {
    fn name(&self) -> &str {
        "EORTC"
    }

    fn predict_row(&self, set: &EvalSet, row: usize) -> Result<Prediction<F>> {
        let factors = set
            .eortc
            .as_ref()
            .ok_or_else(|| Error::InvalidParams("the data has no EORTC factor columns".into()))?;
        let result = eortc_recurrence_score(&factors[row]);
        Ok(Prediction {
            label: eortc_predict(&result, self.threshold),
            score: Some(F::of(result.score as f64)),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct Evaluation<F> {
    pub model: String,
    pub metrics: MetricsReport<F>,
    pub predictions: Vec<Prediction<F>>,
}

pub fn evaluate_model<F: Real, P: Predictor<F> + ?Sized>(predictor: &P, set: &EvalSet) -> Result<Evaluation<F>> {
    let predictions = (0..set.rows.len())
        .map(|i| predictor.predict_row(set, i))
        .collect::<Result<Vec<_>>>()?;
    let preds: Vec<Label> = predictions.iter().map(|p| p.label).collect();
    Ok(Evaluation {
        model: predictor.name().to_owned(),
        metrics: compute_metrics(&preds, &set.labels())?,
        predictions,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct ComparisonRow<F> {
    pub model: String,
    pub precision: F,
    pub recall: F,
    pub f1: F,
    pub accuracy: F,
}

/// One macro-averaged row per model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct ComparisonTable<F> {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    pub rows: Vec<ComparisonRow<F>>,
}

impl<F: Real> ComparisonTable<F> {
    pub fn new(evaluations: &[Evaluation<F>], provenance: Option<Provenance>) -> Self {
        ComparisonTable {
            provenance,
            rows: evaluations
                .iter()
                .map(|e| ComparisonRow {
                    model: e.model.clone(),
                    precision: e.metrics.macro_precision,
                    recall: e.metrics.macro_recall,
                    f1: e.metrics.macro_f1,
                    accuracy: e.metrics.accuracy,
                })
                .collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.provenance.as_ref().map(Provenance::csv_comment).unwrap_or_default();
        out.push_str("model,precision,recall,f1,accuracy\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.4},{:.4},{:.4},{:.4}\n",
                r.model,
                r.precision.as_f64(),
                r.recall.as_f64(),
                r.f1.as_f64(),
                r.accuracy.as_f64()
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("table serializes");
        text.push('\n');
        text
    }
}

/// `patient_id,model,label,score` rows for every evaluation.
pub fn predictions_csv<F: Real>(set: &EvalSet, evaluations: &[Evaluation<F>], provenance: Option<&Provenance>) -> String {
    let mut out = provenance.map(Provenance::csv_comment).unwrap_or_default();
    out.push_str("patient_id,model,label,score\n");
    for e in evaluations {
        for (id, p) in set.ids.iter().zip(&e.predictions) {
            let score = p.score.map(|s| s.to_string()).unwrap_or_default();
            out.push_str(&format!("{id},{},{},{score}\n", e.model, p.label.as_digit()));
        }
    }
    out
}
