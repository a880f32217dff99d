use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::schema::Label;

/// Counts with recurrence as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn from_predictions(preds: &[Label], labels: &[Label]) -> Result<Self> {
        if preds.len() != labels.len() {
            return Err(Error::LengthMismatch { expected: labels.len(), actual: preds.len() });
        }
        let mut m = ConfusionMatrix::default();
        for (p, y) in preds.iter().zip(labels) {
            match (p.is_positive(), y.is_positive()) {
                (true, true) => m.tp += 1,
                (true, false) => m.fp += 1,
                (false, false) => m.tn += 1,
                (false, true) => m.fn_ += 1,
            }
        }
        Ok(m)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Non-negative count ratio; a zero denominator reads as `0/1`.
#[derive(Clone, Copy)]
struct Ratio {
    num: u128,
    den: u128,
}

impl Ratio {
    fn new(num: usize, den: usize) -> Self {
        if den == 0 {
            Ratio { num: 0, den: 1 }
        } else {
            Ratio { num: num as u128, den: den as u128 }
        }
    }

    /// Exact mean of two ratios.
    fn mean(self, other: Ratio) -> Ratio {
        Ratio {
            num: self.num * other.den + other.num * self.den,
            den: 2 * self.den * other.den,
        }
    }

    /// Nearest representable value, rounded once.
    fn value<F: Real>(self) -> F {
        let g = gcd(self.num, self.den);
        F::of((self.num / g) as f64) / F::of((self.den / g) as f64)
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct ClassMetrics<F> {
    pub precision: F,
    pub recall: F,
    pub f1: F,
}

struct ClassRatios {
    precision: Ratio,
    recall: Ratio,
    f1: Ratio,
}

impl ClassRatios {
    fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        ClassRatios {
            precision: Ratio::new(tp, tp + fp),
            recall: Ratio::new(tp, tp + fn_),
            f1: Ratio::new(2 * tp, 2 * tp + fp + fn_),
        }
    }

    fn value<F: Real>(&self) -> ClassMetrics<F> {
        ClassMetrics {
            precision: self.precision.value(),
            recall: self.recall.value(),
            f1: self.f1.value(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct MetricsReport<F> {
    pub confusion: ConfusionMatrix,
    pub accuracy: F,
    /// Recurrence treated as the positive class.
    pub recurrence: ClassMetrics<F>,
    /// No recurrence treated as the positive class.
    pub no_recurrence: ClassMetrics<F>,
    pub macro_precision: F,
    pub macro_recall: F,
    pub macro_f1: F,
}

/// Standard definitions with `0` for any zero denominator. Every value is
/// computed exactly from the counts and rounded once.
pub fn compute_metrics<F: Real>(preds: &[Label], labels: &[Label]) -> Result<MetricsReport<F>> {
    if labels.is_empty() {
        return Err(Error::EmptyData);
    }
    let c = ConfusionMatrix::from_predictions(preds, labels)?;
    let pos = ClassRatios::from_counts(c.tp, c.fp, c.fn_);
    let neg = ClassRatios::from_counts(c.tn, c.fn_, c.fp);
    Ok(MetricsReport {
        confusion: c,
        accuracy: Ratio::new(c.tp + c.tn, c.total()).value(),
        recurrence: pos.value(),
        no_recurrence: neg.value(),
        macro_precision: pos.precision.mean(neg.precision).value(),
        macro_recall: pos.recall.mean(neg.recall).value(),
        macro_f1: pos.f1.mean(neg.f1).value(),
    })
}
