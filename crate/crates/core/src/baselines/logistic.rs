//! L2-regularised, class-weighted logistic regression on raw bits.
//!
//! The loss is
//! `(1/n) Σ c_y · [softplus(z) − y·z] + λ‖w‖²` with `z = w·x + b`;
//! the bias is not penalised.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::schema::{Label, LiteralVector};
use crate::tm::default_class_weights;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct LrParams<F> {
    /// `λ`.
    pub l2: F,
    pub learning_rate: F,
    pub iterations: usize,
    /// `[no recurrence, recurrence]`; `n / (2 n_c)` when absent.
    #[serde(default)]
    pub class_weights: Option<[F; 2]>,
}

impl<F: Real> Default for LrParams<F> {
    fn default() -> Self {
        LrParams {
            l2: F::of(0.01),
            learning_rate: F::of(0.1),
            iterations: 2000,
            class_weights: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct LrModel<F> {
    /// One weight per raw bit.
    pub weights: Vec<F>,
    pub bias: F,
    pub l2: F,
    pub class_weights: [F; 2],
    /// Step size in effect when training stopped (after any halving).
    pub learning_rate: F,
    pub iterations: usize,
    pub final_loss: F,
}

/// Training data flattened to dense raw-bit rows.
#[derive(Clone, Debug)]
pub struct LrObjective<F> {
    rows: Vec<Vec<F>>,
    targets: Vec<F>,
    sample_weights: Vec<F>,
    l2: F,
}

fn softplus<F: Real>(z: F) -> F {
    z.max(F::zero()) + (-z.abs()).exp().ln_1p()
}

pub fn sigmoid<F: Real>(z: F) -> F {
    if z >= F::zero() {
        F::one() / (F::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (F::one() + e)
    }
}

impl<F: Real> LrObjective<F> {
    pub fn new(data: &[(LiteralVector, Label)], l2: F, class_weights: [F; 2]) -> Result<Self> {
        let mut seen = [false; 2];
        for (_, y) in data {
            seen[y.index()] = true;
        }
        if data.is_empty() {
            return Err(Error::EmptyData);
        }
        if !(seen[0] && seen[1]) {
            return Err(Error::SingleClass("logistic regression needs both classes".into()));
        }
        let bits = data[0].0.raw_bit_count();
        let mut rows = Vec::with_capacity(data.len());
        for (x, _) in data {
            if x.raw_bit_count() != bits {
                return Err(Error::LengthMismatch { expected: bits, actual: x.raw_bit_count() });
            }
            rows.push(x.raw().map(|b| if b { F::one() } else { F::zero() }).collect());
        }
        Ok(LrObjective {
            rows,
            targets: data.iter().map(|(_, y)| if y.is_positive() { F::one() } else { F::zero() }).collect(),
            sample_weights: data.iter().map(|(_, y)| class_weights[y.index()]).collect(),
            l2,
        })
    }

    pub fn dimension(&self) -> usize {
        self.rows[0].len()
    }

    fn logit(row: &[F], weights: &[F], bias: F) -> F {
        row.iter().zip(weights).fold(bias, |acc, (&x, &w)| acc + x * w)
    }

    pub fn loss(&self, weights: &[F], bias: F) -> F {
        let n = F::of(self.rows.len() as f64);
        let data = self
            .rows
            .iter()
            .zip(&self.targets)
            .zip(&self.sample_weights)
            .fold(F::zero(), |acc, ((row, &y), &c)| {
                let z = Self::logit(row, weights, bias);
                acc + c * (softplus(z) - y * z)
            });
        let penalty = weights.iter().fold(F::zero(), |acc, &w| acc + w * w);
        data / n + self.l2 * penalty
    }

    /// Analytic gradient with respect to `(weights, bias)`.
    pub fn gradient(&self, weights: &[F], bias: F) -> (Vec<F>, F) {
        let n = F::of(self.rows.len() as f64);
        let mut gw = vec![F::zero(); weights.len()];
        let mut gb = F::zero();
        for ((row, &y), &c) in self.rows.iter().zip(&self.targets).zip(&self.sample_weights) {
            let r = c * (sigmoid(Self::logit(row, weights, bias)) - y);
            gb = gb + r;
            for (g, &x) in gw.iter_mut().zip(row) {
                *g = *g + r * x;
            }
        }
        let two = F::of(2.0);
        for (g, &w) in gw.iter_mut().zip(weights) {
            *g = *g / n + two * self.l2 * w;
        }
        (gw, gb / n)
    }
}

/// Full-batch gradient descent from zero. A step that raises the loss is
/// retried with half the learning rate, which is kept from then on.
pub fn lr_fit<F: Real>(data: &[(LiteralVector, Label)], params: &LrParams<F>) -> Result<LrModel<F>> {
    if !(params.l2 >= F::zero()) || !(params.learning_rate > F::zero()) {
        return Err(Error::InvalidParams("l2 must be ≥ 0 and learning rate > 0".into()));
    }
    let class_weights = params.class_weights.unwrap_or_else(|| default_class_weights(data));
    let objective = LrObjective::new(data, params.l2, class_weights)?;
    let mut weights = vec![F::zero(); objective.dimension()];
    let mut bias = F::zero();
    let mut lr = params.learning_rate;
    let mut loss = objective.loss(&weights, bias);
    for _ in 0..params.iterations {
        let (gw, gb) = objective.gradient(&weights, bias);
        let mut accepted = false;
        for _ in 0..60 {
            let trial_w: Vec<F> = weights.iter().zip(&gw).map(|(&w, &g)| w - lr * g).collect();
            let trial_b = bias - lr * gb;
            let trial_loss = objective.loss(&trial_w, trial_b);
            if trial_loss <= loss {
                weights = trial_w;
                bias = trial_b;
                loss = trial_loss;
                accepted = true;
                break;
            }
            lr = lr / F::of(2.0);
        }
        if !accepted {
            break;
        }
    }
    Ok(LrModel {
        weights,
        bias,
        l2: params.l2,
        class_weights,
        learning_rate: lr,
        iterations: params.iterations,
        final_loss: loss,
    })
}

/// Label by the 0.5 cutoff (0.5 itself is recurrence) and the probability of recurrence.
pub fn lr_predict<F: Real>(model: &LrModel<F>, x: &LiteralVector) -> Result<(Label, F)> {
    if x.raw_bit_count() != model.weights.len() {
        return Err(Error::LengthMismatch {
            expected: model.weights.len(),
            actual: x.raw_bit_count(),
        });
    }
    let z = x
        .raw()
        .zip(&model.weights)
        .fold(model.bias, |acc, (b, &w)| if b { acc + w } else { acc });
    let p = sigmoid(z);
    Ok((Label::from_bool(p >= F::of(0.5)), p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(bits: &[bool], y: u8) -> (LiteralVector, Label) {
        (LiteralVector::from_raw(bits), Label::from_bool(y == 1))
    }

    fn model(weights: Vec<f64>, bias: f64) -> LrModel<f64> {
        LrModel {
            weights,
            bias,
            l2: 0.0,
            class_weights: [1.0, 1.0],
            learning_rate: 0.1,
            iterations: 0,
            final_loss: 0.0,
        }
    }

    #[test]
    fn hand_evaluated_sigmoid() {
        let m = model(vec![0.7, -1.2], 0.3);
        let (label, p) = lr_predict(&m, &LiteralVector::from_raw(&[true, true])).unwrap();
        let z: f64 = 0.3 + 0.7 - 1.2;
        assert!((p - 1.0 / (1.0 + (-z).exp())).abs() < 1e-15);
        assert_eq!(label, Label::NoRecurrence);
        let (label, p) = lr_predict(&m, &LiteralVector::from_raw(&[true, false])).unwrap();
        assert!((p - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-15);
        assert_eq!(label, Label::Recurrence);
    }

    #[test]
    fn zero_model_is_a_coin() {
        let (label, p) = lr_predict(&model(vec![0.0; 3], 0.0), &LiteralVector::from_raw(&[true, false, true])).unwrap();
        assert_eq!(p, 0.5);
        assert_eq!(label, Label::Recurrence);
        let (_, p) = lr_predict(&model(vec![0.0; 3], 1e6), &LiteralVector::from_raw(&[false; 3])).unwrap();
        assert_eq!(p, 1.0);
        assert!(lr_predict(&model(vec![0.0; 2], 0.0), &LiteralVector::from_raw(&[true])).is_err());
    }

    #[test]
    fn separable_four_points() {
        let data = [
            point(&[true, false], 1),
            point(&[true, true], 1),
            point(&[false, true], 0),
            point(&[false, false], 0),
        ];
        let m = lr_fit(&data, &LrParams { l2: 0.0, ..LrParams::default() }).unwrap();
        for (x, y) in &data {
            assert_eq!(lr_predict(&m, x).unwrap().0, *y);
        }
    }

    #[test]
    fn heavy_penalty_collapses_to_tie_rule() {
        let data = [
            point(&[true, false], 1),
            point(&[true, true], 0),
            point(&[false, true], 0),
            point(&[false, false], 0),
        ];
        let m = lr_fit::<f64>(&data, &LrParams { l2: 1e6, ..LrParams::default() }).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-6));
        assert!(m.bias.abs() < 1e-9, "{}", m.bias);
        // class weighting balances the prior, so every patient sits at the 0.5 tie
        for (x, _) in &data {
            assert!((lr_predict(&m, x).unwrap().1 - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_single_class() {
        let data = [point(&[true], 1), point(&[false], 1)];
        assert!(matches!(lr_fit(&data, &LrParams::<f64>::default()), Err(Error::SingleClass(_))));
        assert!(matches!(lr_fit::<f64>(&[], &LrParams::default()), Err(Error::EmptyData)));
    }

    #[test]
    fn gradient_at_zero_matches_central_difference() {
        let data = [
            point(&[true, false, true], 1),
            point(&[true, true, false], 0),
            point(&[false, true, true], 1),
            point(&[false, false, false], 0),
            point(&[true, true, true], 0),
        ];
        let obj = LrObjective::<f64>::new(&data, 0.1, [0.8, 1.3]).unwrap();
        let w = [0.0f64; 3];
        let (gw, gb) = obj.gradient(&w, 0.0);
        let h = 1e-6;
        for i in 0..3 {
            let mut plus = w;
            let mut minus = w;
            plus[i] += h;
            minus[i] -= h;
            let fd = (obj.loss(&plus, 0.0) - obj.loss(&minus, 0.0)) / (2.0 * h);
            assert!((fd - gw[i]).abs() <= 1e-6 * gw[i].abs().max(1e-8), "{fd} vs {}", gw[i]);
        }
        let fd = (obj.loss(&w, h) - obj.loss(&w, -h)) / (2.0 * h);
        assert!((fd - gb).abs() <= 1e-6 * gb.abs().max(1e-8));
    }

    #[test]
    fn loss_never_rises() {
        let data = [
            point(&[true, false, true], 1),
            point(&[true, true, false], 0),
            point(&[false, true, true], 1),
            point(&[false, false, true], 0),
        ];
        let mut previous = f64::INFINITY;
        for iterations in [0, 1, 5, 20, 100] {
            let m = lr_fit(&data, &LrParams { iterations, learning_rate: 50.0, ..LrParams::default() }).unwrap();
            assert!(m.final_loss <= previous);
            previous = m.final_loss;
        }
    }
}
