use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::clause::{Clause, Mode, Polarity};
use crate::error::{Error, Result};
use crate::provenance::Provenance;
use crate::scalar::Real;
use crate::schema::{FeatureSchema, Label, LiteralVector};

/// Seed used whenever none is given.
pub const DEFAULT_SEED: u64 = 42;

/// Hyperparameters of a two-polarity Tsetlin Machine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct TmParams<F> {
    /// Total clauses, half of each polarity.
    pub num_clauses: usize,
    /// Voting threshold `T`.
    pub threshold: u32,
    /// Specificity `s`.
    pub specificity: F,
    pub epochs: usize,
    /// `N`; automata have `2N` states.
    pub states_per_action: u16,
    /// Per-class weights `[no recurrence, recurrence]`; derived from the
    /// training split when absent.
    #[serde(default)]
    pub class_weights: Option<[F; 2]>,
    pub seed: u64,
}

impl<F: Real> Default for TmParams<F> {
    fn default() -> Self {
        TmParams {
            num_clauses: 80,
            threshold: 38,
            specificity: F::of(4.0),
            epochs: 100,
            states_per_action: 100,
            class_weights: None,
            seed: DEFAULT_SEED,
        }
    }
}

impl<F: Real> TmParams<F> {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.to_owned()));
        if self.num_clauses == 0 || !self.num_clauses.is_multiple_of(2) {
            return bad("number of clauses must be even and positive");
        }
        if self.threshold < 1 {
            return bad("threshold T must be at least 1");
        }
        if !(self.specificity > F::one()) || !self.specificity.is_finite() {
            return bad("specificity s must be a finite value greater than 1");
        }
        if self.states_per_action == 0 || self.states_per_action > u16::MAX / 2 {
            return bad("states per action N out of range");
        }
        if let Some(w) = self.class_weights {
            if w.iter().any(|v| !v.is_finite() || *v < F::zero()) {
                return bad("class weights must be finite and non-negative");
            }
        }
        Ok(())
    }
}

/// `w_c = n / (2 n_c)`; a class absent from `data` gets weight 1.
pub fn default_class_weights<F: Real>(data: &[(LiteralVector, Label)]) -> [F; 2] {
    let mut counts = [0usize; 2];
    for (_, y) in data {
        counts[y.index()] += 1;
    }
    counts.map(|c| {
        if c == 0 {
            F::one()
        } else {
            F::ratio(data.len(), 2 * c)
        }
    })
}

/// Probability that a clause receives feedback for a sample.
///
/// `w * (T - v) / 2T` for a positive target and `w * (T + v) / 2T` for a negative
/// one, with `v` the clamped class sum; capped at 1.
pub fn feedback_probability<F: Real>(class_sum: i32, threshold: u32, target: Label, weight: F) -> F {
    let t = threshold as i32;
    let v = class_sum.clamp(-t, t);
    let margin = if target.is_positive() { t - v } else { t + v };
    let p = weight * F::of(margin as f64) / F::of(2.0 * t as f64);
    p.min(F::one())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct EpochRecord<F> {
    /// 1-based epoch index.
    pub epoch: usize,
    pub train_accuracy: F,
    pub holdout_accuracy: Option<F>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct LearningCurve<F> {
    pub records: Vec<EpochRecord<F>>,
}

impl<F: Real> LearningCurve<F> {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn at_epoch(&self, epoch: usize) -> Option<&EpochRecord<F>> {
        self.records.iter().find(|r| r.epoch == epoch)
    }

    /// CSV with header `epoch,train_accuracy,holdout_accuracy`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_accuracy,holdout_accuracy\n");
        for r in &self.records {
            let holdout = r.holdout_accuracy.map(|a| a.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", r.epoch, r.train_accuracy, holdout));
        }
        out
    }
}

/// A binary Tsetlin Machine over literal vectors of a fixed schema.
#[derive(Clone, Debug, PartialEq)]
pub struct TsetlinMachine<F> {
    params: TmParams<F>,
    schema_fingerprint: String,
    raw_bits: usize,
    clauses: Vec<Clause>,
    trained: bool,
    provenance: Option<Provenance>,
}

impl<F: Real> TsetlinMachine<F> {
    /// Fresh machine: the first half of the clauses are positive, the rest negative.
    pub fn new(params: TmParams<F>, schema: &FeatureSchema<F>) -> Result<Self> {
        Self::with_shape(params, schema.raw_bit_count(), schema.fingerprint())
    }

    /// Fresh machine for `raw_bits` inputs without a named schema.
    pub fn with_shape(params: TmParams<F>, raw_bits: usize, schema_fingerprint: String) -> Result<Self> {
        params.validate()?;
        if raw_bits == 0 {
            return Err(Error::InvalidParams("at least one raw input bit is required".into()));
        }
        let half = params.num_clauses / 2;
        let clauses = (0..params.num_clauses)
            .map(|j| {
                let polarity = if j < half {
                    Polarity::Positive
                } else {
                    Polarity::Negative
                };
                Clause::new(polarity, 2 * raw_bits, params.states_per_action)
            })
            .collect();
        Ok(TsetlinMachine {
            params,
            schema_fingerprint,
            raw_bits,
            clauses,
            trained: false,
            provenance: None,
        })
    }

    /// Machine with a hand-built clause bank, ready for inference.
    pub fn from_clauses(params: TmParams<F>, schema: &FeatureSchema<F>, clauses: Vec<Clause>) -> Result<Self> {
        let mut model = Self::new(params, schema)?;
        model.clauses.clear();
        for clause in clauses {
            model.push_clause(clause)?;
        }
        model.trained = true;
        Ok(model)
    }

    pub fn params(&self) -> &TmParams<F> {
        &self.params
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clauses_mut(&mut self) -> &mut [Clause] {
        &mut self.clauses
    }

    /// Appends a clause; its literal count must match the machine.
    pub fn push_clause(&mut self, clause: Clause) -> Result<()> {
        self.check_clause(&clause)?;
        self.clauses.push(clause);
        Ok(())
    }

    fn check_clause(&self, clause: &Clause) -> Result<()> {
        if clause.literal_count() != 2 * self.raw_bits {
            return Err(Error::LengthMismatch {
                expected: 2 * self.raw_bits,
                actual: clause.literal_count(),
            });
        }
        if clause.states_per_action() != self.params.states_per_action {
            return Err(Error::InvalidParams("clause N differs from the machine's".into()));
        }
        Ok(())
    }

    pub fn schema_fingerprint(&self) -> &str {
        &self.schema_fingerprint
    }

    pub fn raw_bit_count(&self) -> usize {
        self.raw_bits
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn set_provenance(&mut self, provenance: Option<Provenance>) {
        self.provenance = provenance;
    }

    /// Errors unless `schema` is the one this machine was built for.
    pub fn check_schema(&self, schema: &FeatureSchema<F>) -> Result<()> {
        let fingerprint = schema.fingerprint();
        if fingerprint != self.schema_fingerprint {
            return Err(Error::SchemaMismatch {
                model: self.schema_fingerprint.clone(),
                data: fingerprint,
            });
        }
        Ok(())
    }

    /// Total included literals across the clause bank.
    pub fn complexity(&self) -> usize {
        self.clauses.iter().map(Clause::included_count).sum()
    }

    fn check_input(&self, x: &LiteralVector) -> Result<()> {
        if x.len() != 2 * self.raw_bits {
            return Err(Error::LengthMismatch {
                expected: 2 * self.raw_bits,
                actual: x.len(),
            });
        }
        Ok(())
    }

    fn raw_sum(&self, x: &LiteralVector, mode: Mode) -> i32 {
        self.clauses
            .iter()
            .filter(|c| c.fires(x, mode))
            .map(|c| c.polarity().sign())
            .sum()
    }

    /// Positive minus negative firing clauses, clamped to `[-T, T]`.
    pub fn class_sum(&self, x: &LiteralVector, mode: Mode) -> Result<i32> {
        self.check_input(x)?;
        let t = self.params.threshold as i32;
        Ok(self.raw_sum(x, mode).clamp(-t, t))
    }

    /// Clause outputs at inference, in clause order.
    pub fn clause_outputs(&self, x: &LiteralVector) -> Result<Vec<bool>> {
        self.check_input(x)?;
        Ok(self.clauses.iter().map(|c| c.fires(x, Mode::Infer)).collect())
    }

    /// Recurrence iff the inference class sum is non-negative.
    pub fn predict(&self, x: &LiteralVector) -> Result<Label> {
        if !self.trained {
            return Err(Error::Untrained);
        }
        Ok(Label::from_bool(self.class_sum(x, Mode::Infer)? >= 0))
    }

    pub fn accuracy(&self, data: &[(LiteralVector, Label)]) -> Result<F> {
        if data.is_empty() {
            return Err(Error::EmptyData);
        }
        let mut correct = 0;
        for (x, y) in data {
            if self.predict(x)? == *y {
                correct += 1;
            }
        }
        Ok(F::ratio(correct, data.len()))
    }

    /// One pass over `data` in a shuffled order drawn from `rng`.
    pub fn fit_epoch<R: Rng + ?Sized>(
        &mut self,
        data: &[(LiteralVector, Label)],
        class_weights: [F; 2],
        rng: &mut R,
    ) -> Result<()> {
        if data.is_empty() {
            return Err(Error::EmptyData);
        }
        for (x, _) in data {
            self.check_input(x)?;
        }
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(rng);
        let mut fired = vec![false; self.clauses.len()];
        for i in order {
            let (x, target) = &data[i];
            self.update(x, *target, class_weights[target.index()], &mut fired, rng);
        }
        Ok(())
    }

    fn update<R: Rng + ?Sized>(
        &mut self,
        x: &LiteralVector,
        target: Label,
        weight: F,
        fired: &mut [bool],
        rng: &mut R,
    ) {
        let mut sum = 0;
        for (out, clause) in fired.iter_mut().zip(&self.clauses) {
            *out = clause.fires(x, Mode::Train);
            if *out {
                sum += clause.polarity().sign();
            }
        }
        let p = feedback_probability(sum, self.params.threshold, target, weight).as_f64();
        if p <= 0.0 {
            return;
        }
        let s = self.params.specificity;
        let recognise = Polarity::from_target(target);
        for (clause, &out) in self.clauses.iter_mut().zip(fired.iter()) {
            if rng.gen::<f64>() >= p {
                continue;
            }
            if clause.polarity() == recognise {
                clause.type_i_feedback(x, out, s, rng);
            } else {
                clause.type_ii_feedback(x, out);
            }
        }
    }

    /// Trains for `params.epochs` epochs from a fresh RNG seeded with `params.seed`,
    /// recording accuracy after every epoch.
    pub fn fit(
        &mut self,
        train: &[(LiteralVector, Label)],
        holdout: Option<&[(LiteralVector, Label)]>,
    ) -> Result<LearningCurve<F>> {
        self.params.validate()?;
        let epochs = self.params.epochs;
        if epochs > 0 && train.is_empty() {
            return Err(Error::EmptyData);
        }
        let weights = self
            .params
            .class_weights
            .unwrap_or_else(|| default_class_weights(train));
        let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed);
        let mut curve = LearningCurve::default();
        self.trained = true;
        for epoch in 1..=epochs {
            self.fit_epoch(train, weights, &mut rng)?;
            let holdout_accuracy = match holdout {
                Some(h) if !h.is_empty() => Some(self.accuracy(h)?),
                _ => None,
            };
            curve.records.push(EpochRecord {
                epoch,
                train_accuracy: self.accuracy(train)?,
                holdout_accuracy,
            });
        }
        Ok(curve)
    }

    pub fn to_json(&self) -> String {
        let doc = ModelDocument {
            provenance: self.provenance.clone(),
            params: self.params.clone(),
            schema_fingerprint: self.schema_fingerprint.clone(),
            raw_bits: self.raw_bits,
            trained: self.trained,
            clauses: self
                .clauses
                .iter()
                .map(|c| ClauseDocument {
                    polarity: c.polarity(),
                    states: c.states().to_vec(),
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("model serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument<F> = serde_json::from_str(text)?;
        doc.params.validate()?;
        let mut model = TsetlinMachine {
            params: doc.params,
            schema_fingerprint: doc.schema_fingerprint,
            raw_bits: doc.raw_bits,
            clauses: Vec::with_capacity(doc.clauses.len()),
            trained: doc.trained,
            provenance: doc.provenance,
        };
        for c in doc.clauses {
            let clause = Clause::from_states(c.polarity, model.params.states_per_action, c.states)?;
            model.push_clause(clause)?;
        }
        Ok(model)
    }
}

impl Polarity {
    fn from_target(target: Label) -> Self {
        if target.is_positive() {
            Polarity::Positive
        } else {
            Polarity::Negative
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "F: Real")]
struct ModelDocument<F> {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
    params: TmParams<F>,
    schema_fingerprint: String,
    raw_bits: usize,
    trained: bool,
    clauses: Vec<ClauseDocument>,
}

#[derive(Serialize, Deserialize)]
struct ClauseDocument {
    polarity: Polarity,
    states: Vec<u16>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(clauses: usize, t: u32) -> TmParams<f64> {
        TmParams {
            num_clauses: clauses,
            threshold: t,
            ..TmParams::default()
        }
    }

    /// Machine over `raw_bits` inputs whose clauses include only raw literal 0,
    /// so each fires exactly when bit 0 is set.
    fn firing_machine(pos: usize, neg: usize, t: u32) -> TsetlinMachine<f64> {
        let mut m = TsetlinMachine::with_shape(params(2, t), 1, "test".into()).unwrap();
        m.clauses.clear();
        for (polarity, count) in [(Polarity::Positive, pos), (Polarity::Negative, neg)] {
            for _ in 0..count {
                m.clauses
                    .push(Clause::from_states(polarity, 100, vec![150, 100]).unwrap());
            }
        }
        m.trained = true;
        m
    }

    #[test]
    fn class_sum_examples() {
        let on = LiteralVector::from_raw(&[true]);
        let off = LiteralVector::from_raw(&[false]);
        assert_eq!(firing_machine(3, 1, 38).class_sum(&on, Mode::Infer).unwrap(), 2);
        assert_eq!(firing_machine(50, 0, 38).class_sum(&on, Mode::Infer).unwrap(), 38);
        assert_eq!(firing_machine(3, 1, 38).class_sum(&off, Mode::Infer).unwrap(), 0);
    }

    #[test]
    fn predict_uses_sign_with_positive_tie() {
        let on = LiteralVector::from_raw(&[true]);
        assert_eq!(firing_machine(5, 0, 38).predict(&on).unwrap(), Label::Recurrence);
        assert_eq!(firing_machine(0, 5, 38).predict(&on).unwrap(), Label::NoRecurrence);
        assert_eq!(firing_machine(2, 2, 38).predict(&on).unwrap(), Label::Recurrence);
    }

    #[test]
    fn untrained_model_refuses_to_predict() {
        let m = TsetlinMachine::with_shape(params(4, 2), 2, "x".into()).unwrap();
        let x = LiteralVector::from_raw(&[true, false]);
        assert!(matches!(m.predict(&x), Err(Error::Untrained)));
    }

    #[test]
    fn params_validation() {
        assert!(params(81, 38).validate().is_err());
        assert!(params(0, 38).validate().is_err());
        assert!(params(80, 0).validate().is_err());
        let mut p = params(80, 38);
        p.specificity = 1.0;
        assert!(p.validate().is_err());
        assert!(TmParams::<f64>::default().validate().is_ok());
    }

    #[test]
    fn feedback_probability_examples() {
        assert_eq!(feedback_probability(38, 38, Label::Recurrence, 1.0f64), 0.0);
        assert_eq!(feedback_probability(-38, 38, Label::Recurrence, 1.0f64), 1.0);
        assert_eq!(feedback_probability(-50, 38, Label::Recurrence, 2.0f64), 1.0);
        assert_eq!(feedback_probability(10, 38, Label::NoRecurrence, 1.0f64), 48.0 / 76.0);
    }

    #[test]
    fn saturated_sample_leaves_model_unchanged() {
        let mut m = firing_machine(40, 0, 38);
        let before = m.clone();
        let data = vec![(LiteralVector::from_raw(&[true]), Label::Recurrence)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        m.fit_epoch(&data, [1.0, 1.0], &mut rng).unwrap();
        assert_eq!(m, before);
        assert!(matches!(
            m.fit_epoch(&[], [1.0, 1.0], &mut rng),
            Err(Error::EmptyData)
        ));
    }

    #[test]
    fn zero_epochs_gives_empty_curve_and_tie_rule() {
        let mut m = TsetlinMachine::with_shape(params(4, 2), 1, "x".into()).unwrap();
        let data = vec![(LiteralVector::from_raw(&[false]), Label::NoRecurrence)];
        let mut p = m.params().clone();
        p.epochs = 0;
        m.params = p;
        let curve = m.fit(&data, None).unwrap();
        assert!(curve.is_empty());
        assert_eq!(m.predict(&data[0].0).unwrap(), Label::Recurrence);
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let data: Vec<_> = (0..16u32)
            .map(|i| {
                let raw = [i & 1 == 1, i & 2 == 2, i & 4 == 4];
                (LiteralVector::from_raw(&raw), Label::from_bool(raw[0] ^ raw[2]))
            })
            .collect();
        let mut m = TsetlinMachine::with_shape(
            TmParams { epochs: 5, ..params(10, 5) },
            3,
            "abc".into(),
        )
        .unwrap();
        m.fit(&data, None).unwrap();
        let text = m.to_json();
        let back = TsetlinMachine::<f64>::from_json(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn default_weights_balance_classes() {
        let x = LiteralVector::from_raw(&[true]);
        let mut data = vec![(x.clone(), Label::Recurrence); 2];
        data.extend(vec![(x, Label::NoRecurrence); 3]);
        let w: [f64; 2] = default_class_weights(&data);
        assert_eq!(w, [5.0 / 6.0, 5.0 / 4.0]);
    }
}
