//! Seeded random search over TM hyperparameters.
//!
//! Each trial is scored by `macro-F1 − λ · included / (clauses · 2B)` on a
//! validation set, so at equal F1 the model with fewer included literals wins.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, MetricsReport};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::provenance::Provenance;
use crate::scalar::Real;
use crate::schema::{FeatureSchema, Label};
use crate::tm::{TmParams, TsetlinMachine};

/// Candidate values per hyperparameter; each trial draws one of each uniformly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct SearchSpace<F> {
    /// Intervals per continuous feature; selects a declared cut-off ladder.
    pub n_bins: Vec<usize>,
    pub num_clauses: Vec<usize>,
    pub threshold: Vec<u32>,
    pub specificity: Vec<F>,
    pub epochs: Vec<usize>,
}

impl<F: Real> Default for SearchSpace<F> {
    fn default() -> Self {
        SearchSpace {
            n_bins: vec![2, 4, 6],
            num_clauses: vec![20, 40, 80, 120],
            threshold: vec![10, 20, 38, 60],
            specificity: [2.0, 3.0, 4.0, 6.0, 8.0].map(F::of).to_vec(),
            epochs: vec![40, 60, 100],
        }
    }
}

impl<F: Real> SearchSpace<F> {
    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("n_bins", self.n_bins.is_empty()),
            ("num_clauses", self.num_clauses.is_empty()),
            ("threshold", self.threshold.is_empty()),
            ("specificity", self.specificity.is_empty()),
            ("epochs", self.epochs.is_empty()),
        ];
        match empty.iter().find(|(_, e)| *e) {
            Some((name, _)) => Err(Error::InvalidParams(format!("search space `{name}` has no candidates"))),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct SearchConfig<F> {
    pub trials: usize,
    pub seed: u64,
    /// `λ` of the complexity penalty.
    pub complexity_weight: F,
}

impl<F: Real> Default for SearchConfig<F> {
    fn default() -> Self {
        SearchConfig {
            trials: 50,
            seed: crate::tm::DEFAULT_SEED,
            complexity_weight: F::of(0.05),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct TrialParams<F> {
    pub n_bins: usize,
    pub num_clauses: usize,
    pub threshold: u32,
    pub specificity: F,
    pub epochs: usize,
    pub seed: u64,
}

impl<F: Real> TrialParams<F> {
    pub fn tm_params(&self) -> TmParams<F> {
        TmParams {
            num_clauses: self.num_clauses,
            threshold: self.threshold,
            specificity: self.specificity,
            epochs: self.epochs,
            seed: self.seed,
            ..TmParams::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct TrialResult<F> {
    pub trial: usize,
    pub params: TrialParams<F>,
    pub metrics: Option<MetricsReport<F>>,
    /// Total included literals.
    pub complexity: Option<usize>,
    /// `None` for a failed trial, which ranks below every scored one.
    pub objective: Option<F>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct SearchLog<F> {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    pub config: SearchConfig<F>,
    pub space: SearchSpace<F>,
    /// Index into `trials`.
    pub best: usize,
    pub trials: Vec<TrialResult<F>>,
}

impl<F: Real> SearchLog<F> {
    pub fn best(&self) -> &TrialResult<F> {
        &self.trials[self.best]
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("log serializes");
        text.push('\n');
        text
    }
}

pub fn objective<F: Real>(macro_f1: F, complexity: usize, num_clauses: usize, raw_bits: usize, weight: F) -> F {
    macro_f1 - weight * F::ratio(complexity, num_clauses * 2 * raw_bits)
}

/// Draws the parameters of every trial, in order.
pub fn sample_trials<F: Real>(space: &SearchSpace<F>, trials: usize, seed: u64) -> Vec<TrialParams<F>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| TrialParams {
            n_bins: space.n_bins[rng.gen_range(0..space.n_bins.len())],
            num_clauses: space.num_clauses[rng.gen_range(0..space.num_clauses.len())],
            threshold: space.threshold[rng.gen_range(0..space.threshold.len())],
            specificity: space.specificity[rng.gen_range(0..space.specificity.len())],
            epochs: space.epochs[rng.gen_range(0..space.epochs.len())],
            seed: rng.gen(),
        })
        .collect()
}

/// A trained trial model together with the schema variant it was trained on.
pub struct TrialModel<F> {
    pub schema: FeatureSchema<F>,
    pub model: TsetlinMachine<F>,
    pub metrics: MetricsReport<F>,
    pub complexity: usize,
    pub objective: F,
}

/// Trains one candidate on `train` and scores it on `validation`.
pub fn run_trial<F: Real>(
    params: &TrialParams<F>,
    weight: F,
    schema: &FeatureSchema<F>,
    train: &Dataset<F>,
    validation: &Dataset<F>,
) -> Result<TrialModel<F>> {
    let schema = schema.with_bins(params.n_bins)?;
    let train_rows = train.binarize(&schema)?;
    let valid_rows = validation.binarize(&schema)?;
    let mut model = TsetlinMachine::new(params.tm_params(), &schema)?;
    model.fit(&train_rows, None)?;
    let preds = valid_rows
        .iter()
        .map(|(x, _)| model.predict(x))
        .collect::<Result<Vec<Label>>>()?;
    let labels: Vec<Label> = valid_rows.iter().map(|(_, y)| *y).collect();
    let metrics = compute_metrics(&preds, &labels)?;
    let complexity = model.complexity();
    let objective = objective(metrics.macro_f1, complexity, params.num_clauses, schema.raw_bit_count(), weight);
    Ok(TrialModel { schema, model, metrics, complexity, objective })
}

/// Runs every trial; failures are logged and do not stop the study. The best
/// trial has the highest objective, earliest trial on ties.
pub fn random_search<F: Real>(
    space: &SearchSpace<F>,
    config: &SearchConfig<F>,
    schema: &FeatureSchema<F>,
    train: &Dataset<F>,
    validation: &Dataset<F>,
) -> Result<SearchLog<F>> {
    space.validate()?;
    if config.trials == 0 {
        return Err(Error::InvalidParams("at least one trial is required".into()));
    }
    let trials: Vec<TrialResult<F>> = sample_trials(space, config.trials, config.seed)
        .into_iter()
        .enumerate()
        .map(|(trial, params)| match run_trial(&params, config.complexity_weight, schema, train, validation) {
            Ok(t) => TrialResult {
                trial,
                params,
                metrics: Some(t.metrics),
                complexity: Some(t.complexity),
                objective: Some(t.objective),
                error: None,
            },
            Err(e) => TrialResult {
                trial,
                params,
                metrics: None,
                complexity: None,
                objective: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let mut best: Option<usize> = None;
    for (i, t) in trials.iter().enumerate() {
        if let Some(score) = t.objective {
            if best.is_none_or(|b| score > trials[b].objective.expect("best is scored")) {
                best = Some(i);
            }
        }
    }
    let best = match best {
        Some(b) => b,
        None => {
            return Err(Error::InvalidParams(format!(
                "all {} trials failed; first error: {}",
                trials.len(),
                trials[0].error.as_deref().unwrap_or("unknown")
            )))
        }
    };
    Ok(SearchLog {
        provenance: None,
        config: config.clone(),
        space: space.clone(),
        best,
        trials,
    })
}
