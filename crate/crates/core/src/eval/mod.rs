//! Splitting, metrics, model comparison and hyperparameter search.

pub mod compare;
pub mod metrics;
pub mod search;
pub mod split;

pub use compare::{evaluate_model, predictions_csv, ComparisonTable, EortcPredictor, EvalSet, Evaluation, Prediction, Predictor};
pub use metrics::{compute_metrics, ClassMetrics, ConfusionMatrix, MetricsReport};
pub use search::{objective, random_search, run_trial, SearchConfig, SearchLog, SearchSpace, TrialParams, TrialResult};
pub use split::{stratified_k_fold, stratified_split, Split};
