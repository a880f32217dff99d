//! Interpretable Tsetlin Machine toolkit for tabular clinical risk prediction.
//!
//! The pipeline binarizes patient records through a [`schema::FeatureSchema`],
//! trains a two-polarity [`tm::TsetlinMachine`], renders its clauses as
//! readable rules ([`interpret`]) and compares it with the EORTC recurrence
//! tables and a logistic regression ([`baselines`], [`eval`]). Synthetic
//! cohorts with planted rules come from [`synth`].
//!
//! Real-valued parts are generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar type.

pub mod baselines;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod interpret;
pub mod provenance;
pub mod scalar;
pub mod schema;
pub mod synth;
pub mod tm;

pub use error::{Error, Result};
pub use scalar::Real;
pub use schema::{Label, LiteralVector};

pub type Schema = schema::FeatureSchema<f64>;
pub type Dataset = data::Dataset<f64>;
pub type TmParams = tm::TmParams<f64>;
pub type TsetlinMachine = tm::TsetlinMachine<f64>;
pub type LrModel = baselines::logistic::LrModel<f64>;
pub type MetricsReport = eval::MetricsReport<f64>;
pub type CohortConfig = synth::CohortConfig<f64>;

pub type SchemaF32 = schema::FeatureSchema<f32>;
pub type DatasetF32 = data::Dataset<f32>;
pub type TmParamsF32 = tm::TmParams<f32>;
pub type TsetlinMachineF32 = tm::TsetlinMachine<f32>;
pub type LrModelF32 = baselines::logistic::LrModel<f32>;
pub type MetricsReportF32 = eval::MetricsReport<f32>;
pub type CohortConfigF32 = synth::CohortConfig<f32>;
