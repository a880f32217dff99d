//! Synthetic cohorts with planted ground-truth rules.
//!
//! Feature values are drawn from per-feature samplers. Each record's clean
//! label is that of the highest-weight matching [`PlantedRule`] (ties go to
//! recurrence), or the background label when no rule matches. Records are
//! accepted until the per-class quotas implied by the target positive
//! fraction are filled, then every label is flipped independently with the
//! noise rate.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::eortc::{EortcExtras, Grade, PriorRecurrence, TCategory};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::schema::{
    binarize_record, FeatureKind, FeatureSchema, FeatureValue, Label, LiteralVector, PatientRecord,
};

/// Per-feature value distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "sampler", rename_all = "snake_case", bound = "F: Real")]
pub enum Sampler<F> {
    /// Uniform integer in `[min, max]`.
    IntegerRange { min: i64, max: i64 },
    /// Uniform real in `[low, high)`, rounded to `decimals` places.
    Uniform { low: F, high: F, decimals: u32 },
    /// Weighted choice among real values.
    Discrete { values: Vec<F>, weights: Vec<f64> },
    /// Weighted choice among category labels.
    Categorical { categories: Vec<String>, weights: Vec<f64> },
    Bernoulli { p: f64 },
}

impl<F: Real> Sampler<F> {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<FeatureValue<F>> {
        Ok(match self {
            Sampler::IntegerRange { min, max } => {
                FeatureValue::Real(F::of(rng.gen_range(*min..=*max) as f64))
            }
            Sampler::Uniform {
                low,
                high,
                decimals,
            } => {
                let u = F::of(rng.gen::<f64>());
                let v = *low + (*high - *low) * u;
                let scale = F::of(10f64.powi(*decimals as i32));
                FeatureValue::Real((v * scale).round() / scale)
            }
            Sampler::Discrete { values, weights } => {
                FeatureValue::Real(values[weighted(weights, rng)?])
            }
            Sampler::Categorical {
                categories,
                weights,
            } => FeatureValue::Category(categories[weighted(weights, rng)?].clone()),
            Sampler::Bernoulli { p } => FeatureValue::Flag(rng.gen::<f64>() < *p),
        })
    }

    fn validate(&self, feature: &str) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(format!("sampler for `{feature}`: {msg}")));
        match self {
            Sampler::IntegerRange { min, max } if min > max => bad("min exceeds max"),
            Sampler::Uniform { low, high, .. } if !(low < high) => bad("low must be below high"),
            Sampler::Discrete { values, weights } if values.len() != weights.len() || values.is_empty() => {
                bad("values and weights must be non-empty and of equal length")
            }
            Sampler::Categorical {
                categories,
                weights,
            } if categories.len() != weights.len() || categories.is_empty() => {
                bad("categories and weights must be non-empty and of equal length")
            }
            Sampler::Bernoulli { p } if !(0.0..=1.0).contains(p) => bad("p must lie in [0, 1]"),
            _ => Ok(()),
        }
    }
}

fn weighted<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    let dist = WeightedIndex::new(weights)
        .map_err(|e| Error::InvalidParams(format!("sampler weights: {e}")))?;
    Ok(dist.sample(rng))
}

/// A predicate that corresponds to exactly one literal of a schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", bound = "F: Real")]
pub enum Predicate<F> {
    Above { feature: String, cutoff: F },
    AtMost { feature: String, cutoff: F },
    Is { feature: String, category: String },
    IsNot { feature: String, category: String },
    Flag { feature: String, value: bool },
}

impl<F: Real> Predicate<F> {
    /// Literal index in `[0, 2B)` expressing this predicate.
    pub fn literal(&self, schema: &FeatureSchema<F>) -> Result<usize> {
        let (feature, negated) = match self {
            Predicate::Above { feature, .. } | Predicate::Is { feature, .. } => (feature, false),
            Predicate::AtMost { feature, .. } | Predicate::IsNot { feature, .. } => (feature, true),
            Predicate::Flag { feature, value } => (feature, !value),
        };
        let missing = || Error::InvalidSchema(format!("predicate {self:?} has no matching schema bit"));
        let f = schema.feature_index(feature).ok_or_else(missing)?;
        let spec = &schema.specs()[f];
        let within = match (&spec.kind, self) {
            (FeatureKind::Continuous { cutoffs, .. }, Predicate::Above { cutoff, .. })
            | (FeatureKind::Continuous { cutoffs, .. }, Predicate::AtMost { cutoff, .. }) => {
                cutoffs.iter().position(|c| c == cutoff)
            }
            (FeatureKind::Categorical { categories }, Predicate::Is { category, .. })
            | (FeatureKind::Categorical { categories }, Predicate::IsNot { category, .. }) => {
                categories.iter().position(|c| c == category)
            }
            (FeatureKind::Binary, Predicate::Flag { .. }) => Some(0),
            _ => None,
        }
        .ok_or_else(missing)?;
        let raw = schema.offset(f) + within;
        Ok(if negated {
            schema.raw_bit_count() + raw
        } else {
            raw
        })
    }
}

/// A conjunction of predicates that determines the label of matching records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct PlantedRule<F> {
    pub name: String,
    pub predicates: Vec<Predicate<F>>,
    pub label: Label,
    pub weight: f64,
}

impl<F: Real> PlantedRule<F> {
    /// `HospitalStay > 3 days AND TumourNumber > 3 → Recurrence`.
    pub fn long_stay_many_tumours() -> Self {
        PlantedRule {
            name: "C149".into(),
            predicates: vec![
                Predicate::Above {
                    feature: "HospitalStay".into(),
                    cutoff: F::of(3.0),
                },
                Predicate::Above {
                    feature: "TumourNumber".into(),
                    cutoff: F::of(3.0),
                },
            ],
            label: Label::Recurrence,
            weight: 2.0,
        }
    }

    /// `SurgeonGrade = Consultant → No Recurrence`.
    pub fn consultant_surgeon() -> Self {
        PlantedRule {
            name: "C63".into(),
            predicates: vec![Predicate::Is {
                feature: "SurgeonGrade".into(),
                category: "Consultant".into(),
            }],
            label: Label::NoRecurrence,
            weight: 1.0,
        }
    }

    /// `EQ5DScore in (0.41, 0.49] AND SurgeonGrade ≠ Consultant → Recurrence`.
    pub fn low_quality_of_life_junior_surgeon() -> Self {
        PlantedRule {
            name: "C73".into(),
            predicates: vec![
                Predicate::Above {
                    feature: "EQ5DScore".into(),
                    cutoff: F::of(0.41),
                },
                Predicate::AtMost {
                    feature: "EQ5DScore".into(),
                    cutoff: F::of(0.49),
                },
                Predicate::IsNot {
                    feature: "SurgeonGrade".into(),
                    category: "Consultant".into(),
                },
            ],
            label: Label::Recurrence,
            weight: 1.5,
        }
    }

    /// Sorted literal indices of the conjunction.
    pub fn literals(&self, schema: &FeatureSchema<F>) -> Result<Vec<usize>> {
        let mut lits = self
            .predicates
            .iter()
            .map(|p| p.literal(schema))
            .collect::<Result<Vec<_>>>()?;
        lits.sort_unstable();
        lits.dedup();
        Ok(lits)
    }
}

/// Rules resolved against a schema.
#[derive(Clone, Debug)]
pub struct CompiledRules {
    rules: Vec<(Vec<usize>, Label, f64)>,
    background: Label,
}

impl CompiledRules {
    pub fn new<F: Real>(rules: &[PlantedRule<F>], background: Label, schema: &FeatureSchema<F>) -> Result<Self> {
        let rules = rules
            .iter()
            .map(|r| Ok((r.literals(schema)?, r.label, r.weight)))
            .collect::<Result<_>>()?;
        Ok(CompiledRules { rules, background })
    }

    /// Noise-free label of a binarized record.
    pub fn label(&self, x: &LiteralVector) -> Label {
        let mut best: Option<(f64, Label)> = None;
        for (lits, label, weight) in &self.rules {
            if !lits.iter().all(|&l| x.get(l)) {
                continue;
            }
            best = match best {
                Some((w, l)) if w > *weight || (w == *weight && l.is_positive()) => Some((w, l)),
                _ => Some((*weight, *label)),
            };
        }
        best.map_or(self.background, |(_, l)| l)
    }
}

/// Ground-truth label of `record` under `rules`, ignoring noise.
pub fn oracle_label<F: Real>(
    record: &PatientRecord<F>,
    rules: &[PlantedRule<F>],
    background: Label,
    schema: &FeatureSchema<F>,
) -> Result<Label> {
    let compiled = CompiledRules::new(rules, background, schema)?;
    Ok(compiled.label(&binarize_record(record, schema)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct CohortConfig<F> {
    pub n: usize,
    pub positive_fraction: f64,
    pub noise: f64,
    pub seed: u64,
    pub rules: Vec<PlantedRule<F>>,
    /// Label of records matched by no rule.
    pub background: Label,
    /// One sampler per schema feature, by feature name.
    pub samplers: Vec<(String, Sampler<F>)>,
    /// Also draw the EORTC factor columns.
    pub eortc: bool,
    /// Give up after this many draws per requested record.
    pub max_draws_per_record: usize,
}

impl<F: Real> CohortConfig<F> {
    /// Cohort of 330 patients, 40% recurrence, 5% label noise, with the
    /// long-stay/many-tumours and consultant-surgeon rules planted.
    pub fn photo_like(seed: u64) -> Self {
        let cat = |names: &[&str], weights: &[f64]| Sampler::Categorical {
            categories: names.iter().map(|s| s.to_string()).collect(),
            weights: weights.to_vec(),
        };
        let counts = |values: &[f64], weights: &[f64]| Sampler::Discrete {
            values: values.iter().map(|&v| F::of(v)).collect(),
            weights: weights.to_vec(),
        };
        CohortConfig {
            n: 330,
            positive_fraction: 0.4,
            noise: 0.05,
            seed,
            rules: vec![
                PlantedRule::long_stay_many_tumours(),
                PlantedRule::consultant_surgeon(),
            ],
            background: Label::NoRecurrence,
            samplers: vec![
                (
                    "HospitalStay".into(),
                    counts(
                        &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 10.0, 14.0],
                        &[10.0, 12.0, 12.0, 10.0, 9.0, 8.0, 7.0, 7.0, 6.0, 5.0],
                    ),
                ),
                (
                    "TumourNumber".into(),
                    counts(
                        &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 10.0],
                        &[14.0, 12.0, 11.0, 10.0, 9.0, 8.0, 7.0, 6.0, 5.0],
                    ),
                ),
                (
                    "EQ5DScore".into(),
                    Sampler::Uniform {
                        low: F::of(0.2),
                        high: F::of(1.0),
                        decimals: 3,
                    },
                ),
                ("SurgeonGrade".into(), cat(&["Consultant", "Registrar", "Other"], &[0.4, 0.4, 0.2])),
                ("SmokingStatus".into(), cat(&["never", "former", "current"], &[0.4, 0.35, 0.25])),
            ],
            eortc: true,
            max_draws_per_record: 1000,
        }
    }

    pub fn validate(&self, schema: &FeatureSchema<F>) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.n < 2 {
            return bad(format!("cohort size must be at least 2, got {}", self.n));
        }
        if !(0.0..=1.0).contains(&self.positive_fraction) {
            return bad("positive fraction must lie in [0, 1]".into());
        }
        if !(0.0..1.0).contains(&self.noise) {
            return bad("noise rate must lie in [0, 1)".into());
        }
        for spec in schema.specs() {
            match self.samplers.iter().find(|(name, _)| *name == spec.name) {
                Some((name, s)) => s.validate(name)?,
                None => return bad(format!("no sampler for feature `{}`", spec.name)),
            }
        }
        for rule in &self.rules {
            rule.literals(schema)?;
        }
        Ok(())
    }
}

/// A generated cohort with its noise-free labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Cohort<F> {
    pub data: Dataset<F>,
    pub clean_labels: Vec<Label>,
}

pub fn generate_cohort<F: Real>(config: &CohortConfig<F>, schema: &FeatureSchema<F>) -> Result<Cohort<F>> {
    config.validate(schema)?;
    let rules = CompiledRules::new(&config.rules, config.background, schema)?;
    let samplers: Vec<&Sampler<F>> = schema
        .specs()
        .iter()
        .map(|spec| {
            &config
                .samplers
                .iter()
                .find(|(name, _)| *name == spec.name)
                .expect("validated")
                .1
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let want_pos = (config.n as f64 * config.positive_fraction).round() as usize;
    let mut quota = [config.n - want_pos, want_pos];
    let max_draws = config.n.saturating_mul(config.max_draws_per_record);
    let mut accepted: Vec<(PatientRecord<F>, Label)> = Vec::with_capacity(config.n);
    let mut drawn = [0usize; 2];
    let mut draws = 0;
    while accepted.len() < config.n {
        if draws == max_draws {
            return Err(Error::UnreachableFraction {
                target: config.positive_fraction,
                achieved: drawn[1] as f64 / draws.max(1) as f64,
                draws,
            });
        }
        draws += 1;
        let values = samplers
            .iter()
            .map(|s| s.sample(&mut rng))
            .collect::<Result<Vec<_>>>()?;
        let record = PatientRecord::new(values, None);
        let label = rules.label(&binarize_record(&record, schema)?);
        drawn[label.index()] += 1;
        if quota[label.index()] > 0 {
            quota[label.index()] -= 1;
            accepted.push((record, label));
        }
    }
    accepted.shuffle(&mut rng);

    let count_feature = schema.feature_index("TumourNumber");
    let mut data = Dataset::new(Vec::with_capacity(config.n));
    data.ids = (0..config.n).map(|i| format!("P{i:04}")).collect();
    let mut clean_labels = Vec::with_capacity(config.n);
    let mut extras = Vec::new();
    for (mut record, label) in accepted {
        let noisy = if rng.gen::<f64>() < config.noise {
            label.flip()
        } else {
            label
        };
        record.label = Some(noisy);
        clean_labels.push(label);
        if config.eortc {
            extras.push(sample_eortc(&mut rng));
        }
        data.records.push(record);
    }
    if config.eortc {
        if count_feature.is_none() {
            return Err(Error::InvalidParams(
                "EORTC columns need a TumourNumber feature".into(),
            ));
        }
        data.eortc = Some(extras);
    }
    Ok(Cohort { data, clean_labels })
}

fn sample_eortc<R: Rng + ?Sized>(rng: &mut R) -> EortcExtras {
    let pick = |rng: &mut R, w: &[f64]| WeightedIndex::new(w).expect("static weights").sample(rng);
    let size = (rng.gen_range(0.5..6.0f64) * 10.0).round() / 10.0;
    EortcExtras {
        tumour_size_cm: size,
        prior_recurrence: PriorRecurrence::ALL[pick(rng, &[0.6, 0.25, 0.15])],
        t_category: TCategory::ALL[pick(rng, &[0.7, 0.3])],
        cis: rng.gen::<f64>() < 0.1,
        grade: Grade::ALL[pick(rng, &[0.35, 0.4, 0.25])],
    }
}

/// Manifest written beside a generated data file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct CohortManifest<F> {
    pub provenance: crate::provenance::Provenance,
    pub config: CohortConfig<F>,
    pub achieved_positive_fraction: f64,
    pub clean_positive_fraction: f64,
}
