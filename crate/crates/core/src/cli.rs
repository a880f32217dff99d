//! The `tmclin` command line.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::baselines::eortc::{read_factors, EortcColumns, EortcFactors, RiskGroup, DEFAULT_THRESHOLD};
use crate::baselines::logistic::{lr_fit, LrParams};
use crate::data::Dataset;
use crate::eval::{
    compute_metrics, evaluate_model, predictions_csv, random_search, stratified_k_fold, stratified_split,
    ComparisonTable, EortcPredictor, EvalSet, Evaluation, MetricsReport, SearchConfig, SearchSpace, Split,
};
use crate::interpret::{activation_matrix, attach_fire_counts, explain_patient, export_heatmap_data, extract_rules};
use crate::provenance::Provenance;
use crate::schema::{FeatureSchema, Label, LiteralVector};
use crate::synth::{generate_cohort, CohortConfig, CohortManifest};
use crate::tm::{TmParams, TsetlinMachine, DEFAULT_SEED};

type Real = f64;

#[derive(Debug, Parser)]
#[command(name = "tmclin", version, about = "Interpretable Tsetlin Machine toolkit for clinical risk prediction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort with planted rules.
    Generate(GenerateArgs),
    /// Train a Tsetlin Machine on the training split.
    Train(TrainArgs),
    /// Compare TM, logistic regression and EORTC on the test split.
    Evaluate(EvaluateArgs),
    /// Export readable rules, heatmap data and a per-patient explanation.
    Explain(ExplainArgs),
    /// Random search over TM hyperparameters.
    Tune(TuneArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Schema JSON; the built-in five-feature schema when omitted.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Held-out share of each class.
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 330)]
    pub n: usize,
    #[arg(long, default_value_t = 0.4)]
    pub pos_frac: f64,
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    /// Full cohort configuration JSON; replaces the built-in one.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Leave out the EORTC factor columns.
    #[arg(long)]
    pub no_eortc: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long, default_value_t = 80)]
    pub clauses: usize,
    /// Voting threshold.
    #[arg(long = "T", default_value_t = 38)]
    pub threshold: u32,
    /// Specificity.
    #[arg(long = "s", default_value_t = 4.0)]
    pub specificity: f64,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    /// States per action `N`.
    #[arg(long, default_value_t = 100)]
    pub states: u16,
    /// Intervals per continuous feature, selecting a declared cut-off ladder.
    #[arg(long)]
    pub n_bins: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub data: PathBuf,
    /// Trained TM to include in the comparison.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Include the logistic regression baseline.
    #[arg(long)]
    pub lr: bool,
    /// Include the EORTC recurrence table.
    #[arg(long)]
    pub eortc: bool,
    /// Lowest risk group predicted as recurrence: 0, 1-4, 5-9 or 10-17.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD.to_string())]
    pub eortc_threshold: String,
    /// L2 strength of the logistic regression.
    #[arg(long, default_value_t = 0.01)]
    pub lr_l2: f64,
    /// Report the mean over k stratified folds of the training split instead of the test split.
    #[arg(long)]
    pub folds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub top_k: usize,
    /// Patient id, or row number when no id matches.
    #[arg(long)]
    pub patient: Option<String>,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Share of the training split used for validation during the search.
    #[arg(long, default_value_t = 0.2)]
    pub validation_fraction: f64,
    /// Weight of the complexity penalty.
    #[arg(long, default_value_t = 0.05)]
    pub complexity_weight: f64,
    /// Search space JSON; the built-in space when omitted.
    #[arg(long)]
    pub space: Option<PathBuf>,
    /// Retrain the winner on the whole training split and score it on the test split.
    #[arg(long)]
    pub retrain: bool,
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Explain(a) => cmd_explain(&a),
        Command::Tune(a) => cmd_tune(&a),
    }
}

fn load_schema(path: &Option<PathBuf>) -> anyhow::Result<FeatureSchema<Real>> {
    match path {
        Some(p) => FeatureSchema::load(p).with_context(|| format!("reading schema {}", p.display())),
        None => Ok(FeatureSchema::photo_like()),
    }
}

fn load_data(path: &Path, schema: &FeatureSchema<Real>) -> anyhow::Result<Dataset<Real>> {
    Dataset::read_csv(path, schema).with_context(|| format!("reading data {}", path.display()))
}

fn load_model(path: &Path) -> anyhow::Result<TsetlinMachine<Real>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading model {}", path.display()))?;
    TsetlinMachine::from_json(&text).with_context(|| format!("parsing model {}", path.display()))
}

/// The schema the model was trained with: the base schema or one of its bin variants.
fn resolve_schema(base: &FeatureSchema<Real>, model: &TsetlinMachine<Real>) -> anyhow::Result<FeatureSchema<Real>> {
    if base.fingerprint() == model.schema_fingerprint() {
        return Ok(base.clone());
    }
    for n_bins in 2..=16 {
        if let Ok(variant) = base.with_bins(n_bins) {
            if variant.fingerprint() == model.schema_fingerprint() {
                return Ok(variant);
            }
        }
    }
    model.check_schema(base)?;
    unreachable!("fingerprints differ")
}

fn file_hash(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(&Sha256::digest(&bytes)[..8]))
}

fn out_dir(common: &Common) -> anyhow::Result<&Path> {
    fs::create_dir_all(&common.out).with_context(|| format!("creating {}", common.out.display()))?;
    Ok(&common.out)
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializes");
    text.push('\n');
    text
}

fn split_data(data: &Dataset<Real>, fraction: f64, seed: u64) -> anyhow::Result<Split> {
    let labels = data.labels().context("splitting needs a label on every row")?;
    Ok(stratified_split(&labels, fraction, seed)?)
}

fn balance(labels: &[Label]) -> String {
    let pos = labels.iter().filter(|l| l.is_positive()).count();
    format!(
        "{pos}/{} recurrence ({:.1}%)",
        labels.len(),
        100.0 * pos as f64 / labels.len().max(1) as f64
    )
}

fn cmd_generate(a: &GenerateArgs) -> anyhow::Result<()> {
    let schema = load_schema(&a.common.schema)?;
    let config = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<CohortConfig<Real>>(&text).context("parsing cohort configuration")?
        }
        None => CohortConfig {
            n: a.n,
            positive_fraction: a.pos_frac,
            noise: a.noise,
            seed: a.common.seed,
            eortc: !a.no_eortc,
            ..CohortConfig::photo_like(a.common.seed)
        },
    };
    let cohort = generate_cohort(&config, &schema)?;
    let provenance = Provenance::new(config.seed, &json!({"command": "generate", "schema": schema.fingerprint(), "config": config}));
    let dir = out_dir(&a.common)?;
    let mut csv = Vec::new();
    cohort.data.write_csv(&mut csv, &schema, &provenance.csv_comment())?;
    write(&dir.join("cohort.csv"), std::str::from_utf8(&csv)?)?;
    let labels = cohort.data.labels()?;
    let manifest = CohortManifest {
        provenance,
        achieved_positive_fraction: cohort.data.positive_fraction(),
        clean_positive_fraction: cohort.clean_labels.iter().filter(|l| l.is_positive()).count() as f64
            / cohort.clean_labels.len() as f64,
        config,
    };
    write(&dir.join("manifest.json"), &to_json(&manifest))?;
    println!("class balance: {}", balance(&labels));
    Ok(())
}

fn cmd_train(a: &TrainArgs) -> anyhow::Result<()> {
    let base = load_schema(&a.common.schema)?;
    let schema = match a.n_bins {
        Some(n) => base.with_bins(n)?,
        None => base,
    };
    let data = load_data(&a.data, &schema)?;
    let params = TmParams {
        num_clauses: a.clauses,
        threshold: a.threshold,
        specificity: a.specificity,
        epochs: a.epochs,
        states_per_action: a.states,
        class_weights: None,
        seed: a.common.seed,
    };
    params.validate()?;
    let split = split_data(&data, a.split.test_fraction, a.common.seed)?;
    let train = data.subset(&split.train).binarize(&schema)?;
    let test = data.subset(&split.test).binarize(&schema)?;
    let provenance = Provenance::new(
        a.common.seed,
        &json!({
            "command": "train",
            "schema": schema.fingerprint(),
            "data": file_hash(&a.data)?,
            "params": params,
            "test_fraction": a.split.test_fraction,
        }),
    );
    let mut model = TsetlinMachine::new(params, &schema)?;
    let curve = model.fit(&train, Some(&test))?;
    model.set_provenance(Some(provenance.clone()));

    let dir = out_dir(&a.common)?;
    write(&dir.join("model.json"), &model.to_json())?;
    write(&dir.join("learning_curve.csv"), &format!("{}{}", provenance.csv_comment(), curve.to_csv()))?;
    let metrics = tm_metrics(&model, &test)?;
    write(
        &dir.join("metrics.json"),
        &to_json(&json!({
            "provenance": provenance,
            "train_size": train.len(),
            "test_size": test.len(),
            "complexity": model.complexity(),
            "test": metrics,
        })),
    )?;
    println!(
        "test accuracy {:.3}, macro F1 {:.3}, {} included literals",
        metrics.accuracy,
        metrics.macro_f1,
        model.complexity()
    );
    Ok(())
}

fn tm_metrics(model: &TsetlinMachine<Real>, rows: &[(LiteralVector, Label)]) -> anyhow::Result<MetricsReport<Real>> {
    let preds = rows.iter().map(|(x, _)| model.predict(x)).collect::<crate::Result<Vec<_>>>()?;
    let labels: Vec<Label> = rows.iter().map(|(_, y)| *y).collect();
    Ok(compute_metrics(&preds, &labels)?)
}

fn eval_set(data: &Dataset<Real>, schema: &FeatureSchema<Real>, eortc: Option<&[EortcFactors]>, rows: &[usize]) -> anyhow::Result<EvalSet> {
    let subset = data.subset(rows);
    Ok(EvalSet {
        ids: subset.ids.clone(),
        rows: subset.binarize(schema)?,
        eortc: eortc.map(|f| rows.iter().map(|&i| f[i]).collect()),
    })
}

fn cmd_evaluate(a: &EvaluateArgs) -> anyhow::Result<()> {
    let base = load_schema(&a.common.schema)?;
    let model = a.model.as_deref().map(load_model).transpose()?;
    let schema = match &model {
        Some(m) => resolve_schema(&base, m)?,
        None => base,
    };
    if model.is_none() && !a.lr && !a.eortc {
        bail!("nothing to evaluate: pass --model, --lr and/or --eortc");
    }
    let threshold = RiskGroup::parse(&a.eortc_threshold)?;
    let data = load_data(&a.data, &schema)?;
    let factors = if a.eortc {
        Some(read_factors(&a.data, &EortcColumns::default()).context("reading EORTC factor columns")?)
    } else {
        None
    };
    let split = split_data(&data, a.split.test_fraction, a.common.seed)?;
    let lr_params = LrParams { l2: a.lr_l2, ..LrParams::default() };
    let provenance = Provenance::new(
        a.common.seed,
        &json!({
            "command": "evaluate",
            "schema": schema.fingerprint(),
            "data": file_hash(&a.data)?,
            "model": a.model.as_deref().map(file_hash).transpose()?,
            "lr": a.lr.then_some(&lr_params),
            "eortc": a.eortc.then(|| threshold.to_string()),
            "test_fraction": a.split.test_fraction,
            "folds": a.folds,
        }),
    );

    let score = |train_rows: &[usize], test_rows: &[usize], tm: Option<&TsetlinMachine<Real>>| -> anyhow::Result<(EvalSet, Vec<Evaluation<Real>>)> {
        let set = eval_set(&data, &schema, factors.as_deref(), test_rows)?;
        let mut evals = Vec::new();
        if let Some(m) = tm {
            evals.push(evaluate_model(m, &set)?);
        }
        if a.lr {
            let train = data.subset(train_rows).binarize(&schema)?;
            evals.push(evaluate_model(&lr_fit(&train, &lr_params)?, &set)?);
        }
        if a.eortc {
            evals.push(evaluate_model(&EortcPredictor { threshold }, &set)?);
        }
        Ok((set, evals))
    };

    let dir = out_dir(&a.common)?;
    let table = match a.folds {
        None => {
            let (set, evals) = score(&split.train, &split.test, model.as_ref())?;
            write(&dir.join("predictions.csv"), &predictions_csv(&set, &evals, Some(&provenance)))?;
            ComparisonTable::new(&evals, Some(provenance))
        }
        Some(k) => {
            let labels: Vec<Label> = split.train.iter().map(|&i| data.records[i].label.expect("split checked labels")).collect();
            let folds = stratified_k_fold(&labels, k, a.common.seed)?;
            let mut per_fold = Vec::new();
            for fold in &folds {
                let train_rows: Vec<usize> = fold.train.iter().map(|&i| split.train[i]).collect();
                let test_rows: Vec<usize> = fold.test.iter().map(|&i| split.train[i]).collect();
                let tm = match &model {
                    Some(m) => {
                        let mut fresh = TsetlinMachine::new(m.params().clone(), &schema)?;
                        fresh.fit(&data.subset(&train_rows).binarize(&schema)?, None)?;
                        Some(fresh)
                    }
                    None => None,
                };
                per_fold.push(ComparisonTable::new(&score(&train_rows, &test_rows, tm.as_ref())?.1, None));
            }
            let mut mean = per_fold[0].clone();
            for (r, row) in mean.rows.iter_mut().enumerate() {
                let avg = |f: fn(&crate::eval::compare::ComparisonRow<Real>) -> Real| {
                    per_fold.iter().map(|t| f(&t.rows[r])).sum::<Real>() / per_fold.len() as Real
                };
                row.precision = avg(|x| x.precision);
                row.recall = avg(|x| x.recall);
                row.f1 = avg(|x| x.f1);
                row.accuracy = avg(|x| x.accuracy);
            }
            mean.provenance = Some(provenance);
            mean
        }
    };
    write(&dir.join("comparison.csv"), &table.to_csv())?;
    write(&dir.join("comparison.json"), &table.to_json())?;
    for row in &table.rows {
        println!(
            "{:<6} precision {:.3}  recall {:.3}  F1 {:.3}  accuracy {:.3}",
            row.model, row.precision, row.recall, row.f1, row.accuracy
        );
    }
    Ok(())
}

fn cmd_explain(a: &ExplainArgs) -> anyhow::Result<()> {
    let base = load_schema(&a.common.schema)?;
    let model = load_model(&a.model)?;
    let schema = resolve_schema(&base, &model)?;
    let data = load_data(&a.data, &schema)?;
    let rows = data.binarize(&schema)?;
    let provenance = Provenance::new(
        a.common.seed,
        &json!({
            "command": "explain",
            "schema": schema.fingerprint(),
            "data": file_hash(&a.data)?,
            "model": file_hash(&a.model)?,
            "top_k": a.top_k,
        }),
    );
    let mut rules = extract_rules(&model, &schema)?;
    let matrix = activation_matrix(&model, &rows)?;
    attach_fire_counts(&mut rules, &matrix);

    let dir = out_dir(&a.common)?;
    let mut text = provenance.csv_comment();
    for rule in &rules {
        text.push_str(&format!(
            "C{} [fires {}]: {}\n",
            rule.id,
            rule.fire_count.unwrap_or(0),
            rule.render()
        ));
    }
    write(&dir.join("rules.txt"), &text)?;
    write(&dir.join("rules.json"), &to_json(&json!({"provenance": provenance, "rules": rules})))?;
    let heatmap = dir.join("heatmap.csv");
    let legend = dir.join("heatmap_legend.json");
    export_heatmap_data::<Real>(&matrix, &rules, a.top_k, &heatmap, &legend, Some(&provenance))?;
    println!("wrote {}\nwrote {}", heatmap.display(), legend.display());

    if let Some(patient) = &a.patient {
        let row = match data.ids.iter().position(|id| id == patient) {
            Some(r) => r,
            None => match patient.parse::<usize>() {
                Ok(r) if r < rows.len() => r,
                _ => bail!("no patient `{patient}` in {}", a.data.display()),
            },
        };
        let explanation = explain_patient(&model, &rules, &rows[row].0)?;
        let name = format!("patient_{}.txt", data.ids[row]);
        let body = format!("{}patient {}\n{}", provenance.csv_comment(), data.ids[row], explanation.render());
        print!("{}", explanation.render());
        write(&dir.join(name), &body)?;
    }
    Ok(())
}

fn cmd_tune(a: &TuneArgs) -> anyhow::Result<()> {
    let schema = load_schema(&a.common.schema)?;
    let data = load_data(&a.data, &schema)?;
    let space: SearchSpace<Real> = match &a.space {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).context("parsing search space")?
        }
        None => SearchSpace::default(),
    };
    let config = SearchConfig {
        trials: a.trials,
        seed: a.common.seed,
        complexity_weight: a.complexity_weight,
    };
    let split = split_data(&data, a.split.test_fraction, a.common.seed)?;
    let train = data.subset(&split.train);
    let inner = split_data(&train, a.validation_fraction, a.common.seed)?;
    let provenance = Provenance::new(
        a.common.seed,
        &json!({
            "command": "tune",
            "schema": schema.fingerprint(),
            "data": file_hash(&a.data)?,
            "space": space,
            "config": config,
            "test_fraction": a.split.test_fraction,
            "validation_fraction": a.validation_fraction,
            "retrain": a.retrain,
        }),
    );
    let mut log = random_search(&space, &config, &schema, &train.subset(&inner.train), &train.subset(&inner.test))?;
    log.provenance = Some(provenance.clone());
    let failed = log.trials.iter().filter(|t| t.objective.is_none()).count();

    let dir = out_dir(&a.common)?;
    write(&dir.join("trials.json"), &log.to_json())?;
    let best = log.best();
    write(
        &dir.join("best_params.json"),
        &to_json(&json!({
            "provenance": provenance,
            "trial": best.trial,
            "params": best.params,
            "objective": best.objective,
            "validation": best.metrics,
            "complexity": best.complexity,
        })),
    )?;
    println!(
        "{} trials ({failed} failed); best #{}: n_bins {}, clauses {}, T {}, s {}, epochs {} (objective {:.4})",
        log.trials.len(),
        best.trial,
        best.params.n_bins,
        best.params.num_clauses,
        best.params.threshold,
        best.params.specificity,
        best.params.epochs,
        best.objective.unwrap_or(f64::NEG_INFINITY)
    );

    if a.retrain {
        let schema = schema.with_bins(best.params.n_bins)?;
        let params = TmParams { seed: a.common.seed, ..best.params.tm_params() };
        let train_rows = train.binarize(&schema)?;
        let test_rows = data.subset(&split.test).binarize(&schema)?;
        let mut model = TsetlinMachine::new(params, &schema)?;
        model.fit(&train_rows, None)?;
        model.set_provenance(Some(provenance.clone()));
        write(&dir.join("model.json"), &model.to_json())?;
        let metrics = tm_metrics(&model, &test_rows)?;
        write(
            &dir.join("metrics.json"),
            &to_json(&json!({"provenance": provenance, "complexity": model.complexity(), "test": metrics})),
        )?;
        println!("retrained: test macro F1 {:.3}", metrics.macro_f1);
    }
    Ok(())
}
