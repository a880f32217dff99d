//! Trains on a synthetic cohort and prints the most important clauses.

use tsetlin_clinical::eval::stratified_split;
use tsetlin_clinical::interpret::{activation_matrix, clause_importance, extract_rules};
use tsetlin_clinical::synth::generate_cohort;
use tsetlin_clinical::{CohortConfig, Schema, TmParams, TsetlinMachine};

fn main() -> tsetlin_clinical::Result<()> {
    let schema = Schema::photo_like();
    let cohort = generate_cohort(&CohortConfig::photo_like(1), &schema)?;
    let split = stratified_split(&cohort.data.labels()?, 0.2, 1)?;
    let train = cohort.data.subset(&split.train).binarize(&schema)?;
    let test = cohort.data.subset(&split.test).binarize(&schema)?;

    let mut model = TsetlinMachine::new(TmParams::default(), &schema)?;
    model.fit(&train, None)?;
    println!("test accuracy {:.3}", model.accuracy(&test)?);

    let rules = extract_rules(&model, &schema)?;
    let ranked = clause_importance::<f64>(&activation_matrix(&model, &test)?)?;
    for c in ranked.iter().take(5) {
        let rule = &rules[c.clause];
        println!("C{:<3} importance {:+.2}  {}", c.clause, c.importance, rule.render());
        println!("      condensed: {}", rule.condensed(&schema).join(" AND "));
    }
    Ok(())
}
