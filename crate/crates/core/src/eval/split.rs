use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::Label;

/// Row indices of a train/test partition, each ascending.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn class_members(labels: &[Label], minimum: usize) -> Result<[Vec<usize>; 2]> {
    let mut members = [Vec::new(), Vec::new()];
    for (i, y) in labels.iter().enumerate() {
        members[y.index()].push(i);
    }
    for (class, m) in members.iter().enumerate() {
        if m.len() < minimum {
            return Err(Error::SingleClass(format!(
                "class {} has {} member(s); at least {minimum} needed",
                Label::from_bool(class == 1),
                m.len()
            )));
        }
    }
    Ok(members)
}

/// Per class, shuffles members with a seeded RNG and sends
/// `round(count · test_fraction)` of them (kept within `1..count`) to the test side.
pub fn stratified_split(labels: &[Label], test_fraction: f64, seed: u64) -> Result<Split> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParams(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let members = class_members(labels, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = Split { train: Vec::new(), test: Vec::new() };
    for mut m in members {
        m.shuffle(&mut rng);
        let take = ((m.len() as f64 * test_fraction).round() as usize).clamp(1, m.len() - 1);
        split.test.extend_from_slice(&m[..take]);
        split.train.extend_from_slice(&m[take..]);
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// `k` stratified folds; fold `i` tests on every `k`-th shuffled member of each class.
pub fn stratified_k_fold(labels: &[Label], k: usize, seed: u64) -> Result<Vec<Split>> {
    if k < 2 {
        return Err(Error::InvalidParams("k-fold needs k ≥ 2".into()));
    }
    let members = class_members(labels, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; labels.len()];
    for mut m in members {
        m.shuffle(&mut rng);
        for (j, &i) in m.iter().enumerate() {
            fold_of[i] = j % k;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| fold_of[i] == f);
            Split { train, test }
        })
        .collect())
}
