use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::DatasetManifest;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitProtocol {
    LeaveOneSubjectOut,
    #[serde(rename = "ratio_3_1")]
    Ratio3To1,
    HalfHalf,
}

impl SplitProtocol {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "leave_one_subject_out" | "loso" => Ok(SplitProtocol::LeaveOneSubjectOut),
            "ratio_3_1" => Ok(SplitProtocol::Ratio3To1),
            "half_half" => Ok(SplitProtocol::HalfHalf),
            other => Err(Error::Argument(format!(
                "unknown split protocol '{other}' (expected leave_one_subject_out, ratio_3_1 or half_half)"
            ))),
        }
    }
}

/// Sorted, disjoint train and test pair indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub name: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn make_splits(manifest: &DatasetManifest, protocol: SplitProtocol, seed: u64) -> Result<Vec<Fold>> {
    let classes: Vec<usize> = manifest.pairs.iter().map(|p| p.class_index).collect();
    match protocol {
        SplitProtocol::LeaveOneSubjectOut => {
            let subjects: Vec<&str> = manifest.pairs.iter().map(|p| p.subject_id.as_str()).collect();
            leave_one_subject_out(&subjects)
        }
        SplitProtocol::Ratio3To1 => Ok(vec![stratified_split(&classes, 3, 1, seed)]),
        SplitProtocol::HalfHalf => Ok(vec![stratified_split(&classes, 1, 1, seed)]),
    }
}

/// One fold per distinct subject id, in sorted id order.
pub fn leave_one_subject_out(subjects: &[&str]) -> Result<Vec<Fold>> {
    if subjects.iter().any(|s| s.is_empty()) {
        return Err(Error::Protocol(
            "leave-one-subject-out needs a subject id on every pair".into(),
        ));
    }
    let ids: BTreeSet<&str> = subjects.iter().copied().collect();
    Ok(ids
        .into_iter()
        .map(|id| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..subjects.len()).partition(|&i| subjects[i] == id);
            Fold {
                name: id.to_string(),
                train,
                test,
            }
        })
        .collect())
}

/// Class-stratified `train : test = a : b` split.
///
/// Each class is shuffled, the classes are laid end to end, and position `i`
/// goes to test exactly when `⌊(i+1)·b/(a+b)⌋ > ⌊i·b/(a+b)⌋`. The test side
/// gets `⌊n·b/(a+b)⌋` pairs and every class is within one pair of its exact
/// share.
pub fn stratified_split(classes: &[usize], a: usize, b: usize, seed: u64) -> Fold {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_classes = classes.iter().map(|&c| c + 1).max().unwrap_or(0);
    let mut order = Vec::with_capacity(classes.len());
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..classes.len()).filter(|&i| classes[i] == c).collect();
        members.shuffle(&mut rng);
        order.extend(members);
    }
    let total = a + b;
    let mut fold = Fold {
        name: format!("{a}:{b}"),
        train: Vec::new(),
        test: Vec::new(),
    };
    for (i, &idx) in order.iter().enumerate() {
        if (i + 1) * b / total > i * b / total {
            fold.test.push(idx);
        } else {
            fold.train.push(idx);
        }
    }
    fold.train.sort_unstable();
    fold.test.sort_unstable();
    fold
}
