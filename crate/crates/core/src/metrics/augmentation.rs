//! Recognition accuracy with and without generated interactions.
//!
//! The Original split is the class-stratified half-half split of the real
//! pairs. The Augmented split adds `injected_per_split` generated pairs to
//! each side. Generated pairs are laid out class-interleaved so any prefix is
//! balanced to within one pair per class.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classifier::{pair_input, ClassifierConfig, SequenceClassifier};
use crate::datasets::{stratified_split, DatasetManifest};
use crate::embedding::encode_label;
use crate::error::{Error, Result};
use crate::model::Checkpoint;
use crate::motion::InteractionPair;
use crate::tape::Matrix;

pub const AUGMENTED_DATASET_ID: &str = "augmented";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentationConfig {
    /// Generated pairs per class.
    pub per_class: usize,
    /// Generated pairs added to each of the train and test sides.
    pub injected_per_split: usize,
    /// Seed of the half-half split and of source selection.
    pub seed: u64,
    pub classifier: ClassifierConfig,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        AugmentationConfig {
            per_class: 50,
            injected_per_split: 25,
            seed: 0,
            classifier: ClassifierConfig::default(),
        }
    }
}

/// Generates `per_class` reactions for every class, each driven by the A
/// motion of a real pair of that class under the class's one-hot label.
/// Sources are drawn by a seeded shuffle, cycling when a class has fewer
/// pairs than `per_class`. Output order is `k`-major: `(k=0, c=0..N), (k=1,
/// c=0..N), ...`.
pub fn synthesize_augmented(
    checkpoint: &Checkpoint,
    manifest: &DatasetManifest,
    per_class: usize,
    seed: u64,
) -> Result<Vec<InteractionPair>> {
    checkpoint.ensure_classes(&manifest.class_names)?;
    let classes = manifest.class_names.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sources: Vec<Vec<usize>> = Vec::with_capacity(classes);
    for (c, name) in manifest.class_names.iter().enumerate() {
        let mut members: Vec<usize> = (0..manifest.pairs.len()).filter(|&i| manifest.pairs[i].class_index == c).collect();
        if members.is_empty() {
            return Err(Error::Protocol(format!("class '{name}' has no pairs to drive generation")));
        }
        members.shuffle(&mut rng);
        sources.push(members);
    }
    let jobs: Vec<(usize, usize)> = (0..per_class).flat_map(|k| (0..classes).map(move |c| (k, c))).collect();
    let generator = checkpoint.generator()?;
    jobs.par_iter()
        .map(|&(k, c)| {
            let src = &manifest.pairs[sources[c][k % sources[c].len()]];
            let b = generator.generate(&src.motion_a, &encode_label(c, classes)?)?;
            InteractionPair::new(
                format!("gen-{}-{k:03}", manifest.class_names[c]),
                src.motion_a.clone(),
                b,
                c,
                format!("from:{}", src.id),
                AUGMENTED_DATASET_ID,
            )
        })
        .collect()
}

/// Accuracy of one split. `confusion[true][predicted]`; `per_class_accuracy`
/// is `None` for classes absent from the test side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitOutcome {
    pub name: String,
    pub train_count: usize,
    pub test_count: usize,
    pub confusion: Vec<Vec<usize>>,
    pub per_class_accuracy: Vec<Option<f64>>,
    pub overall_accuracy: f64,
}

impl SplitOutcome {
    fn score(name: &str, classifier: &SequenceClassifier, train_count: usize, test: &[(Matrix, usize)]) -> Result<Self> {
        let n = classifier.classes();
        let predictions: Vec<usize> = test.par_iter().map(|(x, _)| classifier.predict(x)).collect::<Result<_>>()?;
        let mut confusion = vec![vec![0; n]; n];
        for ((_, truth), p) in test.iter().zip(&predictions) {
            confusion[*truth][*p] += 1;
        }
        let per_class_accuracy = confusion
            .iter()
            .enumerate()
            .map(|(c, row)| {
                let total: usize = row.iter().sum();
                (total > 0).then(|| row[c] as f64 / total as f64)
            })
            .collect();
        let correct: usize = (0..n).map(|c| confusion[c][c]).sum();
        Ok(SplitOutcome {
            name: name.to_string(),
            train_count,
            test_count: test.len(),
            confusion,
            per_class_accuracy,
            overall_accuracy: correct as f64 / test.len() as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationReport {
    pub class_names: Vec<String>,
    pub synthesized: usize,
    pub original: SplitOutcome,
    pub augmented: SplitOutcome,
}

fn examples(pairs: &[&InteractionPair]) -> Vec<(Matrix, usize)> {
    pairs.iter().map(|p| (pair_input(p), p.class_index)).collect()
}

/// Trains the N-class recognizer on the Original and Augmented splits and
/// scores each on its own test side.
pub fn augmentation_experiment(
    checkpoint: &Checkpoint,
    manifest: &DatasetManifest,
    config: &AugmentationConfig,
) -> Result<AugmentationReport> {
    let classes = manifest.class_names.len();
    if config.per_class == 0 {
        return Err(Error::Argument("per_class must be positive".into()));
    }
    let counts = manifest.class_counts();
    if let Some(c) = (0..classes).find(|&c| counts.get(c).copied().unwrap_or(0) < 2) {
        return Err(Error::Protocol(format!(
            "class '{}' needs at least 2 real pairs for a half-half split",
            manifest.class_names[c]
        )));
    }
    let synthesized = config.per_class * classes;
    if 2 * config.injected_per_split > synthesized {
        return Err(Error::Protocol(format!(
            "cannot inject {} generated pairs per side from {synthesized}",
            config.injected_per_split
        )));
    }
    let generated = synthesize_augmented(checkpoint, manifest, config.per_class, config.seed)?;
    let labels: Vec<usize> = manifest.pairs.iter().map(|p| p.class_index).collect();
    let fold = stratified_split(&labels, 1, 1, config.seed);
    let real_train: Vec<&InteractionPair> = fold.train.iter().map(|&i| &manifest.pairs[i]).collect();
    let real_test: Vec<&InteractionPair> = fold.test.iter().map(|&i| &manifest.pairs[i]).collect();
    let k = config.injected_per_split;
    let aug_train: Vec<&InteractionPair> = real_train.iter().copied().chain(&generated[..k]).collect();
    let aug_test: Vec<&InteractionPair> = real_test.iter().copied().chain(&generated[k..2 * k]).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut run = |name: &str, train: &[&InteractionPair], test: &[&InteractionPair]| -> Result<SplitOutcome> {
        let clf_config = ClassifierConfig {
            seed: rng.gen(),
            ..config.classifier
        };
        let clf = SequenceClassifier::train(&examples(train), classes, &clf_config)?;
        SplitOutcome::score(name, &clf, train.len(), &examples(test))
    };
    let original = run("original", &real_train, &real_test)?;
    let augmented = run("augmented", &aug_train, &aug_test)?;
    Ok(AugmentationReport {
        class_names: manifest.class_names.clone(),
        synthesized: generated.len(),
        original,
        augmented,
    })
}
