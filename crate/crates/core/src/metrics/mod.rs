//! Motion quality metrics, the nearest-neighbour baseline, embedding export
//! and the recognition/augmentation experiment.

mod augmentation;
mod classifier;
mod fid;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use augmentation::{
    augmentation_experiment, synthesize_augmented, AugmentationConfig, AugmentationReport, SplitOutcome,
    AUGMENTED_DATASET_ID,
};
pub use classifier::{pair_input, ClassifierConfig, FeatureExtractor, SequenceClassifier};
pub use fid::{fid, mean_and_covariance, FidResult, EIGEN_TOLERANCE, FID_REGULARIZATION};

use crate::datasets::{DatasetManifest, Fold};
use crate::embedding::encode_label;
use crate::error::{Error, Result};
use crate::model::Checkpoint;
use crate::motion::{InteractionPair, MotionSequence};

/// Average Frame Distance: mean over frames of the Euclidean norm of the
/// stacked `J×3` pose difference.
pub fn afd(generated: &MotionSequence, truth: &MotionSequence) -> Result<f64> {
    if !generated.same_shape(truth) {
        return Err(Error::Argument(format!(
            "afd needs equal shapes, got {}x{} and {}x{}",
            generated.frames(),
            generated.joints(),
            truth.frames(),
            truth.joints()
        )));
    }
    let total: f64 = (0..truth.frames())
        .map(|t| {
            generated.frame(t).iter().zip(truth.frame(t)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
        })
        .sum();
    Ok(total / truth.frames() as f64)
}

/// Index of the training pair whose A motion is closest in AFD to `query_a`
/// (resampled to each candidate's length), and that pair's B motion. Ties go
/// to the earlier pair.
pub fn nn_baseline(train: &[InteractionPair], query_a: &MotionSequence) -> Result<(usize, MotionSequence)> {
    if train.is_empty() {
        return Err(Error::Argument("nearest-neighbour baseline needs training pairs".into()));
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, pair) in train.iter().enumerate() {
        let query = if query_a.frames() == pair.motion_a.frames() {
            query_a.clone()
        } else {
            query_a.resample(pair.motion_a.frames())?
        };
        let d = afd(&query, &pair.motion_a)?;
        if best.map_or(true, |(_, b)| d < b) {
            best = Some((i, d));
        }
    }
    let (i, _) = best.expect("non-empty training set");
    Ok((i, train[i].motion_b.clone()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub pair_id: String,
    pub class_name: String,
    pub afd: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationMetadata {
    /// Diagonal loading applied per class when computing FID.
    pub fid_regularization: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

/// Per-class metrics over a fold's test pairs. Classes with no test pairs
/// are absent from the maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub per_class_afd: BTreeMap<String, f64>,
    pub per_class_fid: BTreeMap<String, f64>,
    pub fold_id: String,
    pub checkpoint_id: String,
    pub config_hash: Option<String>,
    pub per_pair: Vec<PairScore>,
    pub metadata: EvaluationMetadata,
}

fn test_pairs_by_id<'a>(manifest: &'a DatasetManifest, fold: &Fold) -> Result<Vec<&'a InteractionPair>> {
    let mut pairs = Vec::with_capacity(fold.test.len());
    for &i in &fold.test {
        pairs.push(
            manifest
                .pairs
                .get(i)
                .ok_or_else(|| Error::Argument(format!("fold index {i} outside the manifest")))?,
        );
    }
    if pairs.is_empty() {
        return Err(Error::Protocol(format!("fold '{}' has no test pairs", fold.name)));
    }
    pairs.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(pairs)
}

fn class_means(scores: &[PairScore]) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for s in scores {
        let e = acc.entry(s.class_name.clone()).or_insert((0.0, 0));
        e.0 += s.afd;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (sum, n))| (k, sum / n as f64)).collect()
}

/// Generates every test pair's reaction under its one-hot label and scores
/// it against the ground truth. FID is computed per class in the frozen
/// `extractor`'s feature space when one is given; classes with fewer than two
/// test pairs get no FID and a note.
pub fn evaluate(
    checkpoint: &Checkpoint,
    manifest: &DatasetManifest,
    fold: &Fold,
    extractor: Option<&FeatureExtractor>,
) -> Result<EvaluationReport> {
    checkpoint.ensure_classes(&manifest.class_names)?;
    let generator = checkpoint.generator()?;
    let classes = manifest.class_names.len();
    let pairs = test_pairs_by_id(manifest, fold)?;
    let generated: Vec<MotionSequence> = pairs
        .par_iter()
        .map(|p| generator.generate(&p.motion_a, &encode_label(p.class_index, classes)?))
        .collect::<Result<_>>()?;
    let per_pair: Vec<PairScore> = pairs
        .iter()
        .zip(&generated)
        .map(|(p, g)| {
            Ok(PairScore {
                pair_id: p.id.clone(),
                class_name: manifest.class_names[p.class_index].clone(),
                afd: afd(g, &p.motion_b)?,
            })
        })
        .collect::<Result<_>>()?;
    let mut metadata = EvaluationMetadata::default();
    let mut per_class_fid = BTreeMap::new();
    match extractor {
        None => metadata.notes.push("no feature extractor given; FID not computed".into()),
        Some(fx) => {
            for (c, name) in manifest.class_names.iter().enumerate() {
                let members: Vec<usize> = (0..pairs.len()).filter(|&i| pairs[i].class_index == c).collect();
                if members.is_empty() {
                    continue;
                }
                if members.len() < 2 {
                    metadata.notes.push(format!("class '{name}' has {} test pair; FID needs 2", members.len()));
                    continue;
                }
                let real: Vec<Vec<f64>> =
                    members.par_iter().map(|&i| fx.extract(&pairs[i].motion_b)).collect::<Result<_>>()?;
                let fake: Vec<Vec<f64>> =
                    members.par_iter().map(|&i| fx.extract(&generated[i])).collect::<Result<_>>()?;
                let r = fid(&real, &fake)?;
                per_class_fid.insert(name.clone(), r.value);
                metadata.fid_regularization.insert(name.clone(), r.regularization);
            }
        }
    }
    Ok(EvaluationReport {
        per_class_afd: class_means(&per_pair),
        per_class_fid,
        fold_id: fold.name.clone(),
        checkpoint_id: checkpoint.hash()?,
        config_hash: checkpoint.config_hash.clone(),
        per_pair,
        metadata,
    })
}

/// Per-class AFD of the nearest-neighbour baseline on a fold: each test A is
/// matched against the fold's training pairs and the retrieved B is
/// resampled to the test length.
pub fn nn_baseline_scores(manifest: &DatasetManifest, fold: &Fold) -> Result<Vec<PairScore>> {
    let train = manifest.select(&fold.train);
    let pairs = test_pairs_by_id(manifest, fold)?;
    pairs
        .par_iter()
        .map(|p| {
            let (_, b) = nn_baseline(&train, &p.motion_a)?;
            let b = if b.frames() == p.motion_b.frames() { b } else { b.resample(p.motion_b.frames())? };
            Ok(PairScore {
                pair_id: p.id.clone(),
                class_name: manifest.class_names[p.class_index].clone(),
                afd: afd(&b, &p.motion_b)?,
            })
        })
        .collect()
}

pub fn per_class_mean(scores: &[PairScore]) -> BTreeMap<String, f64> {
    class_means(scores)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRow {
    pub pair_id: String,
    pub class_name: String,
    pub vector: Vec<f64>,
}

/// Time-averaged concatenated encoder states of every pair under its one-hot
/// label, in manifest order.
pub fn export_embeddings(checkpoint: &Checkpoint, manifest: &DatasetManifest) -> Result<Vec<EmbeddingRow>> {
    checkpoint.ensure_classes(&manifest.class_names)?;
    let generator = checkpoint.generator()?;
    let classes = manifest.class_names.len();
    manifest
        .pairs
        .par_iter()
        .map(|p| {
            Ok(EmbeddingRow {
                pair_id: p.id.clone(),
                class_name: manifest.class_names[p.class_index].clone(),
                vector: generator.pooled_embedding(&p.motion_a, &encode_label(p.class_index, classes)?)?,
            })
        })
        .collect()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `pair_id,class,v1..vD` with a header row.
pub fn embeddings_csv(rows: &[EmbeddingRow]) -> String {
    let d = rows.first().map_or(0, |r| r.vector.len());
    let mut out = String::from("pair_id,class");
    for k in 1..=d {
        out.push_str(&format!(",v{k}"));
    }
    out.push('\n');
    for r in rows {
        out.push_str(&csv_field(&r.pair_id));
        out.push(',');
        out.push_str(&csv_field(&r.class_name));
        for v in &r.vector {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}
