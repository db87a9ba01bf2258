//! N-class sequence recognizer with the discriminator's architecture.
//!
//! Serves two roles: the frozen feature extractor for FID (trained on real
//! reactions only) and the interaction recognizer of the augmentation study
//! (trained on both characters side by side).

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Discriminator, DiscriminatorConfig, MIN_STD};
use crate::motion::{write_atomic, InteractionPair, MotionSequence};
use crate::nn::ParamStore;
use crate::tape::{Graph, Matrix, ParamSet};
use crate::training::losses::nll;
use crate::training::{clip_global_norm, collect_grads, RmsProp};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub grad_clip: Option<f64>,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            hidden: 32,
            epochs: 40,
            learning_rate: 0.005,
            batch_size: 16,
            seed: 0,
            grad_clip: Some(5.0),
        }
    }
}

/// Recognizer weights plus the per-column input standardization fitted on
/// its training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceClassifier {
    pub network: DiscriminatorConfig,
    pub params: ParamStore,
    pub input_mean: Vec<f64>,
    pub input_std: Vec<f64>,
}

/// Per-frame `[A | B]` rows for recognizing a whole interaction.
pub fn pair_input(pair: &InteractionPair) -> Matrix {
    let (a, b) = (pair.motion_a.to_matrix(), pair.motion_b.to_matrix());
    let mut m = Matrix::zeros(a.nrows(), a.ncols() + b.ncols());
    m.columns_mut(0, a.ncols()).copy_from(&a);
    m.columns_mut(a.ncols(), b.ncols()).copy_from(&b);
    m
}

fn column_stats(inputs: &[Matrix]) -> (Vec<f64>, Vec<f64>) {
    let w = inputs[0].ncols();
    let mut sum = vec![0.0; w];
    let mut sq = vec![0.0; w];
    let mut n = 0.0;
    for m in inputs {
        for r in 0..m.nrows() {
            for c in 0..w {
                sum[c] += m[(r, c)];
                sq[c] += m[(r, c)] * m[(r, c)];
            }
            n += 1.0;
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std = sq.iter().zip(&mean).map(|(q, m)| (q / n - m * m).max(0.0).sqrt().max(MIN_STD)).collect();
    (mean, std)
}

impl SequenceClassifier {
    /// Trains on `(sequence matrix, class)` examples with RMSprop on the
    /// batch-mean negative log-likelihood.
    pub fn train(examples: &[(Matrix, usize)], classes: usize, config: &ClassifierConfig) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::Argument("no classifier training examples".into()));
        }
        if config.epochs == 0 || config.batch_size == 0 || !(config.learning_rate > 0.0) {
            return Err(Error::Argument("classifier epochs, batch size and learning rate must be positive".into()));
        }
        let width = examples[0].0.ncols();
        if examples.iter().any(|(m, c)| m.ncols() != width || m.nrows() == 0 || *c >= classes) {
            return Err(Error::Argument("classifier examples need one width, ≥ 1 frame and valid classes".into()));
        }
        let inputs: Vec<Matrix> = examples.iter().map(|(m, _)| m.clone()).collect();
        let (input_mean, input_std) = column_stats(&inputs);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let network = DiscriminatorConfig {
            input_width: width,
            hidden: config.hidden,
            outputs: classes,
        };
        let mut net = Discriminator::init(network, rng.gen())?;
        let mut clf = SequenceClassifier {
            network,
            params: ParamStore::new(),
            input_mean,
            input_std,
        };
        let normalized: Vec<(Matrix, usize)> = examples.iter().map(|(m, c)| (clf.normalize(m), *c)).collect();
        let mut opt = RmsProp::new(&net.params, config.learning_rate, 0.9, 1e-7);
        let mut order: Vec<usize> = (0..examples.len()).collect();
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(config.batch_size) {
                let scale = 1.0 / batch.len() as f64;
                let d = &net;
                let grads: Vec<Vec<Matrix>> = batch
                    .par_iter()
                    .map(|&i| {
                        let (m, class) = &normalized[i];
                        let g = Graph::new();
                        let p = d.params.bind(&g, ParamSet::Discriminator);
                        let loss = g.scale(nll(&g, d.logits(&p, g.constant(m.clone())), *class), scale);
                        collect_grads(&d.params, &g.backward(loss), ParamSet::Discriminator)
                    })
                    .collect();
                let mut total: Vec<Matrix> = grads[0].clone();
                for g in &grads[1..] {
                    for (t, x) in total.iter_mut().zip(g) {
                        *t += x;
                    }
                }
                if total.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
                    return Err(Error::Numeric {
                        frame: 0,
                        context: "classifier gradient".into(),
                    });
                }
                if let Some(max) = config.grad_clip {
                    clip_global_norm(&mut total, max);
                }
                opt.step(&mut net.params, &total);
            }
        }
        clf.params = net.params;
        Ok(clf)
    }

    fn normalize(&self, m: &Matrix) -> Matrix {
        Matrix::from_fn(m.nrows(), m.ncols(), |r, c| (m[(r, c)] - self.input_mean[c]) / self.input_std[c])
    }

    fn network(&self) -> Result<Discriminator> {
        Discriminator::from_params(self.network, self.params.clone())
    }

    pub fn classes(&self) -> usize {
        self.network.outputs
    }

    pub fn probabilities(&self, m: &Matrix) -> Result<Vec<f64>> {
        self.check_width(m)?;
        self.network()?.probabilities_for(&self.normalize(m))
    }

    /// Most probable class; ties go to the lower index.
    pub fn predict(&self, m: &Matrix) -> Result<usize> {
        let p = self.probabilities(m)?;
        Ok((0..p.len()).fold(0, |best, k| if p[k] > p[best] { k } else { best }))
    }

    /// Penultimate (time-averaged recurrent) features.
    pub fn features(&self, m: &Matrix) -> Result<Vec<f64>> {
        self.check_width(m)?;
        self.network()?.features_for(&self.normalize(m))
    }

    fn check_width(&self, m: &Matrix) -> Result<()> {
        if m.ncols() != self.network.input_width {
            return Err(Error::Structural(format!(
                "classifier expects width {}, got {}",
                self.network.input_width,
                m.ncols()
            )));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, serde_json::to_string(self)?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let clf: SequenceClassifier =
            serde_json::from_str(&text).map_err(|e| Error::Load(format!("{}: {e}", path.display())))?;
        clf.network()?;
        if clf.input_mean.len() != clf.network.input_width || clf.input_std.len() != clf.network.input_width {
            return Err(Error::Load("classifier normalization does not match its input width".into()));
        }
        Ok(clf)
    }
}

/// Fixed map from a single character's motion to a feature vector, taken
/// from the penultimate layer of a recognizer trained on real reactions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureExtractor {
    pub classifier: SequenceClassifier,
}

impl FeatureExtractor {
    /// Trains the recognizer on the real B motions of `pairs`.
    pub fn train(pairs: &[InteractionPair], classes: usize, config: &ClassifierConfig) -> Result<Self> {
        let examples: Vec<(Matrix, usize)> =
            pairs.iter().map(|p| (p.motion_b.to_matrix(), p.class_index)).collect();
        Ok(FeatureExtractor {
            classifier: SequenceClassifier::train(&examples, classes, config)?,
        })
    }

    pub fn dimension(&self) -> usize {
        2 * self.classifier.network.hidden
    }

    pub fn extract(&self, seq: &MotionSequence) -> Result<Vec<f64>> {
        self.classifier.features(&seq.to_matrix())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.classifier.save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(FeatureExtractor {
            classifier: SequenceClassifier::load(path)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{generate_synthetic, SyntheticConfig};

    fn data() -> crate::datasets::DatasetManifest {
        generate_synthetic(&SyntheticConfig {
            classes: 3,
            per_class: 4,
            frames: 8,
            joints: 6,
            noise: 0.01,
            seed: 2,
            ..SyntheticConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn learns_separable_classes() {
        let m = data();
        let examples: Vec<(Matrix, usize)> = m.pairs.iter().map(|p| (pair_input(p), p.class_index)).collect();
        let config = ClassifierConfig {
            hidden: 8,
            epochs: 30,
            learning_rate: 0.01,
            batch_size: 4,
            ..ClassifierConfig::default()
        };
        let clf = SequenceClassifier::train(&examples, 3, &config).unwrap();
        let correct = examples.iter().filter(|(x, c)| clf.predict(x).unwrap() == *c).count();
        assert_eq!(correct, examples.len());
        let again = SequenceClassifier::train(&examples, 3, &config).unwrap();
        assert_eq!(clf, again);
    }

    #[test]
    fn extractor_is_deterministic_and_round_trips() {
        let m = data();
        let config = ClassifierConfig {
            hidden: 4,
            epochs: 2,
            ..ClassifierConfig::default()
        };
        let fx = FeatureExtractor::train(&m.pairs, 3, &config).unwrap();
        let seq = &m.pairs[0].motion_b;
        let f = fx.extract(seq).unwrap();
        assert_eq!(f.len(), fx.dimension());
        assert_eq!(f, fx.extract(seq).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fx.json");
        fx.save(&path).unwrap();
        assert_eq!(FeatureExtractor::load(&path).unwrap().extract(seq).unwrap(), f);
        assert!(fx.extract(&m.pairs[0].motion_a.map_coords(|v| v).unwrap()).is_ok());
        assert!(fx.classifier.features(&pair_input(&m.pairs[0])).is_err());
    }
}
