use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::generator::{check_finite_rows, check_same_layout};
use crate::motion::MotionSequence;
use crate::nn::{bilstm, init_bilstm, init_linear, linear, Bound, ParamStore};
use crate::tape::{softmax_rows, Graph, Matrix, ParamSet, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscriminatorConfig {
    /// Per-frame input width (3J for a single character).
    pub input_width: usize,
    /// Per-direction hidden size of both layers.
    pub hidden: usize,
    /// Number of output classes: N + 1 for the adversarial critic, N for a
    /// plain recognizer.
    pub outputs: usize,
}

/// Two stacked bidirectional LSTM layers, time-averaged, then an affine map
/// to class logits.
#[derive(Debug, Clone)]
pub struct Discriminator {
    pub config: DiscriminatorConfig,
    pub params: ParamStore,
}

impl Discriminator {
    pub fn init(config: DiscriminatorConfig, seed: u64) -> Result<Self> {
        if config.input_width == 0 || config.hidden == 0 || config.outputs < 2 {
            return Err(Error::Argument(format!("invalid discriminator config {config:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        init_bilstm(&mut params, &mut rng, "l1", config.input_width, config.hidden);
        init_bilstm(&mut params, &mut rng, "l2", 2 * config.hidden, config.hidden);
        init_linear(&mut params, &mut rng, "head", 2 * config.hidden, config.outputs);
        Ok(Discriminator { config, params })
    }

    pub fn from_params(config: DiscriminatorConfig, params: ParamStore) -> Result<Self> {
        let reference = Discriminator::init(config, 0)?;
        check_same_layout(&reference.params, &params, "discriminator")?;
        Ok(Discriminator { config, params })
    }

    /// Time-averaged second-layer states (`1 × 2·hidden`).
    pub(crate) fn features(&self, p: &Bound, seq: Var) -> Var {
        let l1 = bilstm(p, "l1", seq);
        let l2 = bilstm(p, "l2", l1);
        p.graph.mean_rows(l2)
    }

    /// Class logits (`1 × outputs`).
    pub(crate) fn logits(&self, p: &Bound, seq: Var) -> Var {
        let f = self.features(p, seq);
        linear(p, "head", f)
    }

    fn check_input(&self, m: &Matrix) -> Result<()> {
        if m.ncols() != self.config.input_width {
            return Err(Error::Structural(format!(
                "input width {} does not match discriminator width {}",
                m.ncols(),
                self.config.input_width
            )));
        }
        check_finite_rows(m, "discriminator input")
    }

    /// Class probabilities for a `T × input_width` sequence matrix.
    pub fn probabilities_for(&self, m: &Matrix) -> Result<Vec<f64>> {
        self.check_input(m)?;
        let g = Graph::new();
        let p = self.params.bind(&g, ParamSet::Discriminator);
        let logits = self.logits(&p, g.constant_arc(Arc::new(m.clone())));
        Ok(softmax_rows(&g.value(logits)).iter().copied().collect())
    }

    /// Penultimate features for a `T × input_width` sequence matrix.
    pub fn features_for(&self, m: &Matrix) -> Result<Vec<f64>> {
        self.check_input(m)?;
        let g = Graph::new();
        let p = self.params.bind(&g, ParamSet::Discriminator);
        let f = self.features(&p, g.constant_arc(Arc::new(m.clone())));
        Ok(g.value(f).iter().copied().collect())
    }
}

/// Class probabilities over N real classes plus the fidelity (fake) class,
/// computed from B's motion alone.
pub fn discriminate(motion_b: &MotionSequence, d: &Discriminator) -> Result<Vec<f64>> {
    d.probabilities_for(&motion_b.to_matrix())
}
