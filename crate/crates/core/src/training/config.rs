use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Widths;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Rmsprop,
}

/// Switches that remove one component of the full model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablations {
    /// Drop the adversarial term; the discriminator is never updated.
    pub no_discriminator: bool,
    pub no_bone_loss: bool,
    pub no_continuity: bool,
    /// Feed raw coordinates to the structure encoders.
    pub no_fc_encoding: bool,
    /// Withhold the label from the whole-body channel.
    pub no_multi_hot: bool,
}

impl Ablations {
    /// Every single-flag variant, named as on the command line.
    pub fn variants() -> Vec<(&'static str, Ablations)> {
        let none = Ablations::default();
        vec![
            ("no_discriminator", Ablations { no_discriminator: true, ..none }),
            ("no_bone_loss", Ablations { no_bone_loss: true, ..none }),
            ("no_continuity", Ablations { no_continuity: true, ..none }),
            ("no_fc_encoding", Ablations { no_fc_encoding: true, ..none }),
            ("no_multi_hot", Ablations { no_multi_hot: true, ..none }),
        ]
    }
}

/// Reference lengths for the bone loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoneReference {
    /// Rest lengths of the dataset skeleton.
    SkeletonRest,
    /// Per-pair mean bone lengths of the ground-truth reaction.
    GroundTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub lambda_b: f64,
    pub lambda_c: f64,
    pub lambda_1: f64,
    pub learning_rate: f64,
    /// When set, the rate decays geometrically from `learning_rate` at the
    /// first epoch to this value at the last.
    pub final_learning_rate: Option<f64>,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: Optimizer,
    pub ablations: Ablations,
    pub seed: u64,
    /// Global gradient-norm ceiling per update; `None` disables clipping.
    pub grad_clip: Option<f64>,
    pub rmsprop_rho: f64,
    pub rmsprop_eps: f64,
    /// Write a checkpoint every this many epochs; `None` keeps only the final one.
    pub checkpoint_every: Option<usize>,
    pub bone_reference: BoneReference,
    /// Fit per-coordinate input and output normalization on the training pairs.
    pub normalize: bool,
    pub widths: Widths,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            lambda_b: 0.01,
            lambda_c: 1.0,
            lambda_1: 1.0,
            learning_rate: 0.01,
            final_learning_rate: None,
            batch_size: 16,
            epochs: 1600,
            optimizer: Optimizer::Rmsprop,
            ablations: Ablations::default(),
            seed: 0,
            grad_clip: Some(5.0),
            rmsprop_rho: 0.9,
            rmsprop_eps: 1e-7,
            checkpoint_every: None,
            bone_reference: BoneReference::SkeletonRest,
            normalize: true,
            widths: Widths::SBU,
        }
    }
}

impl TrainingConfig {
    pub fn sbu() -> Self {
        Self::default()
    }

    pub fn two_character() -> Self {
        TrainingConfig {
            epochs: 2000,
            widths: Widths::TWO_CHARACTER,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let weights = [self.lambda_b, self.lambda_c, self.lambda_1];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Argument("loss weights must be finite and non-negative".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Argument("learning rate must be positive".into()));
        }
        if let Some(lr) = self.final_learning_rate {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(Error::Argument("final learning rate must be positive".into()));
            }
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Argument("batch size and epochs must be positive".into()));
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return Err(Error::Argument("gradient clip must be positive".into()));
            }
        }
        if !(0.0..1.0).contains(&self.rmsprop_rho) || !(self.rmsprop_eps > 0.0) {
            return Err(Error::Argument("rmsprop rho must be in [0, 1) and eps positive".into()));
        }
        if self.checkpoint_every == Some(0) {
            return Err(Error::Argument("checkpoint cadence must be positive".into()));
        }
        Ok(())
    }

    /// Learning rate used during 0-based epoch `epoch`.
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        match self.final_learning_rate {
            Some(end) if self.epochs > 1 => {
                let s = epoch.min(self.epochs - 1) as f64 / (self.epochs - 1) as f64;
                self.learning_rate * (end / self.learning_rate).powf(s)
            }
            _ => self.learning_rate,
        }
    }

    /// Model widths after applying the encoding ablation.
    pub fn effective_widths(&self) -> Widths {
        Widths {
            fc: if self.ablations.no_fc_encoding { None } else { self.widths.fc },
            ..self.widths
        }
    }
}
