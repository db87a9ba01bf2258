//! Versioned checkpoint container.
//!
//! JSON with a format tag and version, the architecture hyperparameters,
//! dataset metadata (id, ordered class names, skeleton) and the generator and
//! discriminator weights as named row-major arrays.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{Discriminator, DiscriminatorConfig, Generator, ModelConfig};
use crate::motion::{write_atomic, Skeleton};
use crate::nn::ParamStore;

pub const CHECKPOINT_FORMAT: &str = "reactmix-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub dataset_id: String,
    pub class_names: Vec<String>,
    pub skeleton: Skeleton,
    pub model: ModelConfig,
    pub discriminator: DiscriminatorConfig,
    pub epoch: usize,
    /// Hex SHA-256 of the training configuration that produced the weights.
    pub config_hash: Option<String>,
    pub generator_params: ParamStore,
    pub discriminator_params: ParamStore,
}

impl Checkpoint {
    pub fn new(
        dataset_id: impl Into<String>,
        class_names: Vec<String>,
        skeleton: Skeleton,
        generator: &Generator,
        discriminator: &Discriminator,
        epoch: usize,
        config_hash: Option<String>,
    ) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            dataset_id: dataset_id.into(),
            class_names,
            skeleton,
            model: generator.config.clone(),
            discriminator: discriminator.config,
            epoch,
            config_hash,
            generator_params: generator.params.clone(),
            discriminator_params: discriminator.params.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Load(format!("'{}' is not a checkpoint format tag", self.format)));
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Load(format!("unsupported checkpoint version {}", self.version)));
        }
        self.skeleton.validate()?;
        self.model.validate()?;
        if self.class_names.len() != self.model.classes() {
            return Err(Error::Load(format!(
                "checkpoint lists {} classes but the model was built for {}",
                self.class_names.len(),
                self.model.classes()
            )));
        }
        if self.skeleton.joint_count() != self.model.joints() {
            return Err(Error::Load("skeleton and model joint counts differ".into()));
        }
        if self.discriminator.outputs != self.model.classes() + 1 {
            return Err(Error::Load(format!(
                "discriminator has {} outputs, expected N + 1 = {}",
                self.discriminator.outputs,
                self.model.classes() + 1
            )));
        }
        self.generator()?;
        self.discriminator()?;
        Ok(())
    }

    pub fn generator(&self) -> Result<Generator> {
        Generator::from_params(self.model.clone(), self.generator_params.clone())
    }

    pub fn discriminator(&self) -> Result<Discriminator> {
        Discriminator::from_params(self.discriminator, self.discriminator_params.clone())
    }

    /// Fails unless `class_names` matches the checkpoint's class list exactly.
    pub fn ensure_classes(&self, class_names: &[String]) -> Result<()> {
        if self.class_names != class_names {
            return Err(Error::Load(format!(
                "checkpoint classes [{}] do not match [{}]",
                self.class_names.join(", "),
                class_names.join(", ")
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::Load(format!("checkpoint: {e}")))?;
        ckpt.validate()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Hex SHA-256 of the serialized checkpoint.
    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(self.to_json()?.as_bytes()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
