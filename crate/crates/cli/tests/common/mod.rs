#![allow(dead_code)]

use reactmix::datasets::{generate_synthetic, DatasetManifest, SyntheticConfig};
use reactmix::model::{Checkpoint, Widths};
use reactmix::training::{Trainer, TrainingConfig};

pub fn manifest(classes: usize, per_class: usize) -> DatasetManifest {
    generate_synthetic(&SyntheticConfig {
        classes,
        per_class,
        frames: 12,
        joints: 6,
        noise: 0.01,
        seed: 3,
        ..SyntheticConfig::default()
    })
    .unwrap()
}

pub fn small_config(seed: u64) -> TrainingConfig {
    TrainingConfig {
        widths: Widths {
            fc: Some(6),
            slice: 6,
            decoder_hidden: 8,
            attention: 8,
            discriminator_hidden: 6,
        },
        epochs: 2,
        batch_size: 2,
        seed,
        ..TrainingConfig::default()
    }
}

/// An untrained checkpoint; weights depend only on `seed`.
pub fn checkpoint(manifest: &DatasetManifest, seed: u64) -> Checkpoint {
    Trainer::new(
        small_config(seed),
        manifest.skeleton.clone(),
        manifest.class_names.clone(),
        &manifest.pairs,
    )
    .unwrap()
    .checkpoint(&manifest.dataset_id)
}
