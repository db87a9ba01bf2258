//! Generator and multi-class discriminator.

mod attention;
mod checkpoint;
mod config;
mod discriminator;
mod generator;

pub use attention::{attention_weights, context_vector};
pub use checkpoint::{sha256_hex, Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::{ModelConfig, Normalization, Widths, MIN_STD};
pub use discriminator::{discriminate, Discriminator, DiscriminatorConfig};
pub use generator::{Generator, GeneratorTrace};
