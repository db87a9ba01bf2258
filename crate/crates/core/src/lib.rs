//! Label-controlled reactive motion synthesis for two-character interactions.
//!
//! Given character A's motion and a (possibly multi-hot) interaction label,
//! a conditional hierarchical seq2seq generator produces character B's
//! reaction. The crate covers the skeletal data model, dataset importers,
//! the generator and multi-class discriminator, adversarial training and
//! the evaluation metrics.

pub mod datasets;
pub mod embedding;
pub mod error;
pub mod metrics;
pub mod model;
pub mod motion;
pub mod nn;
pub mod tape;
pub mod training;

pub use error::{Error, Result};
