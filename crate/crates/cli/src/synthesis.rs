//! Request-level synthesis shared by the `synthesize` command and the service.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use reactmix::datasets::DatasetManifest;
use reactmix::embedding::{label_from_names, resolve_class};
use reactmix::model::{sha256_hex, Checkpoint, Generator};
use reactmix::motion::{MotionSequence, SequenceFile};

/// A loaded checkpoint with its generator built once. Never mutated after
/// construction; the service shares it behind an `Arc`.
pub struct Snapshot {
    pub checkpoint: Checkpoint,
    pub generator: Generator,
    pub hash: String,
}

impl Snapshot {
    pub fn new(checkpoint: Checkpoint) -> reactmix::Result<Self> {
        checkpoint.validate()?;
        let generator = checkpoint.generator()?;
        let hash = checkpoint.hash()?;
        Ok(Snapshot {
            checkpoint,
            generator,
            hash,
        })
    }

    pub fn load(path: &Path) -> reactmix::Result<Self> {
        Self::new(Checkpoint::load(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRef {
    pub manifest: PathBuf,
    pub pair_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisOptions {
    /// Recorded for reproducibility; generation itself is deterministic.
    pub seed: u64,
    pub clamp_labels: bool,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            seed: 0,
            clamp_labels: true,
        }
    }
}

/// Exactly one of `motion_a` and `manifest_ref` must be present. An empty
/// `label_spec` requests the neutral (all-zero) label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisRequest {
    #[serde(default)]
    pub motion_a: Option<SequenceFile>,
    #[serde(default)]
    pub manifest_ref: Option<ManifestRef>,
    #[serde(default)]
    pub label_spec: BTreeMap<String, f64>,
    #[serde(default)]
    pub checkpoint_id: Option<String>,
    #[serde(default)]
    pub options: SynthesisOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisOutput {
    pub id: String,
    pub checkpoint_id: String,
    pub class_names: Vec<String>,
    pub label_vector: Vec<f64>,
    pub seed: u64,
    pub sequence: SequenceFile,
}

#[derive(Debug)]
pub enum SynthesisError {
    /// The request is unusable; `field` is the offending path.
    Request { field: String, message: String },
    /// The request names a checkpoint other than the loaded one.
    Conflict(String),
    /// Generation failed on valid input.
    Internal(reactmix::Error),
}

impl std::fmt::Display for SynthesisError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SynthesisError::Request { field, message } => write!(f, "{field}: {message}"),
            SynthesisError::Conflict(m) => f.write_str(m),
            SynthesisError::Internal(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SynthesisError {}

fn request_error(field: impl Into<String>, message: impl ToString) -> SynthesisError {
    SynthesisError::Request {
        field: field.into(),
        message: message.to_string(),
    }
}

fn input_motion(snapshot: &Snapshot, request: &SynthesisRequest) -> Result<MotionSequence, SynthesisError> {
    let joints = snapshot.checkpoint.skeleton.joint_count();
    let (seq, field) = match (&request.motion_a, &request.manifest_ref) {
        (Some(file), None) => (file.to_sequence().map_err(|e| request_error("motion_a", e))?, "motion_a"),
        (None, Some(r)) => {
            let manifest =
                DatasetManifest::load(&r.manifest).map_err(|e| request_error("manifest_ref.manifest", e))?;
            let pair = manifest
                .pairs
                .into_iter()
                .find(|p| p.id == r.pair_id)
                .ok_or_else(|| request_error("manifest_ref.pair_id", format!("no pair '{}'", r.pair_id)))?;
            (pair.motion_a, "manifest_ref")
        }
        (Some(_), Some(_)) => return Err(request_error("motion_a", "give motion_a or manifest_ref, not both")),
        (None, None) => return Err(request_error("motion_a", "missing; give motion_a or manifest_ref")),
    };
    if seq.joints() != joints {
        return Err(request_error(
            field,
            format!("motion has {} joints, checkpoint skeleton has {joints}", seq.joints()),
        ));
    }
    Ok(seq)
}

/// Content address of a result: the checkpoint hash, the input frames, the
/// resolved label vector and the options.
fn result_id(checkpoint: &str, input: &SequenceFile, label: &[f64], options: &SynthesisOptions) -> String {
    let key = serde_json::json!({
        "checkpoint": checkpoint,
        "frame_rate": input.frame_rate,
        "frames": input.frames,
        "label": label,
        "seed": options.seed,
        "clamp_labels": options.clamp_labels,
    });
    let digest = sha256_hex(key.to_string().as_bytes());
    format!("seq-{}", &digest[..16])
}

pub fn synthesize(snapshot: &Snapshot, request: &SynthesisRequest) -> Result<SynthesisOutput, SynthesisError> {
    if let Some(id) = &request.checkpoint_id {
        if *id != snapshot.hash {
            return Err(SynthesisError::Conflict(format!(
                "request targets checkpoint {id}, loaded checkpoint is {}",
                snapshot.hash
            )));
        }
    }
    let class_names = &snapshot.checkpoint.class_names;
    for name in request.label_spec.keys() {
        resolve_class(name, class_names).map_err(|e| request_error(format!("label_spec.{name}"), e))?;
    }
    let label = label_from_names(&request.label_spec, class_names, request.options.clamp_labels)
        .map_err(|e| request_error("label_spec", e))?;
    let motion_a = input_motion(snapshot, request)?;
    let input = SequenceFile::new(&motion_a, &snapshot.checkpoint.skeleton);
    let motion_b = snapshot
        .generator
        .generate(&motion_a, &label)
        .map_err(SynthesisError::Internal)?;
    Ok(SynthesisOutput {
        id: result_id(&snapshot.hash, &input, &label.values, &request.options),
        checkpoint_id: snapshot.hash.clone(),
        class_names: class_names.clone(),
        label_vector: label.values,
        seed: request.options.seed,
        sequence: SequenceFile::new(&motion_b, &snapshot.checkpoint.skeleton),
    })
}
