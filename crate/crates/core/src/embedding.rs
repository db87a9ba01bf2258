//! Multi-hot class labels and the six-structure front end of the generator.
//!
//! The input pose is split into the five body parts plus the whole body.
//! Only the whole-body channel sees the label: the same label vector is
//! appended to every frame before that channel's affine encoding.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::{BodyPart, MotionSequence, Skeleton};
use crate::nn::{init_linear, linear, Bound, ParamStore};
use crate::tape::{Graph, Matrix, ParamSet, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// Exactly one entry is 1, the rest 0.
    TrainOneHot,
    /// Entries in [−1, 1]: positive performs, 0 is neutral, negative avoids.
    InferenceMultiHot,
    /// Any finite values; opted into explicitly.
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelVector {
    pub values: Vec<f64>,
    pub mode: LabelMode,
}

impl LabelVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn zeros(classes: usize) -> Self {
        LabelVector {
            values: vec![0.0; classes],
            mode: LabelMode::InferenceMultiHot,
        }
    }
}

/// One-hot indicator of `class_index` among `classes`.
pub fn encode_label(class_index: usize, classes: usize) -> Result<LabelVector> {
    if class_index >= classes {
        return Err(Error::Argument(format!(
            "class index {class_index} out of range for {classes} classes"
        )));
    }
    let mut values = vec![0.0; classes];
    values[class_index] = 1.0;
    Ok(LabelVector {
        values,
        mode: LabelMode::TrainOneHot,
    })
}

/// Builds a multi-hot vector from `class → value` entries in [−1, 1];
/// unspecified classes are neutral (0).
pub fn make_multi_hot(spec: &BTreeMap<usize, f64>, classes: usize) -> Result<LabelVector> {
    let mut values = vec![0.0; classes];
    for (&c, &v) in spec {
        if c >= classes {
            return Err(Error::Argument(format!(
                "class index {c} out of range for {classes} classes"
            )));
        }
        if !(-1.0..=1.0).contains(&v) {
            return Err(Error::Argument(format!(
                "label value {v} for class {c} is outside [-1, 1]"
            )));
        }
        values[c] = v;
    }
    Ok(LabelVector {
        values,
        mode: LabelMode::InferenceMultiHot,
    })
}

/// Like [`make_multi_hot`] without the range check (finite values only).
pub fn make_unbounded(spec: &BTreeMap<usize, f64>, classes: usize) -> Result<LabelVector> {
    let mut values = vec![0.0; classes];
    for (&c, &v) in spec {
        if c >= classes {
            return Err(Error::Argument(format!(
                "class index {c} out of range for {classes} classes"
            )));
        }
        if !v.is_finite() {
            return Err(Error::Argument(format!("label value for class {c} is not finite")));
        }
        values[c] = v;
    }
    Ok(LabelVector {
        values,
        mode: LabelMode::Unbounded,
    })
}

/// Resolves a class name against `class_names`: exact match first, then a
/// unique prefix (`shake` → `shake-hands`).
pub fn resolve_class(name: &str, class_names: &[String]) -> Result<usize> {
    let key = name.trim().to_ascii_lowercase();
    if let Some(i) = class_names.iter().position(|c| c.to_ascii_lowercase() == key) {
        return Ok(i);
    }
    let matches: Vec<usize> = class_names
        .iter()
        .enumerate()
        .filter(|(_, c)| c.to_ascii_lowercase().starts_with(&key))
        .map(|(i, _)| i)
        .collect();
    match matches.as_slice() {
        [i] if !key.is_empty() => Ok(*i),
        _ => Err(Error::Validation(format!(
            "unknown class '{name}'; valid classes: {}",
            class_names.join(", ")
        ))),
    }
}

/// Parses `"hug=+1,kick=-1"` into a `class index → value` map.
pub fn parse_label_spec(text: &str, class_names: &[String]) -> Result<BTreeMap<usize, f64>> {
    let mut spec = BTreeMap::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Validation(format!("label entry '{item}' is not NAME=VALUE")))?;
        let value: f64 = value
            .trim()
            .trim_start_matches('+')
            .parse()
            .map_err(|_| Error::Validation(format!("label value in '{item}' is not a number")))?;
        spec.insert(resolve_class(name, class_names)?, value);
    }
    Ok(spec)
}

/// Builds an inference label from named entries. With `clamp`, values are
/// clipped into [−1, 1]; without it any finite value passes through.
pub fn label_from_names(
    entries: &BTreeMap<String, f64>,
    class_names: &[String],
    clamp: bool,
) -> Result<LabelVector> {
    let mut spec = BTreeMap::new();
    for (name, &v) in entries {
        spec.insert(resolve_class(name, class_names)?, v);
    }
    if clamp {
        for v in spec.values_mut() {
            if !v.is_finite() {
                return Err(Error::Argument("label values must be finite".into()));
            }
            *v = v.clamp(-1.0, 1.0);
        }
        make_multi_hot(&spec, class_names.len())
    } else {
        make_unbounded(&spec, class_names.len())
    }
}

/// One of the six encoder structures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    Part(BodyPart),
    WholeBody,
}

impl Structure {
    pub const ALL: [Structure; 6] = [
        Structure::Part(BodyPart::LeftArm),
        Structure::Part(BodyPart::RightArm),
        Structure::Part(BodyPart::LeftLeg),
        Structure::Part(BodyPart::RightLeg),
        Structure::Part(BodyPart::Trunk),
        Structure::WholeBody,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Structure::Part(p) => p.name(),
            Structure::WholeBody => "whole",
        }
    }
}

/// Shape of the structural front end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderLayout {
    pub joints: usize,
    pub classes: usize,
    /// Joint indices per body part, in [`BodyPart::ALL`] order.
    pub parts: Vec<Vec<usize>>,
    /// Width of each structure's affine encoding; `None` feeds raw coordinates.
    pub fc_width: Option<usize>,
    /// Whether the whole-body channel receives the label.
    pub label_conditioning: bool,
}

impl EncoderLayout {
    pub fn from_skeleton(
        skeleton: &Skeleton,
        classes: usize,
        fc_width: Option<usize>,
        label_conditioning: bool,
    ) -> Self {
        EncoderLayout {
            joints: skeleton.joint_count(),
            classes,
            parts: BodyPart::ALL.iter().map(|&p| skeleton.part(p).to_vec()).collect(),
            fc_width,
            label_conditioning,
        }
    }

    /// Raw input width of each structure before its affine encoding.
    pub fn input_width(&self, s: Structure) -> usize {
        match s {
            Structure::Part(p) => 3 * self.parts[part_slot(p)].len(),
            Structure::WholeBody => {
                3 * self.joints + if self.label_conditioning { self.classes } else { 0 }
            }
        }
    }

    /// Width of each structure's encoded feature sequence.
    pub fn output_width(&self, s: Structure) -> usize {
        self.fc_width.unwrap_or_else(|| self.input_width(s))
    }

    pub fn validate(&self) -> Result<()> {
        if self.parts.len() != 5 {
            return Err(Error::Structural(format!(
                "expected 5 body parts, got {}",
                self.parts.len()
            )));
        }
        let mut seen = vec![false; self.joints];
        for &j in self.parts.iter().flatten() {
            if j >= self.joints || std::mem::replace(&mut seen[j], true) {
                return Err(Error::Structural(format!(
                    "body-part joint {j} is out of range or duplicated"
                )));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Structural("body parts do not cover every joint".into()));
        }
        Ok(())
    }
}

fn part_slot(p: BodyPart) -> usize {
    BodyPart::ALL.iter().position(|&q| q == p).expect("known part")
}

pub fn init_encoder_fc(layout: &EncoderLayout, store: &mut ParamStore, rng: &mut impl Rng) {
    if let Some(width) = layout.fc_width {
        for s in Structure::ALL {
            init_linear(store, rng, &format!("enc.{}.fc", s.name()), layout.input_width(s), width);
        }
    }
}

/// `3J × 3|part|` column selector for a body part.
fn selector(joints: usize, part: &[usize]) -> Matrix {
    let mut m = Matrix::zeros(3 * joints, 3 * part.len());
    for (k, &j) in part.iter().enumerate() {
        for a in 0..3 {
            m[(3 * j + a, 3 * k + a)] = 1.0;
        }
    }
    m
}

/// Builds the six structure feature sequences for a `T × 3J` pose input.
pub(crate) fn encode_structures(
    p: &Bound,
    layout: &EncoderLayout,
    poses: Var,
    label: &[f64],
) -> Vec<Var> {
    let g = p.graph;
    let steps = g.shape(poses).0;
    Structure::ALL
        .iter()
        .map(|&s| {
            let raw = match s {
                Structure::Part(part) => {
                    let sel = g.constant(selector(layout.joints, &layout.parts[part_slot(part)]));
                    g.matmul(poses, sel)
                }
                Structure::WholeBody if layout.label_conditioning => {
                    let rows = Matrix::from_fn(steps, label.len(), |_, c| label[c]);
                    g.concat_cols(&[poses, g.constant(rows)])
                }
                Structure::WholeBody => poses,
            };
            match layout.fc_width {
                Some(_) => g.tanh(linear(p, &format!("enc.{}.fc", s.name()), raw)),
                None => raw,
            }
        })
        .collect()
}

/// Per-structure feature sequences of one input motion.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralEncoding {
    /// Six `T × d` matrices in [`Structure::ALL`] order.
    pub per_structure: Vec<Matrix>,
    pub label_attached_to: Structure,
}

impl StructuralEncoding {
    pub fn get(&self, s: Structure) -> &Matrix {
        let i = Structure::ALL.iter().position(|&q| q == s).expect("known structure");
        &self.per_structure[i]
    }
}

/// Splits `seq` into the six structures and applies each structure's affine
/// encoding from `params`, with the label appended to the whole-body channel.
pub fn partition_and_encode(
    seq: &MotionSequence,
    skeleton: &Skeleton,
    label: &LabelVector,
    layout: &EncoderLayout,
    params: &ParamStore,
) -> Result<StructuralEncoding> {
    if label.len() != layout.classes {
        return Err(Error::Argument(format!(
            "label has {} entries, model expects {}",
            label.len(),
            layout.classes
        )));
    }
    if seq.joints() != skeleton.joint_count() || seq.joints() != layout.joints {
        return Err(Error::Structural(format!(
            "sequence has {} joints, skeleton/layout expect {}",
            seq.joints(),
            layout.joints
        )));
    }
    layout.validate()?;
    let g = Graph::new();
    let bound = params.bind(&g, ParamSet::Generator);
    let poses = g.constant_arc(Arc::new(seq.to_matrix()));
    let vars = encode_structures(&bound, layout, poses, &label.values);
    Ok(StructuralEncoding {
        per_structure: vars.iter().map(|&v| (*g.value(v)).clone()).collect(),
        label_attached_to: Structure::WholeBody,
    })
}
