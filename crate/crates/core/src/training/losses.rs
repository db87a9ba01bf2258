//! Reconstruction, bone, continuity and adversarial losses.
//!
//! Every loss is a mean over valid frames. A mask marks which frames of a
//! padded sequence are real; padded frames contribute nothing. Each loss has a
//! plain-value form for evaluation and a graph form used for training.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::{MotionSequence, Skeleton};
use crate::tape::{Graph, Matrix, Var};

/// Added under the square root of graph bone lengths so the derivative stays
/// finite at zero length.
pub(crate) const BONE_EPS: f64 = 1e-12;

/// A masked sum and the number of terms it averages over.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MaskedSum {
    pub sum: f64,
    pub count: usize,
}

impl MaskedSum {
    pub fn mean(self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    pub fn merge(self, other: MaskedSum) -> MaskedSum {
        MaskedSum {
            sum: self.sum + other.sum,
            count: self.count + other.count,
        }
    }
}

fn all_valid(frames: usize) -> Vec<bool> {
    vec![true; frames]
}

fn check_mask(mask: &[bool], frames: usize) -> Result<()> {
    if mask.len() != frames {
        return Err(Error::Argument(format!(
            "mask has {} entries for {} frames",
            mask.len(),
            frames
        )));
    }
    Ok(())
}

fn check_pair(generated: &MotionSequence, truth: &MotionSequence) -> Result<()> {
    if !generated.same_shape(truth) {
        return Err(Error::Argument(format!(
            "shape mismatch: {}x{} vs {}x{}",
            generated.frames(),
            generated.joints(),
            truth.frames(),
            truth.joints()
        )));
    }
    Ok(())
}

fn nonempty(s: MaskedSum, what: &str) -> Result<f64> {
    if s.count == 0 {
        return Err(Error::Argument(format!("{what}: no valid frames")));
    }
    Ok(s.mean())
}

/// Mean absolute coordinate difference.
pub fn loss_l1(generated: &MotionSequence, truth: &MotionSequence) -> Result<f64> {
    nonempty(l1_terms(generated, truth, &all_valid(generated.frames()))?, "l1")
}

pub fn loss_l1_masked(generated: &MotionSequence, truth: &MotionSequence, mask: &[bool]) -> Result<f64> {
    nonempty(l1_terms(generated, truth, mask)?, "l1")
}

pub fn l1_terms(generated: &MotionSequence, truth: &MotionSequence, mask: &[bool]) -> Result<MaskedSum> {
    check_pair(generated, truth)?;
    check_mask(mask, generated.frames())?;
    let mut out = MaskedSum::default();
    for t in (0..generated.frames()).filter(|&t| mask[t]) {
        for (a, b) in generated.frame(t).iter().zip(truth.frame(t)) {
            out.sum += (a - b).abs();
            out.count += 1;
        }
    }
    Ok(out)
}

/// Mean over frames and bones of `|length − rest length|`.
pub fn loss_bone(generated: &MotionSequence, skeleton: &Skeleton) -> Result<f64> {
    let targets = skeleton.rest_bone_lengths();
    nonempty(
        bone_terms(generated, skeleton, &targets, &all_valid(generated.frames()))?,
        "bone",
    )
}

/// Bone loss against explicit per-bone target lengths (in [`Skeleton::bones`] order).
pub fn loss_bone_masked(
    generated: &MotionSequence,
    skeleton: &Skeleton,
    targets: &[f64],
    mask: &[bool],
) -> Result<f64> {
    nonempty(bone_terms(generated, skeleton, targets, mask)?, "bone")
}

pub fn bone_terms(
    generated: &MotionSequence,
    skeleton: &Skeleton,
    targets: &[f64],
    mask: &[bool],
) -> Result<MaskedSum> {
    if generated.joints() != skeleton.joint_count() {
        return Err(Error::Structural(format!(
            "sequence has {} joints, skeleton {}",
            generated.joints(),
            skeleton.joint_count()
        )));
    }
    let bones = skeleton.bones();
    if targets.len() != bones.len() {
        return Err(Error::Argument(format!(
            "{} target lengths for {} bones",
            targets.len(),
            bones.len()
        )));
    }
    check_mask(mask, generated.frames())?;
    let mut out = MaskedSum::default();
    for t in (0..generated.frames()).filter(|&t| mask[t]) {
        for (&(p, c), &target) in bones.iter().zip(targets) {
            let (a, b) = (generated.joint(t, p), generated.joint(t, c));
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2) + (b[2] - a[2]).powi(2)).sqrt();
            out.sum += (len - target).abs();
            out.count += 1;
        }
    }
    Ok(out)
}

/// Mean absolute difference of frame-to-frame velocities.
pub fn loss_continuity(generated: &MotionSequence, truth: &MotionSequence) -> Result<f64> {
    nonempty(
        continuity_terms(generated, truth, &all_valid(generated.frames()))?,
        "continuity",
    )
}

pub fn loss_continuity_masked(
    generated: &MotionSequence,
    truth: &MotionSequence,
    mask: &[bool],
) -> Result<f64> {
    nonempty(continuity_terms(generated, truth, mask)?, "continuity")
}

/// A velocity term at `t` counts when frames `t − 1` and `t` are both valid.
pub fn continuity_terms(generated: &MotionSequence, truth: &MotionSequence, mask: &[bool]) -> Result<MaskedSum> {
    check_pair(generated, truth)?;
    check_mask(mask, generated.frames())?;
    if generated.frames() < 2 {
        return Err(Error::Argument("continuity needs at least two frames".into()));
    }
    let mut out = MaskedSum::default();
    for t in (1..generated.frames()).filter(|&t| mask[t] && mask[t - 1]) {
        let (g1, g0) = (generated.frame(t), generated.frame(t - 1));
        let (x1, x0) = (truth.frame(t), truth.frame(t - 1));
        for k in 0..g1.len() {
            out.sum += ((g1[k] - g0[k]) - (x1[k] - x0[k])).abs();
            out.count += 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CganRole {
    Generator,
    Discriminator,
}

fn check_simplex(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Argument(format!("{what} has entries outside [0, 1]")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::Argument(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

/// Adversarial loss over `N + 1` classes, the last being the fidelity class.
///
/// Generator role: `−log p(true_class | fake)`.
/// Discriminator role: `−log p(true_class | real) − log p(N + 1 | fake)`.
pub fn loss_cgan(d_probs_real: &[f64], d_probs_fake: &[f64], true_class: usize, role: CganRole) -> Result<f64> {
    check_simplex(d_probs_real, "real probabilities")?;
    check_simplex(d_probs_fake, "fake probabilities")?;
    if d_probs_real.len() != d_probs_fake.len() || d_probs_real.len() < 2 {
        return Err(Error::Argument("real and fake probabilities need equal length ≥ 2".into()));
    }
    let fidelity = d_probs_real.len() - 1;
    if true_class >= fidelity {
        return Err(Error::Argument(format!(
            "true class {true_class} out of range for {fidelity} classes"
        )));
    }
    Ok(match role {
        CganRole::Generator => -d_probs_fake[true_class].ln(),
        CganRole::Discriminator => -d_probs_real[true_class].ln() - d_probs_fake[fidelity].ln(),
    })
}

fn row_mask(mask: &[bool], cols: usize) -> Arc<Matrix> {
    Arc::new(Matrix::from_fn(mask.len(), cols, |r, _| if mask[r] { 1.0 } else { 0.0 }))
}

/// Graph form of [`l1_terms`]; `generated` is `T × 3J`.
pub(crate) fn l1_sum(g: &Graph, generated: Var, truth: &Matrix, mask: &[bool]) -> (Var, usize) {
    let cols = truth.ncols();
    let diff = g.sub(generated, g.constant(truth.clone()));
    let masked = g.mul_const(g.abs(diff), row_mask(mask, cols));
    let count = mask.iter().filter(|&&m| m).count() * cols;
    (g.sum_all(masked), count)
}

/// Graph form of [`bone_terms`].
pub(crate) fn bone_sum(
    g: &Graph,
    generated: Var,
    bones: &[(usize, usize)],
    targets: &[f64],
    mask: &[bool],
) -> (Var, usize) {
    let (frames, width) = g.shape(generated);
    let nb = bones.len();
    let mut diff = Matrix::zeros(width, 3 * nb);
    let mut gather = Matrix::zeros(3 * nb, nb);
    for (b, &(p, c)) in bones.iter().enumerate() {
        for a in 0..3 {
            diff[(3 * c + a, 3 * b + a)] = 1.0;
            diff[(3 * p + a, 3 * b + a)] = -1.0;
            gather[(3 * b + a, b)] = 1.0;
        }
    }
    let d = g.matmul(generated, g.constant(diff));
    let sq = g.matmul(g.mul(d, d), g.constant(gather));
    let len = g.sqrt(g.add(sq, g.constant(Matrix::from_element(frames, nb, BONE_EPS))));
    let target = g.constant(Matrix::from_fn(frames, nb, |_, b| targets[b]));
    let dev = g.mul_const(g.abs(g.sub(len, target)), row_mask(mask, nb));
    let count = mask.iter().filter(|&&m| m).count() * nb;
    (g.sum_all(dev), count)
}

/// Graph form of [`continuity_terms`]; requires `T ≥ 2`.
pub(crate) fn continuity_sum(g: &Graph, generated: Var, truth: &Matrix, mask: &[bool]) -> (Var, usize) {
    let (frames, cols) = truth.shape();
    let delta = Matrix::from_fn(frames - 1, frames, |r, c| {
        if c == r + 1 {
            1.0
        } else if c == r {
            -1.0
        } else {
            0.0
        }
    });
    let truth_vel = &delta * truth;
    let vel = g.matmul(g.constant(delta), generated);
    let pair_mask: Vec<bool> = (1..frames).map(|t| mask[t] && mask[t - 1]).collect();
    let dev = g.mul_const(
        g.abs(g.sub(vel, g.constant(truth_vel))),
        row_mask(&pair_mask, cols),
    );
    let count = pair_mask.iter().filter(|&&m| m).count() * cols;
    (g.sum_all(dev), count)
}

/// `−log softmax(logits)[class]` for a `1 × K` logit row.
pub(crate) fn nll(g: &Graph, logits: Var, class: usize) -> Var {
    let k = g.shape(logits).1;
    let pick = Arc::new(Matrix::from_fn(1, k, |_, c| if c == class { -1.0 } else { 0.0 }));
    g.sum_all(g.mul_const(g.log_softmax_rows(logits), pick))
}
