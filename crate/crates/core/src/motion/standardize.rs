use crate::error::{Error, Result};
use crate::motion::{InteractionPair, MotionSequence, Skeleton};

/// Horizontal hip vectors shorter than this cannot define a facing direction.
const MIN_FACING_LENGTH: f64 = 1e-9;

/// A rotation about the vertical (y) axis followed by a translation,
/// applied as `p' = R_y · (p − origin)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YawTransform {
    pub origin: [f64; 3],
    pub cos: f64,
    pub sin: f64,
}

impl YawTransform {
    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let d = [p[0] - self.origin[0], p[1] - self.origin[1], p[2] - self.origin[2]];
        [
            d[0] * self.cos + d[2] * self.sin,
            d[1],
            -d[0] * self.sin + d[2] * self.cos,
        ]
    }

    pub fn apply_sequence(&self, seq: &MotionSequence) -> MotionSequence {
        let mut out = seq.clone();
        for t in 0..seq.frames() {
            for j in 0..seq.joints() {
                out.set_joint(t, j, self.apply(seq.joint(t, j)));
            }
        }
        out
    }

    /// A pure yaw by `degrees` plus translation, used to build test fixtures
    /// and augmentations: `p' = R_y(deg) · p + shift`.
    pub fn rotate_then_shift(degrees: f64, shift: [f64; 3]) -> impl Fn([f64; 3]) -> [f64; 3] {
        let (s, c) = degrees.to_radians().sin_cos();
        move |p| {
            [
                p[0] * c + p[2] * s + shift[0],
                p[1] + shift[1],
                -p[0] * s + p[2] * c + shift[2],
            ]
        }
    }
}

/// The rigid transform that puts character A's root at the origin and zeroes
/// its facing yaw, both measured at the first frame.
///
/// Facing is the horizontal projection of the left-hip→right-hip vector; after
/// the transform it points along +x.
pub fn facing_transform(motion_a: &MotionSequence, skeleton: &Skeleton) -> Result<YawTransform> {
    motion_a.validate_for(skeleton)?;
    let origin = motion_a.joint(0, skeleton.root());
    let (l, r) = skeleton.facing_joints;
    let (pl, pr) = (motion_a.joint(0, l), motion_a.joint(0, r));
    let (vx, vz) = (pr[0] - pl[0], pr[2] - pl[2]);
    let len = vx.hypot(vz);
    if len < MIN_FACING_LENGTH {
        return Err(Error::DegeneratePose(format!(
            "hip vector between '{}' and '{}' has no horizontal extent at frame 0",
            skeleton.joint_names[l], skeleton.joint_names[r]
        )));
    }
    Ok(YawTransform {
        origin,
        cos: vx / len,
        sin: vz / len,
    })
}

/// Removes A's first-frame root translation and facing yaw from both
/// characters of a pair. The input is left untouched.
pub fn standardize_pair(pair: &InteractionPair, skeleton: &Skeleton) -> Result<InteractionPair> {
    pair.validate()?;
    pair.motion_b.validate_for(skeleton)?;
    let xf = facing_transform(&pair.motion_a, skeleton)?;
    Ok(InteractionPair {
        motion_a: xf.apply_sequence(&pair.motion_a),
        motion_b: xf.apply_sequence(&pair.motion_b),
        ..pair.clone()
    })
}

/// First-frame root position and facing yaw (radians) of A, used to assert
/// that a pair is standardized.
pub fn standardization_residual(
    pair: &InteractionPair,
    skeleton: &Skeleton,
) -> Result<([f64; 3], f64)> {
    let root = pair.motion_a.joint(0, skeleton.root());
    let (l, r) = skeleton.facing_joints;
    let (pl, pr) = (pair.motion_a.joint(0, l), pair.motion_a.joint(0, r));
    let yaw = (pr[2] - pl[2]).atan2(pr[0] - pl[0]);
    Ok((root, yaw))
}
