//! Forward kinematics and skeletal measurements.
//!
//! Joint rotations are local to the parent frame. The Euler convention is
//! intrinsic X→Y→Z in degrees, which as a matrix is `R = Rx(a) · Ry(b) · Rz(c)`
//! applied to column vectors. A joint's world position is
//! `p_parent + R_parent_world · offset`, and its world rotation is
//! `R_parent_world · R_local`.

use nalgebra::{Matrix3, Rotation3, Vector3};

use crate::error::{Error, Result};
use crate::motion::{MotionSequence, Skeleton};

/// Intrinsic XYZ Euler angles (degrees) to a rotation matrix.
pub fn euler_xyz_to_matrix(deg: [f64; 3]) -> Matrix3<f64> {
    let [a, b, c] = deg.map(f64::to_radians);
    let rx = Rotation3::from_axis_angle(&Vector3::x_axis(), a);
    let ry = Rotation3::from_axis_angle(&Vector3::y_axis(), b);
    let rz = Rotation3::from_axis_angle(&Vector3::z_axis(), c);
    (rx * ry * rz).into_inner()
}

/// Runs forward kinematics from per-joint Euler angles.
///
/// `joint_angles[t][j]` holds the intrinsic XYZ angles in degrees of joint `j`
/// at frame `t`; `root_translation[t]` is the root's world position.
pub fn forward_kinematics(
    skeleton: &Skeleton,
    joint_angles: &[Vec<[f64; 3]>],
    root_translation: &[[f64; 3]],
    frame_rate: f64,
) -> Result<MotionSequence> {
    let j = skeleton.joint_count();
    for (t, frame) in joint_angles.iter().enumerate() {
        if frame.len() != j {
            return Err(Error::Structural(format!(
                "frame {t} has {} joint rotations, skeleton '{}' has {j} joints",
                frame.len(),
                skeleton.name
            )));
        }
        if let Some(k) = frame.iter().position(|a| a.iter().any(|v| !v.is_finite())) {
            return Err(Error::Data(format!("non-finite angle at frame {t}, joint {k}")));
        }
    }
    let rotations: Vec<Vec<Matrix3<f64>>> = joint_angles
        .iter()
        .map(|frame| frame.iter().map(|&a| euler_xyz_to_matrix(a)).collect())
        .collect();
    forward_kinematics_matrices(skeleton, &rotations, root_translation, frame_rate)
}

/// Forward kinematics from local rotation matrices.
pub fn forward_kinematics_matrices(
    skeleton: &Skeleton,
    rotations: &[Vec<Matrix3<f64>>],
    root_translation: &[[f64; 3]],
    frame_rate: f64,
) -> Result<MotionSequence> {
    let n = skeleton.joint_count();
    if rotations.len() != root_translation.len() {
        return Err(Error::Structural(format!(
            "{} rotation frames but {} root translations",
            rotations.len(),
            root_translation.len()
        )));
    }
    if root_translation.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite root translation".into()));
    }
    let order = skeleton.topological_order();
    let root = skeleton.root();
    let mut coords = Vec::with_capacity(rotations.len() * n * 3);
    let mut world_rot = vec![Matrix3::identity(); n];
    let mut world_pos = vec![Vector3::zeros(); n];
    for (frame, trans) in rotations.iter().zip(root_translation) {
        if frame.len() != n {
            return Err(Error::Structural(format!(
                "rotation frame has {} joints, skeleton has {n}",
                frame.len()
            )));
        }
        for &j in &order {
            let offset = Vector3::from(skeleton.rest_offsets[j]);
            match skeleton.parents[j] {
                None => {
                    debug_assert_eq!(j, root);
                    world_pos[j] = Vector3::from(*trans) + offset;
                    world_rot[j] = frame[j];
                }
                Some(p) => {
                    world_pos[j] = world_pos[p] + world_rot[p] * offset;
                    world_rot[j] = world_rot[p] * frame[j];
                }
            }
        }
        for p in &world_pos {
            coords.extend_from_slice(p.as_slice());
        }
    }
    MotionSequence::new(
        coords,
        rotations.len(),
        n,
        frame_rate,
        skeleton.name.clone(),
    )
}

/// Per-frame length of every parent→child segment, bones ordered as
/// [`Skeleton::bones`]. Returns `T` rows of `J − 1` lengths.
pub fn bone_lengths(seq: &MotionSequence, skeleton: &Skeleton) -> Result<Vec<Vec<f64>>> {
    if seq.joints() != skeleton.joint_count() {
        return Err(Error::Structural(format!(
            "sequence has {} joints, skeleton '{}' has {}",
            seq.joints(),
            skeleton.name,
            skeleton.joint_count()
        )));
    }
    let bones = skeleton.bones();
    Ok((0..seq.frames())
        .map(|t| {
            bones
                .iter()
                .map(|&(p, j)| {
                    let (a, b) = (seq.joint(t, p), seq.joint(t, j));
                    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
                })
                .collect()
        })
        .collect())
}

/// Divides every coordinate by `factor`.
pub fn scale_sequence(seq: &MotionSequence, factor: f64) -> Result<MotionSequence> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::Argument(format!("scale factor {factor} must be positive")));
    }
    seq.map_coords(|v| v / factor)
}
