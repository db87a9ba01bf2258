//! Skeletal motion data model, forward kinematics and pair standardization.

mod format;
mod kinematics;
mod sequence;
mod skeleton;
mod standardize;

pub use format::{write_atomic, SequenceFile, SEQUENCE_FORMAT, SEQUENCE_VERSION};
pub use kinematics::{
    bone_lengths, euler_xyz_to_matrix, forward_kinematics, forward_kinematics_matrices,
    scale_sequence,
};
pub use sequence::{InteractionPair, MotionSequence};
pub use skeleton::{BodyPart, Skeleton};
pub use standardize::{facing_transform, standardization_residual, standardize_pair, YawTransform};

#[cfg(test)]
pub(crate) use skeleton::fixtures;
