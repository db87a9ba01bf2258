use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::motion::Skeleton;

/// A `T × J × 3` array of joint positions for one character.
///
/// Coordinates are stored flat, frame-major then joint-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    coords: Vec<f64>,
    frames: usize,
    joints: usize,
    pub frame_rate: f64,
    pub skeleton_ref: String,
}

impl MotionSequence {
    /// Builds a sequence from flat coordinates. Requires at least one frame
    /// and finite values; use [`MotionSequence::validate_for`] for the full
    /// dataset contract (T ≥ 2, J matching a skeleton).
    pub fn new(
        coords: Vec<f64>,
        frames: usize,
        joints: usize,
        frame_rate: f64,
        skeleton_ref: impl Into<String>,
    ) -> Result<Self> {
        if frames == 0 || joints == 0 {
            return Err(Error::Structural(format!(
                "sequence needs at least one frame and joint, got {frames}x{joints}"
            )));
        }
        if coords.len() != frames * joints * 3 {
            return Err(Error::Structural(format!(
                "expected {} coordinates for {frames}x{joints}x3, got {}",
                frames * joints * 3,
                coords.len()
            )));
        }
        if !(frame_rate.is_finite() && frame_rate > 0.0) {
            return Err(Error::Argument(format!("frame rate {frame_rate} must be positive")));
        }
        if let Some(i) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite coordinate at frame {}, joint {}",
                i / (joints * 3),
                (i / 3) % joints
            )));
        }
        Ok(MotionSequence {
            coords,
            frames,
            joints,
            frame_rate,
            skeleton_ref: skeleton_ref.into(),
        })
    }

    pub fn from_frames(
        frames: &[Vec<[f64; 3]>],
        frame_rate: f64,
        skeleton_ref: impl Into<String>,
    ) -> Result<Self> {
        let joints = frames.first().map(Vec::len).unwrap_or(0);
        if frames.iter().any(|f| f.len() != joints) {
            return Err(Error::Structural("ragged frame list".into()));
        }
        let coords = frames.iter().flatten().flatten().copied().collect();
        Self::new(coords, frames.len(), joints, frame_rate, skeleton_ref)
    }

    /// Builds from a `T × 3J` matrix, one frame per row.
    pub fn from_matrix(
        m: &DMatrix<f64>,
        frame_rate: f64,
        skeleton_ref: impl Into<String>,
    ) -> Result<Self> {
        if m.ncols() % 3 != 0 {
            return Err(Error::Structural(format!(
                "pose width {} is not a multiple of 3",
                m.ncols()
            )));
        }
        let mut coords = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            coords.extend(m.row(r).iter().copied());
        }
        Self::new(coords, m.nrows(), m.ncols() / 3, frame_rate, skeleton_ref)
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn joints(&self) -> usize {
        self.joints
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The stacked `3J` pose vector of frame `t`.
    pub fn frame(&self, t: usize) -> &[f64] {
        let w = self.joints * 3;
        &self.coords[t * w..(t + 1) * w]
    }

    pub fn joint(&self, t: usize, j: usize) -> [f64; 3] {
        let i = (t * self.joints + j) * 3;
        [self.coords[i], self.coords[i + 1], self.coords[i + 2]]
    }

    pub(crate) fn set_joint(&mut self, t: usize, j: usize, p: [f64; 3]) {
        let i = (t * self.joints + j) * 3;
        self.coords[i..i + 3].copy_from_slice(&p);
    }

    pub fn to_frames(&self) -> Vec<Vec<[f64; 3]>> {
        (0..self.frames)
            .map(|t| (0..self.joints).map(|j| self.joint(t, j)).collect())
            .collect()
    }

    /// `T × 3J` matrix, one frame per row.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.frames, self.joints * 3, &self.coords)
    }

    pub fn map_coords(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.coords.iter().map(|&v| f(v)).collect(),
            self.frames,
            self.joints,
            self.frame_rate,
            self.skeleton_ref.clone(),
        )
    }

    pub fn same_shape(&self, other: &MotionSequence) -> bool {
        self.frames == other.frames && self.joints == other.joints
    }

    /// Checks the dataset contract against a skeleton: T ≥ 2 and J matches.
    pub fn validate_for(&self, skeleton: &Skeleton) -> Result<()> {
        if self.frames < 2 {
            return Err(Error::Structural(format!(
                "sequence has {} frame(s), at least 2 required",
                self.frames
            )));
        }
        if self.joints != skeleton.joint_count() {
            return Err(Error::Structural(format!(
                "sequence has {} joints, skeleton '{}' has {}",
                self.joints,
                skeleton.name,
                skeleton.joint_count()
            )));
        }
        Ok(())
    }

    /// Uniform linear time-resampling to `frames` frames.
    ///
    /// Resampling to the current length returns an exact copy.
    pub fn resample(&self, frames: usize) -> Result<Self> {
        if frames == 0 {
            return Err(Error::Argument("cannot resample to zero frames".into()));
        }
        if frames == self.frames {
            return Ok(self.clone());
        }
        let w = self.joints * 3;
        let mut coords = Vec::with_capacity(frames * w);
        for t in 0..frames {
            let pos = if frames == 1 {
                0.0
            } else {
                t as f64 * (self.frames - 1) as f64 / (frames - 1) as f64
            };
            let lo = (pos.floor() as usize).min(self.frames - 1);
            let hi = (lo + 1).min(self.frames - 1);
            let a = pos - lo as f64;
            let (flo, fhi) = (self.frame(lo), self.frame(hi));
            coords.extend((0..w).map(|k| flo[k] * (1.0 - a) + fhi[k] * a));
        }
        Self::new(coords, frames, self.joints, self.frame_rate, self.skeleton_ref.clone())
    }
}

/// Aligned (A, B) motion pair with its interaction class.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionPair {
    pub id: String,
    pub motion_a: MotionSequence,
    pub motion_b: MotionSequence,
    pub class_index: usize,
    pub subject_id: String,
    pub dataset_id: String,
}

impl InteractionPair {
    pub fn new(
        id: impl Into<String>,
        motion_a: MotionSequence,
        motion_b: MotionSequence,
        class_index: usize,
        subject_id: impl Into<String>,
        dataset_id: impl Into<String>,
    ) -> Result<Self> {
        let pair = InteractionPair {
            id: id.into(),
            motion_a,
            motion_b,
            class_index,
            subject_id: subject_id.into(),
            dataset_id: dataset_id.into(),
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<()> {
        if self.motion_a.frames() != self.motion_b.frames() {
            return Err(Error::Structural(format!(
                "pair '{}': A has {} frames, B has {}",
                self.id,
                self.motion_a.frames(),
                self.motion_b.frames()
            )));
        }
        if self.motion_a.frame_rate != self.motion_b.frame_rate {
            return Err(Error::Structural(format!(
                "pair '{}': frame rates differ ({} vs {})",
                self.id, self.motion_a.frame_rate, self.motion_b.frame_rate
            )));
        }
        if self.motion_a.joints() != self.motion_b.joints() {
            return Err(Error::Structural(format!(
                "pair '{}': joint counts differ",
                self.id
            )));
        }
        Ok(())
    }

    pub fn frames(&self) -> usize {
        self.motion_a.frames()
    }
}
