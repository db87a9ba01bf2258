//! Canonical on-disk sequence format.
//!
//! A JSON document:
//!
//! ```json
//! {
//!   "format": "reactmix-sequence",
//!   "version": 1,
//!   "skeleton": { "name": ..., "joint_names": [...], "parents": [null, 0, ...],
//!                 "rest_offsets": [[x, y, z], ...],
//!                 "partition": { "left_arm": [...], ..., "trunk": [...] },
//!                 "facing_joints": [l, r] },
//!   "frame_rate": 30.0,
//!   "frames": [ [[x, y, z], ...J], ...T ]
//! }
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::{MotionSequence, Skeleton};

pub const SEQUENCE_FORMAT: &str = "reactmix-sequence";
pub const SEQUENCE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceFile {
    pub format: String,
    pub version: u32,
    pub skeleton: Skeleton,
    pub frame_rate: f64,
    pub frames: Vec<Vec<[f64; 3]>>,
}

impl SequenceFile {
    pub fn new(seq: &MotionSequence, skeleton: &Skeleton) -> Self {
        SequenceFile {
            format: SEQUENCE_FORMAT.to_string(),
            version: SEQUENCE_VERSION,
            skeleton: skeleton.clone(),
            frame_rate: seq.frame_rate,
            frames: seq.to_frames(),
        }
    }

    /// Validates header, skeleton and shape, and returns the sequence.
    pub fn to_sequence(&self) -> Result<MotionSequence> {
        if self.format != SEQUENCE_FORMAT {
            return Err(Error::Load(format!(
                "unexpected format tag '{}', expected '{SEQUENCE_FORMAT}'",
                self.format
            )));
        }
        if self.version != SEQUENCE_VERSION {
            return Err(Error::Load(format!(
                "unsupported sequence version {}",
                self.version
            )));
        }
        self.skeleton.validate()?;
        let seq = MotionSequence::from_frames(&self.frames, self.frame_rate, &self.skeleton.name)?;
        if seq.joints() != self.skeleton.joint_count() {
            return Err(Error::Structural(format!(
                "frames have {} joints, skeleton has {}",
                seq.joints(),
                self.skeleton.joint_count()
            )));
        }
        Ok(seq)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Load(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }
}

/// Writes to a temporary file in the target directory and renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::skeleton::fixtures::six_joint;

    #[test]
    fn round_trip_through_disk() {
        let s = six_joint();
        let frames = vec![s.rest_offsets.clone(), s.rest_offsets.clone()];
        let seq = MotionSequence::from_frames(&frames, 15.0, "six").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/seq.json");
        SequenceFile::new(&seq, &s).write(&path).unwrap();
        let back = SequenceFile::read(&path).unwrap();
        assert_eq!(back.skeleton, s);
        assert_eq!(back.to_sequence().unwrap(), seq);
    }

    #[test]
    fn rejects_wrong_tag() {
        let s = six_joint();
        let seq = MotionSequence::from_frames(&[s.rest_offsets.clone()], 15.0, "six").unwrap();
        let mut f = SequenceFile::new(&seq, &s);
        f.format = "bvh".into();
        assert!(matches!(f.to_sequence(), Err(Error::Load(_))));
    }
}
