//! SBU Kinect interaction importer.
//!
//! Expected layout: `root/<session>/<class dir>/<take>/skeleton_pos.txt`. Each
//! non-blank row is a frame index followed by 90 comma-separated values: 15
//! joints × 3 coordinates for the first person, then the same for the second.
//! The first person is character A. Session folders become subject ids.
//! Coordinates are kept as distributed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::datasets::class_map::sorted_entries;
use crate::datasets::{ClassMap, DatasetManifest, SkipRecord, SBU_ID};
use crate::error::{Error, Result};
use crate::motion::{standardize_pair, BodyPart, InteractionPair, MotionSequence, Skeleton};

pub const SBU_SKELETON: &str = "sbu15";
pub const SBU_FRAME_RATE: f64 = 15.0;
pub const SBU_FILE: &str = "skeleton_pos.txt";

pub const SBU_JOINTS: [&str; 15] = [
    "head",
    "neck",
    "torso",
    "left_shoulder",
    "left_elbow",
    "left_hand",
    "right_shoulder",
    "right_elbow",
    "right_hand",
    "left_hip",
    "left_knee",
    "left_foot",
    "right_hip",
    "right_knee",
    "right_foot",
];

/// Torso is the root; there is no hip-centre joint in this skeleton.
pub const SBU_PARENTS: [Option<usize>; 15] = [
    Some(1),
    Some(2),
    None,
    Some(1),
    Some(3),
    Some(4),
    Some(1),
    Some(6),
    Some(7),
    Some(2),
    Some(9),
    Some(10),
    Some(2),
    Some(12),
    Some(13),
];

fn sbu_partition() -> BTreeMap<BodyPart, Vec<usize>> {
    let mut p = BTreeMap::new();
    p.insert(BodyPart::LeftArm, vec![3, 4, 5]);
    p.insert(BodyPart::RightArm, vec![6, 7, 8]);
    p.insert(BodyPart::LeftLeg, vec![10, 11]);
    p.insert(BodyPart::RightLeg, vec![13, 14]);
    p.insert(BodyPart::Trunk, vec![0, 1, 2, 9, 12]);
    p
}

/// The 15-joint skeleton with the given rest offsets.
pub fn sbu_skeleton(rest_offsets: Vec<[f64; 3]>) -> Result<Skeleton> {
    Skeleton::new(
        SBU_SKELETON,
        SBU_JOINTS.iter().map(|s| s.to_string()).collect(),
        SBU_PARENTS.to_vec(),
        rest_offsets,
        sbu_partition(),
        (9, 12),
    )
}

/// Both characters of one file, or `None` when the file has no frames.
pub fn parse_sbu_file(path: &Path) -> Result<Option<(MotionSequence, MotionSequence)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sbu_text(&text, path)
}

pub fn parse_sbu_text(text: &str, path: &Path) -> Result<Option<(MotionSequence, MotionSequence)>> {
    let parse_error = |line: usize, message: String| Error::Parse {
        file: path.to_path_buf(),
        line,
        message,
    };
    let (mut a, mut b) = (Vec::new(), Vec::new());
    let mut frames = 0;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 91 {
            return Err(parse_error(
                i + 1,
                format!("expected a frame index and 90 values, found {} fields", fields.len()),
            ));
        }
        for (k, f) in fields.iter().enumerate() {
            let v: f64 = f
                .parse()
                .map_err(|_| parse_error(i + 1, format!("field {} ('{f}') is not a number", k + 1)))?;
            if !v.is_finite() {
                return Err(parse_error(i + 1, format!("field {} is not finite", k + 1)));
            }
            match k {
                0 => {}
                1..=45 => a.push(v),
                _ => b.push(v),
            }
        }
        frames += 1;
    }
    if frames == 0 {
        return Ok(None);
    }
    let seq = |coords| MotionSequence::new(coords, frames, 15, SBU_FRAME_RATE, SBU_SKELETON);
    Ok(Some((seq(a)?, seq(b)?)))
}

struct Take {
    id: String,
    subject: String,
    class_index: usize,
    path: PathBuf,
}

fn collect_takes(root: &Path, classes: &ClassMap) -> Result<Vec<Take>> {
    let mut takes = Vec::new();
    for (session, session_path) in sorted_entries(root, true)? {
        for (class_dir, class_path) in sorted_entries(&session_path, true)? {
            let Some(class_index) = classes.resolve(&class_dir)? else {
                continue;
            };
            for (take, take_path) in sorted_entries(&class_path, true)? {
                takes.push(Take {
                    id: format!("{session}/{class_dir}/{take}"),
                    subject: session.clone(),
                    class_index,
                    path: take_path.join(SBU_FILE),
                });
            }
        }
    }
    Ok(takes)
}

/// Rest offsets estimated from the corpus: the direction of each bone is its
/// mean vector in A's standardized frames, the length is the mean length
/// over every frame of both characters.
fn corpus_offsets(pairs: &[InteractionPair]) -> Result<Vec<[f64; 3]>> {
    let mut direction = vec![[0.0; 3]; 15];
    let mut length = vec![0.0; 15];
    let mut frames = 0usize;
    for p in pairs {
        for t in 0..p.frames() {
            for (j, parent) in SBU_PARENTS.iter().enumerate() {
                let Some(parent) = *parent else { continue };
                for (m, is_a) in [(&p.motion_a, true), (&p.motion_b, false)] {
                    let (c, q) = (m.joint(t, j), m.joint(t, parent));
                    let d = [c[0] - q[0], c[1] - q[1], c[2] - q[2]];
                    length[j] += (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                    if is_a {
                        for k in 0..3 {
                            direction[j][k] += d[k];
                        }
                    }
                }
            }
            frames += 1;
        }
    }
    if frames == 0 {
        return Err(Error::Validation("no SBU frames to estimate bone lengths from".into()));
    }
    Ok((0..15)
        .map(|j| {
            if SBU_PARENTS[j].is_none() {
                return [0.0; 3];
            }
            let d = direction[j];
            let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            let len = length[j] / (2 * frames) as f64;
            if n > 0.0 {
                d.map(|v| v / n * len)
            } else {
                [0.0, len, 0.0]
            }
        })
        .collect())
}

/// Imports every mapped take under `root`. Empty or single-frame files are
/// recorded in `skipped`; malformed rows abort with file and line.
pub fn import_sbu(root: &Path, classes: &ClassMap) -> Result<DatasetManifest> {
    classes.validate()?;
    let takes = collect_takes(root, classes)?;
    let parsed: Vec<Result<Option<(MotionSequence, MotionSequence)>>> =
        takes.par_iter().map(|t| parse_sbu_file(&t.path)).collect();

    // standardization only needs the root and hip joints, not rest offsets
    let provisional = sbu_skeleton(vec![[0.0, 1.0, 0.0]; 15])?;
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for (take, result) in takes.iter().zip(parsed) {
        let Some((a, b)) = result? else {
            log::warn!("skipping empty SBU file {}", take.path.display());
            skipped.push(SkipRecord {
                path: take.path.clone(),
                reason: "no frames".into(),
            });
            continue;
        };
        if a.frames() < 2 {
            skipped.push(SkipRecord {
                path: take.path.clone(),
                reason: "fewer than 2 frames".into(),
            });
            continue;
        }
        let pair = InteractionPair::new(take.id.clone(), a, b, take.class_index, take.subject.clone(), SBU_ID)?;
        pairs.push(standardize_pair(&pair, &provisional)?);
    }
    let skeleton = sbu_skeleton(corpus_offsets(&pairs)?)?;
    let manifest = DatasetManifest {
        dataset_id: SBU_ID.into(),
        class_names: classes.class_names.clone(),
        skeleton,
        pairs,
        split_spec: None,
        skipped,
    };
    manifest.validate()?;
    Ok(manifest)
}
