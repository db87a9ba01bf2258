//! Two-character kickboxing (BVH) importer.
//!
//! Layout: `root/<class dir>/` holding either one `.bvh` per take with two
//! root hierarchies (A first), or `<take>_a.bvh` / `<take>_b.bvh` pairs.
//! Joint names are matched after dropping any `prefix:` namespace, so both
//! characters must share one hierarchy. Positions come from forward
//! kinematics and are divided by `scale`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::bvh::Bvh;
use crate::datasets::class_map::sorted_entries;
use crate::datasets::{ClassMap, DatasetManifest, TWO_CHARACTER_ID};
use crate::error::{Error, Result};
use crate::motion::{standardize_pair, BodyPart, InteractionPair, MotionSequence, Skeleton};

pub const TWO_CHARACTER_SKELETON: &str = "2c";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoCharacterConfig {
    pub classes: ClassMap,
    /// Joint names per body part; every joint must appear exactly once.
    pub partition: BTreeMap<BodyPart, Vec<String>>,
    /// (left hip, right hip) joint names.
    pub facing_joints: (String, String),
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_scale() -> f64 {
    100.0
}

impl TwoCharacterConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: TwoCharacterConfig =
            serde_json::from_str(&text).map_err(|e| Error::Load(format!("{}: {e}", path.display())))?;
        config.classes.validate()?;
        Ok(config)
    }
}

fn bare_name(name: &str) -> &str {
    name.rsplit(':').next().unwrap_or(name)
}

/// One character's hierarchy inside a parsed file.
struct Character<'a> {
    bvh: &'a Bvh,
    joints: Vec<usize>,
}

impl Character<'_> {
    fn names(&self) -> Vec<String> {
        self.joints.iter().map(|&j| bare_name(&self.bvh.joints[j].name).to_string()).collect()
    }

    fn parents(&self) -> Vec<Option<usize>> {
        self.joints
            .iter()
            .map(|&j| self.bvh.joints[j].parent.and_then(|p| self.joints.iter().position(|&k| k == p)))
            .collect()
    }

    fn positions(&self, scale: f64, frame_rate: f64) -> Result<MotionSequence> {
        let mut coords = Vec::with_capacity(self.bvh.frames.len() * self.joints.len() * 3);
        for t in 0..self.bvh.frames.len() {
            let world = self.bvh.world_positions(t);
            for &j in &self.joints {
                coords.extend(world[j].iter().map(|v| v / scale));
            }
        }
        MotionSequence::new(coords, self.bvh.frames.len(), self.joints.len(), frame_rate, TWO_CHARACTER_SKELETON)
    }
}

fn skeleton_for(c: &Character, config: &TwoCharacterConfig) -> Result<Skeleton> {
    let names = c.names();
    let index = |n: &str| {
        names
            .iter()
            .position(|m| m == n)
            .ok_or_else(|| Error::Validation(format!("joint '{n}' from the import config is not in the hierarchy")))
    };
    let mut partition = BTreeMap::new();
    for (part, joints) in &config.partition {
        partition.insert(*part, joints.iter().map(|n| index(n)).collect::<Result<Vec<_>>>()?);
    }
    let offsets = c
        .joints
        .iter()
        .map(|&j| c.bvh.joints[j].offset.map(|v| v / config.scale))
        .collect();
    let facing = (index(&config.facing_joints.0)?, index(&config.facing_joints.1)?);
    Skeleton::new(TWO_CHARACTER_SKELETON, names, c.parents(), offsets, partition, facing)
}

enum Source {
    Combined(PathBuf),
    Split(PathBuf, PathBuf),
}

struct Take {
    id: String,
    class_index: usize,
    source: Source,
}

fn collect_takes(root: &Path, classes: &ClassMap) -> Result<Vec<Take>> {
    let mut takes = Vec::new();
    for (class_dir, class_path) in sorted_entries(root, true)? {
        let Some(class_index) = classes.resolve(&class_dir)? else {
            continue;
        };
        let files: Vec<(String, PathBuf)> = sorted_entries(&class_path, false)?
            .into_iter()
            .filter(|(n, _)| n.to_ascii_lowercase().ends_with(".bvh"))
            .collect();
        let stem = |n: &str| n[..n.len() - 4].to_string();
        let mut halves: BTreeMap<String, [Option<PathBuf>; 2]> = BTreeMap::new();
        for (name, path) in files {
            let s = stem(&name);
            let lower = s.to_ascii_lowercase();
            if let Some(base) = lower.strip_suffix("_a") {
                halves.entry(s[..base.len()].to_string()).or_default()[0] = Some(path);
            } else if let Some(base) = lower.strip_suffix("_b") {
                halves.entry(s[..base.len()].to_string()).or_default()[1] = Some(path);
            } else {
                takes.push(Take {
                    id: format!("{class_dir}/{s}"),
                    class_index,
                    source: Source::Combined(path),
                });
            }
        }
        for (base, [a, b]) in halves {
            match (a, b) {
                (Some(a), Some(b)) => takes.push(Take {
                    id: format!("{class_dir}/{base}"),
                    class_index,
                    source: Source::Split(a, b),
                }),
                (a, b) => {
                    let found = a.or(b).expect("one half present");
                    return Err(Error::Validation(format!("{} has no partner file", found.display())));
                }
            }
        }
    }
    takes.sort_by(|x, y| x.id.cmp(&y.id));
    Ok(takes)
}

fn same_hierarchy(a: &Character, b: &Character, path: &Path) -> Result<()> {
    if a.names() != b.names() || a.parents() != b.parents() {
        return Err(Error::Parse {
            file: path.to_path_buf(),
            line: 0,
            message: "the two characters have different hierarchies".into(),
        });
    }
    Ok(())
}

/// A take as (skeleton of A, pair before standardization).
fn load_take(take: &Take, config: &TwoCharacterConfig) -> Result<(Skeleton, InteractionPair)> {
    let files: Vec<Bvh> = match &take.source {
        Source::Combined(p) => vec![Bvh::read(p)?],
        Source::Split(a, b) => vec![Bvh::read(a)?, Bvh::read(b)?],
    };
    let (chars, path): (Vec<Character>, &Path) = match &take.source {
        Source::Combined(p) => {
            let roots = files[0].roots();
            if roots.len() != 2 {
                return Err(Error::Parse {
                    file: p.clone(),
                    line: 0,
                    message: format!("expected two root hierarchies, found {}", roots.len()),
                });
            }
            let chars = roots
                .iter()
                .map(|&r| Character {
                    bvh: &files[0],
                    joints: files[0].subtree(r),
                })
                .collect();
            (chars, p.as_path())
        }
        Source::Split(a, b) => {
            for (f, p) in files.iter().zip([a, b]) {
                if f.roots().len() != 1 {
                    return Err(Error::Parse {
                        file: p.clone(),
                        line: 0,
                        message: "expected a single root hierarchy".into(),
                    });
                }
            }
            if files[0].frames.len() != files[1].frames.len() || files[0].frame_time != files[1].frame_time {
                return Err(Error::Parse {
                    file: b.clone(),
                    line: 0,
                    message: format!(
                        "{} frames at {}s, partner has {} at {}s",
                        files[1].frames.len(),
                        files[1].frame_time,
                        files[0].frames.len(),
                        files[0].frame_time
                    ),
                });
            }
            let chars = files
                .iter()
                .map(|f| Character {
                    bvh: f,
                    joints: f.subtree(0),
                })
                .collect();
            (chars, a.as_path())
        }
    };
    same_hierarchy(&chars[0], &chars[1], path)?;
    let skeleton = skeleton_for(&chars[0], config)?;
    let rate = 1.0 / files[0].frame_time;
    let a = chars[0].positions(config.scale, rate)?;
    let b = chars[1].positions(config.scale, rate)?;
    let subject = take.id.clone();
    let pair = InteractionPair::new(take.id.clone(), a, b, take.class_index, subject, TWO_CHARACTER_ID)?;
    Ok((skeleton, pair))
}

/// Imports every mapped take under `root`. The manifest skeleton is
/// character A's hierarchy from the first take; every other character must
/// share its joint names and parents.
pub fn import_2c(root: &Path, config: &TwoCharacterConfig) -> Result<DatasetManifest> {
    config.classes.validate()?;
    if !(config.scale.is_finite() && config.scale > 0.0) {
        return Err(Error::Argument("scale must be positive".into()));
    }
    let takes = collect_takes(root, &config.classes)?;
    if takes.is_empty() {
        return Err(Error::Validation(format!("no takes found under {}", root.display())));
    }
    let loaded: Vec<(Skeleton, InteractionPair)> =
        takes.par_iter().map(|t| load_take(t, config)).collect::<Result<_>>()?;
    let skeleton = loaded[0].0.clone();
    let mut pairs = Vec::with_capacity(loaded.len());
    for (sk, pair) in &loaded {
        if sk.joint_names != skeleton.joint_names || sk.parents != skeleton.parents {
            return Err(Error::Validation(format!("take {} has a different hierarchy", pair.id)));
        }
        pairs.push(standardize_pair(pair, &skeleton)?);
    }
    let manifest = DatasetManifest {
        dataset_id: TWO_CHARACTER_ID.into(),
        class_names: config.classes.class_names.clone(),
        skeleton,
        pairs,
        split_spec: None,
        skipped: Vec::new(),
    };
    manifest.validate()?;
    Ok(manifest)
}
