//! Dataset manifests.
//!
//! On disk a manifest is a JSON document (`reactmix-manifest`, version 1)
//! holding the dataset id, ordered class names, skeleton, optional split
//! descriptor, skipped-input records, and one entry per pair that references
//! two canonical sequence files by path relative to the manifest.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datasets::SplitProtocol;
use crate::error::{Error, Result};
use crate::motion::{write_atomic, InteractionPair, SequenceFile, Skeleton};

pub const MANIFEST_FORMAT: &str = "reactmix-manifest";
pub const MANIFEST_VERSION: u32 = 1;

pub const SBU_ID: &str = "SBU";
pub const TWO_CHARACTER_ID: &str = "2C";
pub const SYNTHETIC_ID: &str = "SYNTH";

/// How folds are drawn from a manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub protocol: SplitProtocol,
    pub seed: u64,
}

/// An input that was found but not imported.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub dataset_id: String,
    pub class_names: Vec<String>,
    pub skeleton: Skeleton,
    pub pairs: Vec<InteractionPair>,
    pub split_spec: Option<SplitSpec>,
    pub skipped: Vec<SkipRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairEntry {
    pub id: String,
    pub class_index: usize,
    pub class_name: String,
    pub subject_id: String,
    pub motion_a: PathBuf,
    pub motion_b: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestFile {
    pub format: String,
    pub version: u32,
    pub dataset_id: String,
    pub class_names: Vec<String>,
    pub skeleton: Skeleton,
    #[serde(default)]
    pub split_spec: Option<SplitSpec>,
    #[serde(default)]
    pub skipped: Vec<SkipRecord>,
    pub pairs: Vec<PairEntry>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        self.skeleton.validate()?;
        if self.class_names.is_empty() {
            return Err(Error::Validation("manifest has no classes".into()));
        }
        let mut ids = BTreeSet::new();
        for p in &self.pairs {
            p.validate()?;
            p.motion_a.validate_for(&self.skeleton)?;
            p.motion_b.validate_for(&self.skeleton)?;
            if p.class_index >= self.class_names.len() {
                return Err(Error::Validation(format!("pair {} has an unknown class", p.id)));
            }
            if !ids.insert(p.id.as_str()) {
                return Err(Error::Validation(format!("duplicate pair id {}", p.id)));
            }
        }
        Ok(())
    }

    /// Pairs at the given indices, in that order.
    pub fn select(&self, indices: &[usize]) -> Vec<InteractionPair> {
        indices.iter().map(|&i| self.pairs[i].clone()).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_names.len()];
        for p in &self.pairs {
            counts[p.class_index] += 1;
        }
        counts
    }

    /// Writes `path` and one sequence file per character under
    /// `<manifest dir>/sequences/`.
    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let seq_dir = dir.join("sequences");
        fs::create_dir_all(&seq_dir).map_err(|e| Error::io(&seq_dir, e))?;
        let mut entries = Vec::with_capacity(self.pairs.len());
        for (i, p) in self.pairs.iter().enumerate() {
            let stem = format!("{i:05}_{}", sanitize(&p.id));
            let rel_a = PathBuf::from("sequences").join(format!("{stem}_a.json"));
            let rel_b = PathBuf::from("sequences").join(format!("{stem}_b.json"));
            SequenceFile::new(&p.motion_a, &self.skeleton).write(&dir.join(&rel_a))?;
            SequenceFile::new(&p.motion_b, &self.skeleton).write(&dir.join(&rel_b))?;
            entries.push(PairEntry {
                id: p.id.clone(),
                class_index: p.class_index,
                class_name: self.class_names[p.class_index].clone(),
                subject_id: p.subject_id.clone(),
                motion_a: rel_a,
                motion_b: rel_b,
            });
        }
        let file = ManifestFile {
            format: MANIFEST_FORMAT.into(),
            version: MANIFEST_VERSION,
            dataset_id: self.dataset_id.clone(),
            class_names: self.class_names.clone(),
            skeleton: self.skeleton.clone(),
            split_spec: self.split_spec,
            skipped: self.skipped.clone(),
            pairs: entries,
        };
        write_atomic(path, serde_json::to_string_pretty(&file)?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ManifestFile =
            serde_json::from_str(&text).map_err(|e| Error::Load(format!("{}: {e}", path.display())))?;
        if file.format != MANIFEST_FORMAT || file.version != MANIFEST_VERSION {
            return Err(Error::Load(format!(
                "{} is not a version {MANIFEST_VERSION} manifest",
                path.display()
            )));
        }
        let dir = path.parent().unwrap_or(Path::new("."));
        let mut pairs = Vec::with_capacity(file.pairs.len());
        for e in &file.pairs {
            if e.class_names_mismatch(&file.class_names) {
                return Err(Error::Load(format!("pair {} names an inconsistent class", e.id)));
            }
            let a = SequenceFile::read(&dir.join(&e.motion_a))?.to_sequence()?;
            let b = SequenceFile::read(&dir.join(&e.motion_b))?.to_sequence()?;
            pairs.push(InteractionPair::new(
                e.id.clone(),
                a,
                b,
                e.class_index,
                e.subject_id.clone(),
                file.dataset_id.clone(),
            )?);
        }
        let manifest = DatasetManifest {
            dataset_id: file.dataset_id,
            class_names: file.class_names,
            skeleton: file.skeleton,
            pairs,
            split_spec: file.split_spec,
            skipped: file.skipped,
        };
        manifest.validate()?;
        Ok(manifest)
    }
}

impl PairEntry {
    fn class_names_mismatch(&self, names: &[String]) -> bool {
        names.get(self.class_index) != Some(&self.class_name)
    }
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}
