//! Dataset manifests, importers, splits and a synthetic generator.

pub mod bvh;
mod class_map;
mod manifest;
mod sbu;
mod splits;
mod synthetic;
mod two_character;

pub use class_map::ClassMap;
pub use manifest::{
    DatasetManifest, ManifestFile, PairEntry, SkipRecord, SplitSpec, MANIFEST_FORMAT, MANIFEST_VERSION, SBU_ID,
    SYNTHETIC_ID, TWO_CHARACTER_ID,
};
pub use splits::{leave_one_subject_out, make_splits, stratified_split, Fold, SplitProtocol};
pub use synthetic::{
    class_transform, generate_synthetic, synthetic_class_names, synthetic_skeleton, SyntheticConfig,
    SYNTHETIC_SKELETON,
};
pub use sbu::{import_sbu, parse_sbu_file, parse_sbu_text, sbu_skeleton, SBU_FILE, SBU_FRAME_RATE, SBU_JOINTS, SBU_PARENTS, SBU_SKELETON};
pub use two_character::{import_2c, TwoCharacterConfig, TWO_CHARACTER_SKELETON};
