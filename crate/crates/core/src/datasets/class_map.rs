//! Explicit directory-name → class tables used by the importers.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered class names plus the class of every directory name an importer
/// may meet. A `null` class marks a directory that is deliberately excluded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassMap {
    pub class_names: Vec<String>,
    pub directories: BTreeMap<String, Option<String>>,
}

impl ClassMap {
    /// The six SBU classes; approaching (01) and departing (02) are excluded.
    pub fn sbu() -> Self {
        let table = [
            ("01", None),
            ("02", None),
            ("03", Some("kick")),
            ("04", Some("push")),
            ("05", Some("shake-hands")),
            ("06", Some("hug")),
            ("07", Some("exchange-objects")),
            ("08", Some("punch")),
        ];
        ClassMap {
            class_names: ["kick", "push", "shake-hands", "hug", "exchange-objects", "punch"]
                .map(String::from)
                .to_vec(),
            directories: table.iter().map(|(d, c)| (d.to_string(), c.map(String::from))).collect(),
        }
    }

    pub fn two_character() -> Self {
        ClassMap {
            class_names: vec!["kick".into(), "punch".into()],
            directories: [("kick", "kick"), ("punch", "punch")]
                .iter()
                .map(|(d, c)| (d.to_string(), Some(c.to_string())))
                .collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let map: ClassMap =
            serde_json::from_str(&text).map_err(|e| Error::Load(format!("{}: {e}", path.display())))?;
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        if self.class_names.is_empty() {
            return Err(Error::Validation("class map has no classes".into()));
        }
        for (i, name) in self.class_names.iter().enumerate() {
            if self.class_names[..i].contains(name) {
                return Err(Error::Validation(format!("class '{name}' listed twice")));
            }
        }
        for (dir, class) in &self.directories {
            if let Some(c) = class {
                if !self.class_names.contains(c) {
                    return Err(Error::Validation(format!("directory '{dir}' maps to unknown class '{c}'")));
                }
            }
        }
        Ok(())
    }

    /// Class index for a directory name; `None` when the directory is excluded.
    pub fn resolve(&self, dir: &str) -> Result<Option<usize>> {
        match self.directories.get(dir) {
            None => Err(Error::Validation(format!(
                "directory '{dir}' is not in the class map (known: {})",
                self.directories.keys().cloned().collect::<Vec<_>>().join(", ")
            ))),
            Some(None) => Ok(None),
            Some(Some(c)) => Ok(self.class_names.iter().position(|n| n == c)),
        }
    }
}

/// Entries of `dir` sorted by file name, as (name, path) pairs.
pub(crate) fn sorted_entries(dir: &Path, want_dirs: bool) -> Result<Vec<(String, std::path::PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_dir() == want_dirs {
            out.push((entry.file_name().to_string_lossy().into_owned(), path));
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_tables_match_builtins() {
        let sbu: ClassMap = serde_json::from_str(include_str!("../../../../configs/sbu_classes.json")).unwrap();
        assert_eq!(sbu, ClassMap::sbu());
        sbu.validate().unwrap();
        assert_eq!(sbu.resolve("01").unwrap(), None);
        assert_eq!(sbu.resolve("08").unwrap(), Some(5));
        assert!(sbu.resolve("09").is_err());
        ClassMap::two_character().validate().unwrap();
    }

    #[test]
    fn rejects_unknown_targets() {
        let mut m = ClassMap::two_character();
        m.directories.insert("block".into(), Some("block".into()));
        assert!(m.validate().is_err());
    }
}
