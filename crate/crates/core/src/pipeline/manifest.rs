use std::collections::HashSet;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
}

/// A labelled list of images, stored as CSV with a `path,label[,split]` header.
///
/// Relative paths in a manifest file are resolved against the file's directory.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DatasetManifest {
    entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(&e.path) {
                return Err(Error::Manifest {
                    path: e.path.clone(),
                    reason: "duplicate path".into(),
                });
            }
        }
        Ok(DatasetManifest { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let bad = |reason: String| Error::Manifest {
            path: path.to_path_buf(),
            reason,
        };
        let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
        if headers.get(0) != Some("path") || headers.get(1) != Some("label") {
            return Err(bad("header must start with path,label".into()));
        }
        let mut entries = Vec::new();
        for (line, record) in reader.deserialize::<ManifestEntry>().enumerate() {
            let mut entry = record.map_err(|e| bad(format!("row {}: {e}", line + 1)))?;
            if entry.path.is_relative() {
                entry.path = base.join(&entry.path);
            }
            if entry.split.as_deref() == Some("") {
                entry.split = None;
            }
            entries.push(entry);
        }
        Self::new(entries).map_err(|e| bad(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let with_split = self.entries.iter().any(|e| e.split.is_some());
        let mut w = csv::Writer::from_writer(file);
        let io = |e: csv::Error| Error::Serialization(e.to_string());
        if with_split {
            w.write_record(["path", "label", "split"]).map_err(io)?;
        } else {
            w.write_record(["path", "label"]).map_err(io)?;
        }
        for e in &self.entries {
            let p = e.path.to_string_lossy();
            if with_split {
                w.write_record([p.as_ref(), e.label.as_str(), e.split.as_deref().unwrap_or("")])
                    .map_err(io)?;
            } else {
                w.write_record([p.as_ref(), e.label.as_str()]).map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.entries.iter().filter(|e| e.label == label).count()
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.entries.iter().map(|e| e.path.as_path())
    }
}

/// Comparable form of a path: canonical when it exists, verbatim otherwise.
pub fn path_key(path: &Path) -> String {
    std::fs::canonicalize(path)
        .unwrap_or_else(|_| path.to_path_buf())
        .to_string_lossy()
        .into_owned()
}

/// Paths that appear in both sets.
pub fn overlapping_paths<'a>(
    reference: impl IntoIterator<Item = &'a str>,
    candidates: impl IntoIterator<Item = &'a Path>,
) -> Vec<String> {
    let known: HashSet<String> = reference.into_iter().map(|p| path_key(Path::new(p))).collect();
    candidates
        .into_iter()
        .map(path_key)
        .filter(|k| known.contains(k))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn load_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("m.csv");
        std::fs::write(&m, "path,label\na.png,real\n/abs/b.png, fake\n").unwrap();
        let manifest = DatasetManifest::load(&m).unwrap();
        assert_eq!(manifest.len(), 2);
        assert_eq!(manifest.entries()[0].path, dir.path().join("a.png"));
        assert_eq!(manifest.entries()[1].path, PathBuf::from("/abs/b.png"));
        assert_eq!(manifest.count(Label::Fake), 1);
    }

    #[test]
    fn rejects_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("m.csv");
        std::fs::write(&m, "path,label\na.png,forged\n").unwrap();
        assert!(DatasetManifest::load(&m).is_err());
        std::fs::write(&m, "file,class\na.png,real\n").unwrap();
        assert!(DatasetManifest::load(&m).is_err());
        std::fs::write(&m, "path,label\na.png,real\na.png,fake\n").unwrap();
        assert!(DatasetManifest::load(&m).is_err());
    }

    #[test]
    fn save_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let m = DatasetManifest::new(vec![
            ManifestEntry { path: "x/1.png".into(), label: Label::Real, split: Some("train".into()) },
            ManifestEntry { path: "x/2.png".into(), label: Label::Fake, split: None },
        ])
        .unwrap();
        let file = dir.path().join("out.csv");
        m.save(&file).unwrap();
        let back = DatasetManifest::load(&file).unwrap();
        assert_eq!(back.entries()[0].path, dir.path().join("x/1.png"));
        assert_eq!(back.entries()[0].split.as_deref(), Some("train"));
        assert_eq!(back.entries()[1].split, None);
    }
}
