use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ServiceError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotation {
    pub name: String,
    #[serde(default)]
    pub note: String,
}

/// Direction index → annotation, persisted as a JSON object keyed by index.
#[derive(Debug)]
pub struct AnnotationStore {
    path: PathBuf,
    entries: BTreeMap<usize, Annotation>,
}

impl AnnotationStore {
    /// Opens the store at `path`; a missing file is an empty store.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let path = path.into();
        let entries = match std::fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| ServiceError::Annotations {
                path: path.display().to_string(),
                message: e.to_string(),
            })?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeMap::new(),
            Err(e) => {
                return Err(ServiceError::Annotations {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })
            }
        };
        Ok(Self { path, entries })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn entries(&self) -> &BTreeMap<usize, Annotation> {
        &self.entries
    }

    /// Stores `annotation` and rewrites the file. The file is replaced by
    /// rename, so readers never see a partial write.
    pub fn put(&mut self, index: usize, annotation: Annotation) -> Result<(), ServiceError> {
        let mut next = self.entries.clone();
        next.insert(index, annotation);
        self.write(&next)?;
        self.entries = next;
        Ok(())
    }

    fn write(&self, entries: &BTreeMap<usize, Annotation>) -> Result<(), ServiceError> {
        let fail = |e: &dyn std::fmt::Display| ServiceError::Annotations {
            path: self.path.display().to_string(),
            message: e.to_string(),
        };
        let dir = match self.path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut bytes = serde_json::to_vec_pretty(entries).map_err(|e| fail(&e))?;
        bytes.push(b'\n');
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
        tmp.write_all(&bytes).map_err(|e| fail(&e))?;
        tmp.as_file().sync_all().map_err(|e| fail(&e))?;
        tmp.persist(&self.path).map_err(|e| fail(&e.error))?;
        Ok(())
    }
}
