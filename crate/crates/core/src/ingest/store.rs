use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use tempfile::NamedTempFile;

use super::{parse_scenario, validate_scenario_id, ScenarioRecord};
use crate::error::{Error, Result};

/// Directory-backed scenario store: one JSON document per scenario, named
/// `<id>.json`.
///
/// Writes go through a temporary file in the same directory and are linked
/// into place without overwriting, so readers never see partial documents
/// and a duplicate id is detected atomically. A mutex keeps writers in this
/// process single file.
#[derive(Debug)]
pub struct ScenarioStore {
    dir: PathBuf,
    writer: Mutex<()>,
}

impl ScenarioStore {
    /// Opens (creating if needed) a store rooted at `dir`.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        Ok(ScenarioStore {
            dir,
            writer: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    pub fn save(&self, record: &ScenarioRecord) -> Result<()> {
        record.validate()?;
        let text = serde_json::to_string_pretty(record).expect("record serialization cannot fail");
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let path = self.path_for(&record.id);
        if path.exists() {
            return Err(Error::Conflict(record.id.clone()));
        }
        let mut tmp = NamedTempFile::with_prefix_in(".tmp-", &self.dir)?;
        tmp.write_all(text.as_bytes())?;
        tmp.write_all(b"\n")?;
        tmp.as_file().sync_all()?;
        match tmp.persist_noclobber(&path) {
            Ok(_) => Ok(()),
            Err(e) if e.error.kind() == ErrorKind::AlreadyExists => Err(Error::Conflict(record.id.clone())),
            Err(e) => Err(e.error.into()),
        }
    }

    pub fn load(&self, id: &str) -> Result<ScenarioRecord> {
        validate_scenario_id(id).map_err(|_| Error::NotFound(id.to_owned()))?;
        let path = self.path_for(id);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == ErrorKind::NotFound => return Err(Error::NotFound(id.to_owned())),
            Err(e) => return Err(e.into()),
        };
        let record = parse_scenario(&text).map_err(|e| Error::Corrupt(format!("{}: {e}", path.display())))?;
        if record.id != id {
            return Err(Error::Corrupt(format!(
                "{} holds scenario `{}`",
                path.display(),
                record.id
            )));
        }
        Ok(record)
    }

    /// All scenarios, oldest first (ties broken by id). Any unreadable
    /// document fails the whole listing.
    pub fn list(&self) -> Result<Vec<ScenarioRecord>> {
        let mut records = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let name = entry?.file_name();
            let Some(name) = name.to_str() else { continue };
            if name.starts_with('.') {
                continue;
            }
            if let Some(id) = name.strip_suffix(".json") {
                records.push(self.load(id).map_err(|e| match e {
                    Error::NotFound(_) => Error::Corrupt(format!("unexpected file name `{name}`")),
                    other => other,
                })?);
            }
        }
        records.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
        Ok(records)
    }

    pub fn list_ids(&self) -> Result<Vec<String>> {
        Ok(self.list()?.into_iter().map(|r| r.id).collect())
    }
}
