//! Output directory handling and the run manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use fluxbec::constants::CONSTANTS_VERSION;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

/// Files written by one command, all under one directory.
pub struct Output {
    dir: PathBuf,
    hash: String,
    files: Vec<String>,
    started: Instant,
}

impl Output {
    pub fn create(dir: &Path, hash: &str) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(format!("--out {}: {e}", dir.display())))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            hash: hash.to_string(),
            files: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(())
    }

    /// Pretty JSON with `config_hash` added as the first key.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut obj = Map::new();
        obj.insert("config_hash".into(), Value::String(self.hash.clone()));
        match serde_json::to_value(value).map_err(|e| CliError::Io(e.to_string()))? {
            Value::Object(m) => obj.extend(m),
            other => {
                obj.insert("value".into(), other);
            }
        }
        let text = serde_json::to_string_pretty(&Value::Object(obj))
            .map_err(|e| CliError::Io(e.to_string()))?;
        self.write(name, &(text + "\n"))
    }

    pub fn read_json(&self, name: &str) -> Option<Value> {
        let text = std::fs::read_to_string(self.dir.join(name)).ok()?;
        serde_json::from_str(&text).ok()
    }

    /// Record this command in the manifest. A manifest from a different
    /// configuration is replaced rather than merged.
    pub fn finish(mut self, command: &str) -> Result<(), CliError> {
        let elapsed = self.started.elapsed().as_secs_f64();
        let mut commands = match self.read_json(MANIFEST) {
            Some(Value::Object(m))
                if m.get("config_hash") == Some(&Value::String(self.hash.clone())) =>
            {
                match m.get("commands") {
                    Some(Value::Object(c)) => c.clone(),
                    _ => Map::new(),
                }
            }
            _ => Map::new(),
        };
        self.files.sort();
        commands.insert(
            command.into(),
            json!({ "files": self.files, "wall_clock_s": elapsed }),
        );
        let mut all: Vec<String> = commands
            .values()
            .filter_map(|c| c.get("files").and_then(Value::as_array))
            .flatten()
            .filter_map(|f| f.as_str().map(str::to_string))
            .collect();
        all.push(MANIFEST.into());
        all.sort();
        all.dedup();
        let manifest = json!({
            "config_hash": self.hash,
            "constants_version": CONSTANTS_VERSION,
            "commands": commands,
            "files": all,
        });
        let text =
            serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
        let path = self.dir.join(MANIFEST);
        std::fs::write(&path, text + "\n")
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}
