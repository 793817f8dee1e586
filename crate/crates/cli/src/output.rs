use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

#[derive(Serialize)]
struct Artifact {
    file: String,
    description: String,
}

#[derive(Serialize)]
struct Metadata {
    created_unix_secs: u64,
    version: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    command: &'a str,
    seed: u64,
    config: &'a C,
    artifacts: &'a [Artifact],
    metadata: Metadata,
}

/// Output directory that records every file it writes in `manifest.json`.
pub struct OutDir {
    root: PathBuf,
    artifacts: Vec<Artifact>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.root.join(file)
    }

    pub fn write_json<T: Serialize>(&mut self, file: &str, value: &T, description: &str) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        self.write_bytes(file, format!("{text}\n").as_bytes(), description)
    }

    pub fn write_bytes(&mut self, file: &str, bytes: &[u8], description: &str) -> Result<()> {
        let path = self.path(file);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.record(file, description);
        Ok(())
    }

    /// Registers a file written by other means.
    pub fn record(&mut self, file: &str, description: &str) {
        self.artifacts.push(Artifact {
            file: file.to_string(),
            description: description.to_string(),
        });
    }

    pub fn finish<C: Serialize>(self, command: &str, seed: u64, config: &C) -> Result<()> {
        let created = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let manifest = Manifest {
            command,
            seed,
            config,
            artifacts: &self.artifacts,
            metadata: Metadata {
                created_unix_secs: created,
                version: env!("CARGO_PKG_VERSION"),
            },
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        let path = self.path("manifest.json");
        fs::write(&path, format!("{text}\n")).with_context(|| format!("writing {}", path.display()))
    }
}
