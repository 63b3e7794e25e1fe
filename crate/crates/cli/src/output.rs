use std::fs;
use std::path::{Path, PathBuf};

use hoverbeam_core::ScenarioConfig;
use serde::{Deserialize, Serialize};

use crate::RunError;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one run, written last as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub library_version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    /// Every file written by the run, sorted, including the manifest.
    pub files: Vec<String>,
    pub wall_time_s: f64,
}

/// Single writer for a run's output directory.
#[derive(Debug)]
pub struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(io_error(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), RunError> {
        let path = self.path(name);
        fs::write(&path, contents).map_err(io_error(&path))?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes `rows` as CSV with the header taken from the row type.
    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), RunError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in rows {
            w.serialize(row).map_err(|e| RunError::Io {
                path: self.path(name),
                source: e.into(),
            })?;
        }
        let bytes = w.into_inner().map_err(|e| RunError::Io {
            path: self.path(name),
            source: e.into_error(),
        })?;
        self.write(name, &bytes)
    }

    pub fn finish(
        mut self,
        command: &str,
        config: &ScenarioConfig,
        wall_time_s: f64,
    ) -> Result<Manifest, RunError> {
        self.files.push(MANIFEST_FILE.to_string());
        self.files.sort();
        let manifest = Manifest {
            library_version: hoverbeam_core::VERSION.to_string(),
            command: command.to_string(),
            config_hash: config.hash(),
            seed: config.seed,
            files: self.files.clone(),
            wall_time_s,
        };
        self.write_json(MANIFEST_FILE, &manifest)?;
        Ok(manifest)
    }
}
