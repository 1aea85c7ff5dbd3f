use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

/// Optional TOML run configuration. Every key mirrors a command-line flag of
/// the same name (dashes become underscores); flags take precedence.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<Vec<PathBuf>>,
    pub out: Option<PathBuf>,
    pub backend: Option<Vec<String>>,
    pub term: Option<Vec<String>>,
    pub metric: Option<Vec<String>>,
    pub severity: Option<usize>,
    pub levels: Option<Vec<u8>>,
    pub mode: Option<String>,
    pub protocol: Option<String>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub m_max: Option<usize>,
    pub delta: Option<String>,
    pub calibration: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub k: Option<usize>,
    pub synthetic: Option<usize>,
    pub size: Option<usize>,
    pub registry: Option<PathBuf>,
    pub schedule: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Flag value if given, else the config value.
pub fn pick<T: Clone>(flag: Option<T>, file: &Option<T>) -> Option<T> {
    flag.or_else(|| file.clone())
}

/// Non-empty flag list if given, else the config list.
pub fn pick_list<T: Clone>(flag: Vec<T>, file: &Option<Vec<T>>) -> Vec<T> {
    if flag.is_empty() {
        file.clone().unwrap_or_default()
    } else {
        flag
    }
}
