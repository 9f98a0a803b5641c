//! The run manifest: one JSON document naming every input file, how to read
//! it, and the default run parameters.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::Method;
use crate::geo::DEFAULT_RADIUS_M;
use crate::ingest::{HazardKind, Scale, SchoolMapping, ZoneProperties};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("config references missing file {0}")]
    MissingFile(PathBuf),
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchoolsEntry {
    pub path: PathBuf,
    #[serde(flatten)]
    pub mapping: SchoolMapping,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerEntry {
    pub id: String,
    #[serde(default)]
    pub title: String,
    pub kind: HazardKind,
    pub path: PathBuf,
    /// Property used as the feature id when a feature has no `id` member.
    #[serde(default)]
    pub id_property: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZoneSetEntry {
    pub scale: Scale,
    pub path: PathBuf,
    #[serde(flatten)]
    pub properties: ZoneProperties,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Defaults {
    pub radius_m: f64,
    pub k: usize,
    pub method: Method,
    /// Leave zones without schools out of break computation.
    pub exclude_empty_zones_from_breaks: bool,
}

impl Default for Defaults {
    fn default() -> Self {
        Defaults {
            radius_m: DEFAULT_RADIUS_M,
            k: 4,
            method: Method::NaturalBreaks,
            exclude_empty_zones_from_breaks: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub schools: SchoolsEntry,
    #[serde(default)]
    pub hazard_layers: Vec<LayerEntry>,
    #[serde(default)]
    pub zone_sets: Vec<ZoneSetEntry>,
    #[serde(default)]
    pub defaults: Defaults,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Dashboard assets served under `/`.
    #[serde(default)]
    pub static_dir: Option<PathBuf>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    /// Reads a manifest and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        let mut cfg: RunConfig = serde_json::from_slice(&text)
            .map_err(|source| ConfigError::Parse { path: path.to_owned(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base);
        cfg.check()?;
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.schools.path);
        self.hazard_layers.iter_mut().for_each(|l| fix(&mut l.path));
        self.zone_sets.iter_mut().for_each(|z| fix(&mut z.path));
        fix(&mut self.output_dir);
        if let Some(s) = self.static_dir.as_mut() {
            fix(s);
        }
    }

    /// Referenced files exist, ids and scales are unique, defaults are sane.
    pub fn check(&self) -> Result<(), ConfigError> {
        let mut files = vec![&self.schools.path];
        files.extend(self.hazard_layers.iter().map(|l| &l.path));
        files.extend(self.zone_sets.iter().map(|z| &z.path));
        if let Some(f) = files.into_iter().find(|p| !p.is_file()) {
            return Err(ConfigError::MissingFile(f.clone()));
        }
        let mut ids = HashSet::new();
        for l in &self.hazard_layers {
            if !ids.insert(&l.id) {
                return Err(ConfigError::Invalid(format!("duplicate layer id {:?}", l.id)));
            }
        }
        let mut scales = HashSet::new();
        for z in &self.zone_sets {
            if !scales.insert(z.scale) {
                return Err(ConfigError::Invalid(format!("zone scale {} listed twice", z.scale)));
            }
        }
        if !(self.defaults.radius_m > 0.0 && self.defaults.radius_m.is_finite()) {
            return Err(ConfigError::Invalid("defaults.radius_m must be positive".into()));
        }
        if self.defaults.k == 0 {
            return Err(ConfigError::Invalid("defaults.k must be at least 1".into()));
        }
        Ok(())
    }
}
