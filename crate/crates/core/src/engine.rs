//! Loaded dataset plus the end-to-end run: exposure, burden, zonal sums and
//! classification for one `(layer, radius, scale, method, k)` tuple. The CLI
//! and the HTTP service both go through here.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::burden::{self, BurdenError, ExposureResult};
use crate::classify::{classify_surface, ClassifiedSurface, ClassifyError, Method};
use crate::config::{ConfigError, Defaults, RunConfig};
use crate::ingest::{
    parse_geojson, parse_schools, validate_dataset, ExposureUnit, HazardLayer, IngestError, Scale, School,
    ValidationReport, ZoneSet,
};
use crate::par::{self, Parallelism};
use crate::stats::{self, ClassDemographics, MaupReport};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Ingest { path: PathBuf, source: IngestError },
}

impl LoadError {
    pub fn is_validation(&self) -> bool {
        matches!(self, LoadError::Ingest { source, .. } if source.is_validation())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RunError {
    #[error("unknown hazard layer {0:?}")]
    UnknownLayer(String),
    #[error("zone scale {0} is not loaded")]
    ScaleUnavailable(Scale),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Burden(#[from] BurdenError),
}

/// Parameters of one burden surface.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRequest {
    pub layer: String,
    pub radius_m: f64,
    pub scale: Scale,
    pub method: Method,
    pub k: usize,
}

impl RunRequest {
    pub fn with_defaults(layer: impl Into<String>, defaults: &Defaults) -> Self {
        RunRequest {
            layer: layer.into(),
            radius_m: defaults.radius_m,
            scale: Scale::CommunityArea,
            method: defaults.method,
            k: defaults.k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exclusion {
    /// Zero enrolment: neighbourhood share undefined.
    NoStudents,
    /// Not inside any zone of the requested scale.
    OutsideZones,
}

/// Per-school audit row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchoolRecord {
    pub school_id: String,
    pub name: String,
    pub pss: Option<f64>,
    pub hs: f64,
    pub score: Option<f64>,
    pub zone: Option<String>,
    pub excluded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exclusion_reason: Option<Exclusion>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub request: RunRequest,
    pub layer_title: String,
    pub unit: ExposureUnit,
    /// Sorted by school id.
    pub records: Vec<SchoolRecord>,
    pub surface: ClassifiedSurface,
}

pub struct Dataset {
    pub schools: Vec<School>,
    pub layers: Vec<HazardLayer>,
    pub zone_sets: Vec<ZoneSet>,
    pub defaults: Defaults,
    assignments: BTreeMap<Scale, BTreeMap<String, Option<String>>>,
}

fn ingest<T>(path: &Path, r: Result<T, IngestError>) -> Result<T, LoadError> {
    r.map_err(|source| LoadError::Ingest { path: path.to_owned(), source })
}

fn read(path: &PathBuf) -> Result<Vec<u8>, LoadError> {
    std::fs::read(path).map_err(|source| LoadError::Io { path: path.clone(), source })
}

fn check_radius(radius_m: f64) -> Result<(), RunError> {
    if radius_m > 0.0 && radius_m.is_finite() {
        Ok(())
    } else {
        Err(RunError::InvalidParameter(format!("radius_m must be a positive number of metres, got {radius_m}")))
    }
}

impl Dataset {
    pub fn new(
        schools: Vec<School>,
        layers: Vec<HazardLayer>,
        zone_sets: Vec<ZoneSet>,
        defaults: Defaults,
    ) -> Self {
        let assignments = zone_sets
            .iter()
            .map(|zs| {
                let zones = par::map(&schools, Parallelism::Parallel, |s| {
                    (s.id.clone(), burden::assign_zone(s, zs).map(str::to_owned))
                });
                (zs.scale, zones.into_iter().collect())
            })
            .collect();
        Dataset { schools, layers, zone_sets, defaults, assignments }
    }

    /// Parses every input listed in the manifest.
    pub fn load(cfg: &RunConfig) -> Result<Self, LoadError> {
        let schools = ingest(&cfg.schools.path, parse_schools(&read(&cfg.schools.path)?, &cfg.schools.mapping))?;
        let mut layers = Vec::new();
        for entry in &cfg.hazard_layers {
            let bytes = read(&entry.path)?;
            let features = ingest(&entry.path, parse_geojson(&bytes, entry.id_property.as_deref()))?;
            let title = if entry.title.is_empty() { entry.id.clone() } else { entry.title.clone() };
            layers.push(ingest(&entry.path, HazardLayer::new(&entry.id, title, entry.kind, features))?);
        }
        let mut zone_sets = Vec::new();
        for entry in &cfg.zone_sets {
            let bytes = read(&entry.path)?;
            zone_sets.push(ingest(&entry.path, ZoneSet::from_geojson(entry.scale, &bytes, &entry.properties))?);
        }
        Ok(Dataset::new(schools, layers, zone_sets, cfg.defaults.clone()))
    }

    pub fn validate(&self) -> ValidationReport {
        validate_dataset(&self.schools, &self.layers, &self.zone_sets)
    }

    pub fn layer(&self, id: &str) -> Result<&HazardLayer, RunError> {
        self.layers.iter().find(|l| l.id == id).ok_or_else(|| RunError::UnknownLayer(id.to_string()))
    }

    pub fn zone_set(&self, scale: Scale) -> Result<&ZoneSet, RunError> {
        self.zone_sets.iter().find(|z| z.scale == scale).ok_or(RunError::ScaleUnavailable(scale))
    }

    /// School id to zone id at `scale`.
    pub fn assignment(&self, scale: Scale) -> Result<&BTreeMap<String, Option<String>>, RunError> {
        self.assignments.get(&scale).ok_or(RunError::ScaleUnavailable(scale))
    }

    fn check(&self, req: &RunRequest) -> Result<(), RunError> {
        check_radius(req.radius_m)?;
        if req.k == 0 {
            return Err(RunError::InvalidParameter("k must be at least 1".into()));
        }
        self.layer(&req.layer)?;
        self.zone_set(req.scale)?;
        Ok(())
    }

    /// Exposure of every school to `layer`, in school order.
    pub fn exposures(&self, layer: &str, radius_m: f64, mode: Parallelism) -> Result<Vec<ExposureResult>, RunError> {
        Ok(burden::layer_exposures(&self.schools, self.layer(layer)?, radius_m, mode)?)
    }

    /// Per-school rows and zone sums for one layer, radius and scale,
    /// before classification.
    pub fn score(
        &self,
        layer: &str,
        radius_m: f64,
        scale: Scale,
        mode: Parallelism,
    ) -> Result<(Vec<SchoolRecord>, Vec<burden::ZoneBurden>), RunError> {
        check_radius(radius_m)?;
        self.layer(layer)?;
        let zone_set = self.zone_set(scale)?;
        let assignment = self.assignment(scale)?;
        let exposures = self.exposures(layer, radius_m, mode)?;

        let mut scores = Vec::new();
        let mut records = Vec::with_capacity(self.schools.len());
        for (school, exposure) in self.schools.iter().zip(&exposures) {
            let zone = assignment.get(&school.id).cloned().flatten();
            let score = match school.pss {
                Some(_) => {
                    let s = burden::proximity_burden(school, exposure)?;
                    let v = s.score;
                    scores.push(s);
                    Some(v)
                }
                None => None,
            };
            let exclusion_reason = if score.is_none() {
                Some(Exclusion::NoStudents)
            } else if zone.is_none() {
                Some(Exclusion::OutsideZones)
            } else {
                None
            };
            records.push(SchoolRecord {
                school_id: school.id.clone(),
                name: school.name.clone(),
                pss: school.pss,
                hs: exposure.hs,
                score,
                zone,
                excluded: exclusion_reason.is_some(),
                exclusion_reason,
            });
        }
        records.sort_by(|a, b| a.school_id.cmp(&b.school_id));
        let zones = burden::collective_burden(&scores, assignment, zone_set);
        Ok((records, zones))
    }

    pub fn run(&self, req: &RunRequest, mode: Parallelism) -> Result<RunOutput, RunError> {
        self.check(req)?;
        let layer = self.layer(&req.layer)?;
        let (records, zones) = self.score(&req.layer, req.radius_m, req.scale, mode)?;
        let surface = classify_surface(zones, req.method, req.k, self.defaults.exclude_empty_zones_from_breaks)?;
        Ok(RunOutput {
            request: req.clone(),
            layer_title: layer.title.clone(),
            unit: layer.exposure_unit(),
            records,
            surface,
        })
    }

    pub fn demographics(&self, req: &RunRequest, mode: Parallelism) -> Result<ClassDemographics, RunError> {
        let out = self.run(req, mode)?;
        Ok(stats::class_demographics(
            &out.surface,
            &self.schools,
            self.assignment(req.scale)?,
            self.zone_set(req.scale)?,
        ))
    }

    /// Community-area versus census-tract comparison for one run. The
    /// request's scale is ignored.
    pub fn maup(&self, req: &RunRequest, mode: Parallelism) -> Result<MaupReport, RunError> {
        let coarse_set = self.zone_set(Scale::CommunityArea)?;
        let fine_set = self.zone_set(Scale::CensusTract)?;
        let coarse = self.run(&RunRequest { scale: Scale::CommunityArea, ..req.clone() }, mode)?;
        let fine = self.run(&RunRequest { scale: Scale::CensusTract, ..req.clone() }, mode)?;
        let map = stats::containment_map(fine_set, coarse_set);
        Ok(stats::maup_compare(&coarse.surface, &fine.surface, Scale::CommunityArea, Scale::CensusTract, &map))
    }
}
