use serde::Serialize;

use super::{HazardLayer, School, ZoneSet};
use crate::burden::assign_zone;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Info,
    Warn,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub severity: Severity,
    pub code: &'static str,
    pub subject: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub usable: bool,
    pub errors: usize,
    pub warnings: usize,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn count(&self, code: &str) -> usize {
        self.issues.iter().filter(|i| i.code == code).count()
    }
}

/// Cross-checks parsed inputs. The dataset is usable iff no issue has
/// [`Severity::Error`].
pub fn validate_dataset(schools: &[School], layers: &[HazardLayer], zone_sets: &[ZoneSet]) -> ValidationReport {
    let mut issues = Vec::new();
    let mut push = |severity, code, subject: String, message: String| {
        issues.push(Issue { severity, code, subject, message })
    };

    if schools.is_empty() {
        push(Severity::Warn, "no_schools", String::new(), "school table is empty".into());
    }
    for s in schools {
        if !s.location.is_valid() {
            push(
                Severity::Error,
                "coordinate_range",
                format!("school:{}", s.id),
                format!("location ({}, {}) is outside WGS84 range", s.location.lon, s.location.lat),
            );
        }
        if s.pss.is_none() {
            push(
                Severity::Warn,
                "no_students",
                format!("school:{}", s.id),
                "zero enrolment; neighbourhood share undefined, school excluded from burden".into(),
            );
        }
    }

    for layer in layers {
        if layer.features.is_empty() {
            push(Severity::Warn, "empty_layer", format!("layer:{}", layer.id), "hazard layer has no features".into());
        }
        for f in &layer.features {
            if let Some(p) = f.parts.iter().flat_map(|g| g.points()).find(|p| !p.is_valid()) {
                push(
                    Severity::Error,
                    "coordinate_range",
                    format!("layer:{}/{}", layer.id, f.id),
                    format!("coordinate ({}, {}) is outside WGS84 range", p.lon, p.lat),
                );
            }
        }
    }

    for zs in zone_sets {
        if zs.zones.is_empty() {
            push(Severity::Error, "empty_zone_set", format!("scale:{}", zs.scale), "zone set has no zones".into());
        }
        for z in &zs.zones {
            if let Some(p) = z.polygons.iter().flat_map(|poly| poly.rings().flatten()).find(|p| !p.is_valid()) {
                push(
                    Severity::Error,
                    "coordinate_range",
                    format!("zone:{}/{}", zs.scale, z.id),
                    format!("coordinate ({}, {}) is outside WGS84 range", p.lon, p.lat),
                );
            }
        }
        let mut occupied = std::collections::HashSet::new();
        for s in schools {
            match assign_zone(s, zs) {
                Some(z) => {
                    occupied.insert(z);
                }
                None => push(
                    Severity::Warn,
                    "outside_zones",
                    format!("school:{}", s.id),
                    format!("school lies outside every {} zone; excluded from collective burden", zs.scale),
                ),
            }
        }
        for z in &zs.zones {
            if !occupied.contains(z.id.as_str()) {
                push(
                    Severity::Info,
                    "zone_without_schools",
                    format!("zone:{}/{}", zs.scale, z.id),
                    "no schools fall in this zone; collective burden is 0".into(),
                );
            }
        }
    }

    let errors = issues.iter().filter(|i| i.severity == Severity::Error).count();
    let warnings = issues.iter().filter(|i| i.severity == Severity::Warn).count();
    ValidationReport { usable: errors == 0, errors, warnings, issues }
}
