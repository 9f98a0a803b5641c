//! Per-school hazard exposure, proximity burden (share of neighbourhood
//! students times exposure) and its per-zone sum, the collective burden.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::geo::{self, Geometry};
use crate::index::FeatureIndex;
use crate::ingest::{ExposureUnit, HazardKind, HazardLayer, Scale, School, ZoneSet};
use crate::par::{self, Parallelism};

#[derive(Debug, Error, PartialEq)]
pub enum BurdenError {
    #[error("index was built for layer {index_layer:?} ({index_len} parts), not {layer:?} ({layer_len} parts)")]
    IndexMismatch { index_layer: String, index_len: usize, layer: String, layer_len: usize },
    #[error("radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("school {0:?} has no enrolment; its share of neighbourhood students is undefined")]
    UndefinedShare(String),
    #[error("exposure for school {exposure:?} passed with school {school:?}")]
    SchoolMismatch { school: String, exposure: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExposureResult {
    pub school_id: String,
    pub layer_id: String,
    pub radius_m: f64,
    pub unit: ExposureUnit,
    pub hs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BurdenScore {
    pub school_id: String,
    pub layer_id: String,
    pub radius_m: f64,
    pub pss: f64,
    pub hs: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZoneBurden {
    pub zone_id: String,
    pub scale: Scale,
    pub cpb: f64,
    pub n_schools: usize,
    pub school_ids: Vec<String>,
}

/// Grid index over every primitive part of one hazard layer.
#[derive(Debug, Clone)]
pub struct LayerIndex {
    layer_id: String,
    /// `(feature position, part position)` for each indexed primitive.
    parts: Vec<(usize, usize)>,
    grid: FeatureIndex,
}

impl LayerIndex {
    pub fn build(layer: &HazardLayer, cell_size_hint: f64) -> Self {
        let mut parts = Vec::new();
        let mut bboxes = Vec::new();
        for (fi, f) in layer.features.iter().enumerate() {
            for (pi, g) in f.parts.iter().enumerate() {
                parts.push((fi, pi));
                bboxes.push(g.bbox());
            }
        }
        LayerIndex { layer_id: layer.id.clone(), parts, grid: FeatureIndex::build(bboxes, cell_size_hint) }
    }

    fn check(&self, layer: &HazardLayer) -> Result<(), BurdenError> {
        let layer_len: usize = layer.features.iter().map(|f| f.parts.len()).sum();
        if self.layer_id != layer.id || self.parts.len() != layer_len {
            return Err(BurdenError::IndexMismatch {
                index_layer: self.layer_id.clone(),
                index_len: self.parts.len(),
                layer: layer.id.clone(),
                layer_len,
            });
        }
        Ok(())
    }
}

fn check_radius(radius: f64) -> Result<(), BurdenError> {
    if radius > 0.0 && radius.is_finite() {
        Ok(())
    } else {
        Err(BurdenError::InvalidRadius(radius))
    }
}

/// Exposure over an ascending sequence of `(feature, part)` positions.
fn exposure_over(
    school: &School,
    layer: &HazardLayer,
    radius: f64,
    parts: impl Iterator<Item = (usize, usize)>,
) -> f64 {
    let at = school.location;
    match layer.kind {
        HazardKind::Line => {
            let mut meters = 0.0;
            for (fi, pi) in parts {
                if let Geometry::Line(line) = &layer.features[fi].parts[pi] {
                    let clipped = geo::clip_length_in_disc(at, radius, line);
                    if clipped > 0.0 {
                        meters += clipped;
                    }
                }
            }
            meters / 1000.0
        }
        HazardKind::Point | HazardKind::Polygon => {
            let mut hit = BTreeSet::new();
            for (fi, pi) in parts {
                if hit.contains(&fi) {
                    continue;
                }
                let within = match &layer.features[fi].parts[pi] {
                    Geometry::Point(p) => geo::haversine_distance(at, *p) <= radius,
                    Geometry::Polygon(poly) => geo::min_distance_to_polygon(at, poly) <= radius,
                    Geometry::Line(_) => false,
                };
                if within {
                    hit.insert(fi);
                }
            }
            hit.len() as f64
        }
    }
}

/// Hazard exposure of one school: a count of point or polygon sources within
/// `radius`, or kilometres of line inside the radius disc. Candidates come
/// from `index` and are refined with the exact predicates.
pub fn hazard_exposure(
    school: &School,
    layer: &HazardLayer,
    radius: f64,
    index: &LayerIndex,
) -> Result<ExposureResult, BurdenError> {
    check_radius(radius)?;
    index.check(layer)?;
    let candidates = index.grid.query_radius_candidates(school.location, radius);
    let hs = exposure_over(school, layer, radius, candidates.into_iter().map(|id| index.parts[id]));
    Ok(ExposureResult {
        school_id: school.id.clone(),
        layer_id: layer.id.clone(),
        radius_m: radius,
        unit: layer.exposure_unit(),
        hs,
    })
}

/// Same as [`hazard_exposure`] but scans every feature of the layer.
pub fn hazard_exposure_exhaustive(
    school: &School,
    layer: &HazardLayer,
    radius: f64,
) -> Result<ExposureResult, BurdenError> {
    check_radius(radius)?;
    let all = layer
        .features
        .iter()
        .enumerate()
        .flat_map(|(fi, f)| (0..f.parts.len()).map(move |pi| (fi, pi)));
    let hs = exposure_over(school, layer, radius, all);
    Ok(ExposureResult {
        school_id: school.id.clone(),
        layer_id: layer.id.clone(),
        radius_m: radius,
        unit: layer.exposure_unit(),
        hs,
    })
}

/// Exposure for every school, in input order. Builds a grid whose cell edge
/// equals the query radius.
pub fn layer_exposures(
    schools: &[School],
    layer: &HazardLayer,
    radius: f64,
    mode: Parallelism,
) -> Result<Vec<ExposureResult>, BurdenError> {
    check_radius(radius)?;
    let index = LayerIndex::build(layer, radius);
    par::map(schools, mode, |s| hazard_exposure(s, layer, radius, &index)).into_iter().collect()
}

pub fn proximity_burden(school: &School, exposure: &ExposureResult) -> Result<BurdenScore, BurdenError> {
    if exposure.school_id != school.id {
        return Err(BurdenError::SchoolMismatch { school: school.id.clone(), exposure: exposure.school_id.clone() });
    }
    let pss = school.pss.ok_or_else(|| BurdenError::UndefinedShare(school.id.clone()))?;
    Ok(BurdenScore {
        school_id: school.id.clone(),
        layer_id: exposure.layer_id.clone(),
        radius_m: exposure.radius_m,
        pss,
        hs: exposure.hs,
        score: pss * exposure.hs,
    })
}

/// The zone containing the school. Boundary points belong to every zone that
/// shares the boundary; the smallest zone id wins.
pub fn assign_zone<'z>(school: &School, zone_set: &'z ZoneSet) -> Option<&'z str> {
    zone_set
        .zones
        .iter()
        .filter(|z| z.contains(school.location))
        .map(|z| z.id.as_str())
        .min()
}

/// Sums scores per zone. Every zone in the set gets an entry, in set order;
/// scores whose school is missing from `assignment` or maps to `None` are
/// left out. Each sum runs in ascending school-id order.
pub fn collective_burden(
    scores: &[BurdenScore],
    assignment: &BTreeMap<String, Option<String>>,
    zone_set: &ZoneSet,
) -> Vec<ZoneBurden> {
    let mut sorted: Vec<&BurdenScore> = scores.iter().collect();
    sorted.sort_by(|a, b| a.school_id.cmp(&b.school_id));

    let mut by_zone: BTreeMap<&str, Vec<&BurdenScore>> = BTreeMap::new();
    for s in sorted {
        if let Some(Some(z)) = assignment.get(&s.school_id) {
            by_zone.entry(z.as_str()).or_default().push(s);
        }
    }

    zone_set
        .zones
        .iter()
        .map(|z| {
            let members = by_zone.get(z.id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            let mut cpb = 0.0;
            for s in members {
                cpb += s.score;
            }
            ZoneBurden {
                zone_id: z.id.clone(),
                scale: zone_set.scale,
                cpb,
                n_schools: members.len(),
                school_ids: members.iter().map(|s| s.school_id.clone()).collect(),
            }
        })
        .collect()
}
