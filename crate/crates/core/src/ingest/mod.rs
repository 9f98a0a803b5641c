//! Dataset ingestion: school profiles (delimited text), hazard layers and
//! zone sets (GeoJSON), plus a dataset-level validation pass.

mod geojson;
mod schools;
mod validate;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use thiserror::Error;

use crate::geo::{Geometry, GeoPoint, Polygon};

pub use geojson::{geometry_to_value, parse_geojson, ParsedFeature};
pub use schools::{parse_schools, SchoolColumns, SchoolMapping, ShareUnit};
pub use validate::{validate_dataset, Issue, Severity, ValidationReport};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed JSON at byte {offset}: {message}")]
    Json { offset: usize, message: String },
    #[error("expected a GeoJSON FeatureCollection, found {0}")]
    NotFeatureCollection(String),
    #[error("feature {feature_index}: unsupported geometry type {type_name}")]
    UnsupportedGeometry { feature_index: usize, type_name: String },
    #[error("feature {feature_index}: invalid geometry: {reason}")]
    InvalidGeometry { feature_index: usize, reason: String },
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("layer {layer:?}, feature {feature_index}: {found} geometry in a {expected} layer")]
    KindMismatch { layer: String, feature_index: usize, expected: HazardKind, found: &'static str },
    #[error("feature {feature_index}: {message}")]
    Property { feature_index: usize, message: String },
    #[error("column mapping: {0}")]
    Mapping(String),
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("row {row}, column {column:?}: {message}")]
    RowValue { row: u64, column: String, message: String },
    #[error("row {row}: {message}")]
    RowInvalid { row: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl IngestError {
    /// True for content that parsed but violates a data invariant, as opposed
    /// to unreadable or misconfigured input.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            IngestError::InvalidGeometry { .. }
                | IngestError::DuplicateId(_)
                | IngestError::KindMismatch { .. }
                | IngestError::RowInvalid { .. }
                | IngestError::Property { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct School {
    pub id: String,
    pub name: String,
    pub location: GeoPoint,
    pub total_students: u64,
    /// Absent when the source provides the share directly.
    pub neighborhood_students: Option<u64>,
    /// Neighbourhood-student share as a fraction in `[0, 1]`; `None` when
    /// `total_students == 0`.
    pub pss: Option<f64>,
    pub latinx_share: Option<f64>,
    pub grade_band: String,
}

impl School {
    /// Builds a school from counts, deriving the share.
    pub fn from_counts(
        id: impl Into<String>,
        location: GeoPoint,
        total_students: u64,
        neighborhood_students: u64,
    ) -> Self {
        let pss = (total_students > 0)
            .then(|| neighborhood_students as f64 / total_students as f64);
        School {
            id: id.into(),
            name: String::new(),
            location,
            total_students,
            neighborhood_students: Some(neighborhood_students),
            pss,
            latinx_share: None,
            grade_band: String::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HazardKind {
    Point,
    Line,
    Polygon,
}

impl std::fmt::Display for HazardKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            HazardKind::Point => "point",
            HazardKind::Line => "line",
            HazardKind::Polygon => "polygon",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExposureUnit {
    Count,
    Kilometers,
}

impl HazardKind {
    pub fn exposure_unit(self) -> ExposureUnit {
        match self {
            HazardKind::Line => ExposureUnit::Kilometers,
            HazardKind::Point | HazardKind::Polygon => ExposureUnit::Count,
        }
    }

    fn accepts(self, g: &Geometry) -> bool {
        matches!(
            (self, g),
            (HazardKind::Point, Geometry::Point(_))
                | (HazardKind::Line, Geometry::Line(_))
                | (HazardKind::Polygon, Geometry::Polygon(_))
        )
    }
}

#[derive(Debug, Clone)]
pub struct HazardFeature {
    pub id: String,
    /// Multi-part geometries are expanded; all parts share the feature id.
    pub parts: Vec<Geometry>,
    pub properties: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone)]
pub struct HazardLayer {
    pub id: String,
    pub title: String,
    pub kind: HazardKind,
    pub features: Vec<HazardFeature>,
}

impl HazardLayer {
    /// Checks that every part matches `kind`. Attributes (for example
    /// precomputed risk scores on facility points) are carried through
    /// untouched.
    pub fn new(
        id: impl Into<String>,
        title: impl Into<String>,
        kind: HazardKind,
        features: Vec<ParsedFeature>,
    ) -> Result<Self, IngestError> {
        let id = id.into();
        for (i, f) in features.iter().enumerate() {
            if let Some(g) = f.parts.iter().find(|g| !kind.accepts(g)) {
                return Err(IngestError::KindMismatch {
                    layer: id,
                    feature_index: i,
                    expected: kind,
                    found: g.type_name(),
                });
            }
        }
        Ok(HazardLayer {
            id,
            title: title.into(),
            kind,
            features: features
                .into_iter()
                .map(|f| HazardFeature { id: f.id, parts: f.parts, properties: f.properties })
                .collect(),
        })
    }

    pub fn exposure_unit(&self) -> ExposureUnit {
        self.kind.exposure_unit()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    CommunityArea,
    CensusTract,
}

impl Scale {
    pub fn as_str(self) -> &'static str {
        match self {
            Scale::CommunityArea => "community_area",
            Scale::CensusTract => "census_tract",
        }
    }
}

impl std::str::FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "community_area" | "ca" => Ok(Scale::CommunityArea),
            "census_tract" | "ct" => Ok(Scale::CensusTract),
            other => Err(format!("unknown scale {other:?}")),
        }
    }
}

impl std::fmt::Display for Scale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct Zone {
    pub id: String,
    pub name: String,
    pub polygons: Vec<Polygon>,
    pub latinx_share: Option<f64>,
    /// Geometry exactly as it appeared in the source file.
    pub raw_geometry: Box<RawValue>,
}

impl Zone {
    pub fn contains(&self, p: GeoPoint) -> bool {
        self.polygons.iter().any(|poly| crate::geo::point_in_polygon(p, poly))
    }

    /// A point strictly inside the zone, taken from its largest-extent part.
    pub fn interior_point(&self) -> Option<GeoPoint> {
        let mut parts: Vec<&Polygon> = self.polygons.iter().collect();
        parts.sort_by(|a, b| {
            let area = |p: &Polygon| {
                let bb = p.bbox();
                (bb.max_lon - bb.min_lon) * (bb.max_lat - bb.min_lat)
            };
            area(b).total_cmp(&area(a))
        });
        parts.into_iter().find_map(Polygon::interior_point)
    }
}

#[derive(Debug, Clone)]
pub struct ZoneSet {
    pub scale: Scale,
    pub zones: Vec<Zone>,
}

/// Which feature properties carry zone identity and demographics.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ZoneProperties {
    /// Property holding the zone id; the feature's `id` member when absent.
    #[serde(default)]
    pub id_property: Option<String>,
    #[serde(default)]
    pub name_property: Option<String>,
    #[serde(default)]
    pub latinx_property: Option<String>,
    #[serde(default)]
    pub latinx_unit: ShareUnit,
}

fn property_string(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

impl ZoneSet {
    pub fn from_geojson(
        scale: Scale,
        bytes: &[u8],
        props: &ZoneProperties,
    ) -> Result<Self, IngestError> {
        let features = parse_geojson(bytes, props.id_property.as_deref())?;
        let mut zones = Vec::with_capacity(features.len());
        for f in features {
            let mut polygons = Vec::with_capacity(f.parts.len());
            for g in f.parts {
                match g {
                    Geometry::Polygon(p) => polygons.push(p),
                    other => {
                        return Err(IngestError::UnsupportedGeometry {
                            feature_index: f.index,
                            type_name: format!("{} (zones must be polygons)", other.type_name()),
                        })
                    }
                }
            }
            let name = props
                .name_property
                .as_deref()
                .and_then(|k| f.properties.get(k))
                .and_then(property_string)
                .unwrap_or_default();
            let latinx_share = match props.latinx_property.as_deref() {
                Some(key) => match f.properties.get(key) {
                    None | Some(serde_json::Value::Null) => None,
                    Some(v) => {
                        let raw = v.as_f64().ok_or_else(|| IngestError::Property {
                            feature_index: f.index,
                            message: format!("property {key:?} is not numeric"),
                        })?;
                        let share = props.latinx_unit.to_fraction(raw);
                        if !(0.0..=1.0).contains(&share) {
                            return Err(IngestError::Property {
                                feature_index: f.index,
                                message: format!("property {key:?} = {raw} is outside the valid share range"),
                            });
                        }
                        Some(share)
                    }
                },
                None => None,
            };
            zones.push(Zone {
                id: f.id,
                name,
                polygons,
                latinx_share,
                raw_geometry: f.raw_geometry,
            });
        }
        Ok(ZoneSet { scale, zones })
    }

    pub fn get(&self, id: &str) -> Option<&Zone> {
        self.zones.iter().find(|z| z.id == id)
    }
}
