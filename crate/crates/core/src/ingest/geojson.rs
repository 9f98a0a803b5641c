use std::collections::HashSet;

use serde::Deserialize;
use serde_json::value::RawValue;
use serde_json::{json, Map, Value};

use super::IngestError;
use crate::geo::{GeoPoint, Geometry, Polygon, Polyline, Ring};

/// One GeoJSON feature with multi-part geometries expanded.
#[derive(Debug, Clone)]
pub struct ParsedFeature {
    pub id: String,
    /// Position of the feature within the collection.
    pub index: usize,
    pub parts: Vec<Geometry>,
    pub properties: Map<String, Value>,
    pub raw_geometry: Box<RawValue>,
}

impl ParsedFeature {
    /// `(feature id, primitive geometry)` pairs, one per part.
    pub fn primitives(&self) -> impl Iterator<Item = (&str, &Geometry)> {
        self.parts.iter().map(move |g| (self.id.as_str(), g))
    }
}

#[derive(Deserialize)]
struct RawCollection<'a> {
    #[serde(rename = "type")]
    kind: String,
    #[serde(borrow, default)]
    features: Vec<RawFeature<'a>>,
}

#[derive(Deserialize)]
struct RawFeature<'a> {
    #[serde(default)]
    id: Option<Value>,
    #[serde(borrow, default)]
    geometry: Option<&'a RawValue>,
    #[serde(default)]
    properties: Option<Map<String, Value>>,
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

fn json_error(text: &str, e: serde_json::Error) -> IngestError {
    IngestError::Json { offset: byte_offset(text, e.line(), e.column()), message: e.to_string() }
}

fn invalid(feature_index: usize, reason: impl Into<String>) -> IngestError {
    IngestError::InvalidGeometry { feature_index, reason: reason.into() }
}

fn position(v: &Value, fi: usize) -> Result<GeoPoint, IngestError> {
    let arr = v.as_array().filter(|a| a.len() >= 2).ok_or_else(|| invalid(fi, "position must be [lon, lat]"))?;
    let lon = arr[0].as_f64().ok_or_else(|| invalid(fi, "non-numeric longitude"))?;
    let lat = arr[1].as_f64().ok_or_else(|| invalid(fi, "non-numeric latitude"))?;
    // Range checks are reported by dataset validation, not here.
    Ok(GeoPoint { lon, lat })
}

fn positions(v: &Value, fi: usize) -> Result<Vec<GeoPoint>, IngestError> {
    v.as_array()
        .ok_or_else(|| invalid(fi, "expected an array of positions"))?
        .iter()
        .map(|p| position(p, fi))
        .collect()
}

fn line(v: &Value, fi: usize) -> Result<Polyline, IngestError> {
    Polyline::new(positions(v, fi)?).ok_or_else(|| invalid(fi, "LineString needs at least 2 positions"))
}

fn polygon(v: &Value, fi: usize) -> Result<Polygon, IngestError> {
    let rings = v.as_array().ok_or_else(|| invalid(fi, "expected an array of rings"))?;
    let mut rings: Vec<Ring> = rings.iter().map(|r| positions(r, fi)).collect::<Result<_, _>>()?;
    if rings.is_empty() {
        return Err(invalid(fi, "polygon has no rings"));
    }
    let outer = rings.remove(0);
    Polygon::new(outer, rings).map_err(|e| invalid(fi, e.to_string()))
}

fn multi<T>(
    v: &Value,
    fi: usize,
    each: impl Fn(&Value, usize) -> Result<T, IngestError>,
) -> Result<Vec<T>, IngestError> {
    let parts = v.as_array().ok_or_else(|| invalid(fi, "expected an array of parts"))?;
    if parts.is_empty() {
        return Err(invalid(fi, "multi-part geometry has no parts"));
    }
    parts.iter().map(|p| each(p, fi)).collect()
}

fn geometry(v: &Value, fi: usize) -> Result<Vec<Geometry>, IngestError> {
    let kind = v.get("type").and_then(Value::as_str).unwrap_or("null");
    let coords = || v.get("coordinates").ok_or_else(|| invalid(fi, "missing coordinates"));
    Ok(match kind {
        "Point" => vec![Geometry::Point(position(coords()?, fi)?)],
        "LineString" => vec![Geometry::Line(line(coords()?, fi)?)],
        "MultiLineString" => multi(coords()?, fi, line)?.into_iter().map(Geometry::Line).collect(),
        "Polygon" => vec![Geometry::Polygon(polygon(coords()?, fi)?)],
        "MultiPolygon" => multi(coords()?, fi, polygon)?.into_iter().map(Geometry::Polygon).collect(),
        other => {
            return Err(IngestError::UnsupportedGeometry { feature_index: fi, type_name: other.to_string() })
        }
    })
}

/// Parses a GeoJSON FeatureCollection (coordinates as `[lon, lat]`).
///
/// Feature ids come from the `id` member, then from `id_property`, then are
/// synthesised as `f<index>`. Ids must be unique within the collection.
pub fn parse_geojson(bytes: &[u8], id_property: Option<&str>) -> Result<Vec<ParsedFeature>, IngestError> {
    let text = std::str::from_utf8(bytes).map_err(|e| IngestError::Json {
        offset: e.valid_up_to(),
        message: "input is not valid UTF-8".into(),
    })?;
    // Syntax first, so truncation is reported as a JSON error with an offset.
    let _: serde::de::IgnoredAny = serde_json::from_str(text).map_err(|e| json_error(text, e))?;
    let raw: RawCollection<'_> = serde_json::from_str(text).map_err(|e| json_error(text, e))?;
    if raw.kind != "FeatureCollection" {
        return Err(IngestError::NotFeatureCollection(raw.kind));
    }

    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(raw.features.len());
    for (index, f) in raw.features.into_iter().enumerate() {
        let properties = f.properties.unwrap_or_default();
        let id = f
            .id
            .as_ref()
            .and_then(super::property_string)
            .or_else(|| id_property.and_then(|k| properties.get(k)).and_then(super::property_string))
            .unwrap_or_else(|| format!("f{index}"));
        if !seen.insert(id.clone()) {
            return Err(IngestError::DuplicateId(id));
        }
        let raw_geometry = f.geometry.ok_or_else(|| IngestError::UnsupportedGeometry {
            feature_index: index,
            type_name: "null".into(),
        })?;
        let value: Value = serde_json::from_str(raw_geometry.get()).map_err(|e| json_error(text, e))?;
        let parts = geometry(&value, index)?;
        out.push(ParsedFeature { id, index, parts, properties, raw_geometry: raw_geometry.to_owned() });
    }
    Ok(out)
}

fn pos_value(p: &GeoPoint) -> Value {
    json!([p.lon, p.lat])
}

/// GeoJSON geometry object for a single primitive.
pub fn geometry_to_value(g: &Geometry) -> Value {
    match g {
        Geometry::Point(p) => json!({ "type": "Point", "coordinates": pos_value(p) }),
        Geometry::Line(l) => json!({
            "type": "LineString",
            "coordinates": l.points().iter().map(pos_value).collect::<Vec<_>>(),
        }),
        Geometry::Polygon(poly) => json!({
            "type": "Polygon",
            "coordinates": poly
                .rings()
                .map(|r| r.iter().map(pos_value).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        }),
    }
}
