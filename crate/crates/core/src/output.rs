//! Byte-stable serialisations of run results. Every JSON body is pretty
//! printed with a trailing newline so CLI artefacts and HTTP responses for
//! the same request are identical.

use serde::Serialize;
use serde_json::value::RawValue;

use crate::classify::BreakSet;
use crate::engine::{Dataset, Exclusion, RunOutput, RunRequest, SchoolRecord};
use crate::ingest::{ExposureUnit, Scale};

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("run outputs serialise");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct ZoneProps<'a> {
    zone_id: &'a str,
    name: &'a str,
    cpb: f64,
    n_schools: usize,
    class_index: usize,
    class_label: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    latinx_share: Option<f64>,
}

#[derive(Serialize)]
struct ZoneFeature<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    id: &'a str,
    geometry: &'a RawValue,
    properties: ZoneProps<'a>,
}

#[derive(Serialize)]
struct ExcludedSchool<'a> {
    school_id: &'a str,
    reason: Exclusion,
}

#[derive(Serialize)]
struct Meta<'a> {
    layer: &'a str,
    layer_title: &'a str,
    exposure_unit: ExposureUnit,
    /// Scores are share-of-students (a fraction) times exposure.
    score_unit: String,
    pss_unit: &'static str,
    radius_m: f64,
    scale: Scale,
    method: &'static str,
    k_requested: usize,
    break_set: &'a BreakSet,
    n_zones: usize,
    n_schools_scored: usize,
    excluded_schools: Vec<ExcludedSchool<'a>>,
}

#[derive(Serialize)]
struct Collection<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    meta: Meta<'a>,
    features: Vec<ZoneFeature<'a>>,
}

fn unit_name(u: ExposureUnit) -> &'static str {
    match u {
        ExposureUnit::Count => "count",
        ExposureUnit::Kilometers => "kilometers",
    }
}

/// Classified zones as a GeoJSON FeatureCollection with a `meta` member.
/// Zone geometry is copied verbatim from the source file.
pub fn burden_geojson(ds: &Dataset, out: &RunOutput) -> String {
    let req = &out.request;
    let zone_set = ds.zone_set(req.scale).expect("run output refers to a loaded scale");
    let surface = &out.surface;
    let features = surface
        .zones
        .iter()
        .zip(&surface.class_index)
        .map(|(zb, &class)| {
            let zone = zone_set.get(&zb.zone_id).expect("zone burden refers to a known zone");
            ZoneFeature {
                kind: "Feature",
                id: &zb.zone_id,
                geometry: &zone.raw_geometry,
                properties: ZoneProps {
                    zone_id: &zb.zone_id,
                    name: &zone.name,
                    cpb: zb.cpb,
                    n_schools: zb.n_schools,
                    class_index: class,
                    class_label: &surface.break_set.labels[class],
                    latinx_share: zone.latinx_share,
                },
            }
        })
        .collect();
    let meta = Meta {
        layer: &req.layer,
        layer_title: &out.layer_title,
        exposure_unit: out.unit,
        score_unit: format!("fraction x {}", unit_name(out.unit)),
        pss_unit: "fraction",
        radius_m: req.radius_m,
        scale: req.scale,
        method: req.method.as_str(),
        k_requested: req.k,
        break_set: &surface.break_set,
        n_zones: surface.zones.len(),
        n_schools_scored: out.records.iter().filter(|r| !r.excluded).count(),
        excluded_schools: out
            .records
            .iter()
            .filter_map(|r| r.exclusion_reason.map(|reason| ExcludedSchool { school_id: &r.school_id, reason }))
            .collect(),
    };
    to_json(&Collection { kind: "FeatureCollection", meta, features })
}

/// Per-school audit rows as a JSON array, sorted by school id.
pub fn schools_json(records: &[SchoolRecord]) -> String {
    to_json(records)
}

fn num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `school_id,pss,hs,score,zone`; undefined values are empty cells.
pub fn schools_csv(out: &RunOutput) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["school_id", "pss", "hs", "score", "zone"]).expect("in-memory write");
    for r in &out.records {
        w.write_record([
            r.school_id.as_str(),
            &num(r.pss),
            &r.hs.to_string(),
            &num(r.score),
            r.zone.as_deref().unwrap_or(""),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// Report wrapper carrying the parameters it was computed for.
#[derive(Serialize)]
pub struct Report<'a, T: Serialize> {
    pub kind: &'static str,
    pub layer: &'a str,
    pub radius_m: f64,
    pub method: &'static str,
    pub k: usize,
    pub report: &'a T,
}

pub fn report_json<T: Serialize>(kind: &'static str, req: &RunRequest, report: &T) -> String {
    to_json(&Report { kind, layer: &req.layer, radius_m: req.radius_m, method: req.method.as_str(), k: req.k, report })
}
