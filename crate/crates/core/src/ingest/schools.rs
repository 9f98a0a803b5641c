use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{IngestError, School};
use crate::geo::GeoPoint;

/// How a share column is expressed in the source file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShareUnit {
    #[default]
    Fraction,
    Percent,
}

impl ShareUnit {
    pub fn to_fraction(self, v: f64) -> f64 {
        match self {
            ShareUnit::Fraction => v,
            ShareUnit::Percent => v / 100.0,
        }
    }
}

/// Header names for each school attribute. Exactly one of
/// `neighborhood_students` and `pss` must be set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchoolColumns {
    pub id: String,
    #[serde(default)]
    pub name: Option<String>,
    pub lon: String,
    pub lat: String,
    pub total_students: String,
    #[serde(default)]
    pub neighborhood_students: Option<String>,
    #[serde(default)]
    pub pss: Option<String>,
    #[serde(default)]
    pub latinx_share: Option<String>,
    #[serde(default)]
    pub grade_band: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchoolMapping {
    pub columns: SchoolColumns,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default)]
    pub pss_unit: ShareUnit,
    #[serde(default)]
    pub latinx_unit: ShareUnit,
}

fn default_delimiter() -> char {
    ','
}

impl SchoolMapping {
    pub fn new(columns: SchoolColumns) -> Self {
        SchoolMapping { columns, delimiter: ',', pss_unit: ShareUnit::Fraction, latinx_unit: ShareUnit::Fraction }
    }
}

struct Resolved {
    id: usize,
    name: Option<usize>,
    lon: usize,
    lat: usize,
    total: usize,
    neighborhood: Option<usize>,
    pss: Option<usize>,
    latinx: Option<usize>,
    grade: Option<usize>,
}

fn resolve(headers: &csv::StringRecord, cols: &SchoolColumns) -> Result<Resolved, IngestError> {
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let opt = |name: &Option<String>| name.as_deref().map(find).transpose();
    let r = Resolved {
        id: find(&cols.id)?,
        name: opt(&cols.name)?,
        lon: find(&cols.lon)?,
        lat: find(&cols.lat)?,
        total: find(&cols.total_students)?,
        neighborhood: opt(&cols.neighborhood_students)?,
        pss: opt(&cols.pss)?,
        latinx: opt(&cols.latinx_share)?,
        grade: opt(&cols.grade_band)?,
    };
    match (r.neighborhood, r.pss) {
        (Some(_), None) | (None, Some(_)) => Ok(r),
        _ => Err(IngestError::Mapping(
            "exactly one of neighborhood_students and pss must be mapped".into(),
        )),
    }
}

fn field(rec: &csv::StringRecord, idx: usize) -> &str {
    rec.get(idx).unwrap_or("").trim()
}

fn number(rec: &csv::StringRecord, idx: usize, column: &str, row: u64) -> Result<f64, IngestError> {
    let raw = field(rec, idx);
    raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| IngestError::RowValue {
        row,
        column: column.to_string(),
        message: format!("{raw:?} is not a finite number"),
    })
}

fn count(rec: &csv::StringRecord, idx: usize, column: &str, row: u64) -> Result<u64, IngestError> {
    let raw = field(rec, idx);
    raw.parse::<u64>().map_err(|_| IngestError::RowValue {
        row,
        column: column.to_string(),
        message: format!("{raw:?} is not a non-negative integer count"),
    })
}

fn share(
    rec: &csv::StringRecord,
    idx: usize,
    column: &str,
    unit: ShareUnit,
    row: u64,
) -> Result<Option<f64>, IngestError> {
    if field(rec, idx).is_empty() {
        return Ok(None);
    }
    let v = unit.to_fraction(number(rec, idx, column, row)?);
    if !(0.0..=1.0).contains(&v) {
        return Err(IngestError::RowInvalid {
            row,
            message: format!("column {column:?} is outside the valid share range"),
        });
    }
    Ok(Some(v))
}

/// Parses a school profile table. Rows with zero enrolment are kept with an
/// undefined share (`pss == None`); they are excluded from scoring later.
pub fn parse_schools(bytes: &[u8], mapping: &SchoolMapping) -> Result<Vec<School>, IngestError> {
    if !mapping.delimiter.is_ascii() {
        return Err(IngestError::Mapping("delimiter must be a single ASCII character".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(mapping.delimiter as u8)
        .has_headers(true)
        .from_reader(bytes);
    let cols = &mapping.columns;
    let r = resolve(reader.headers()?, cols)?;

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let row = rec.position().map_or(0, |p| p.line());
        let id = field(&rec, r.id).to_string();
        if id.is_empty() {
            return Err(IngestError::RowInvalid { row, message: "empty school id".into() });
        }
        let location = GeoPoint { lon: number(&rec, r.lon, &cols.lon, row)?, lat: number(&rec, r.lat, &cols.lat, row)? };
        let total_students = count(&rec, r.total, &cols.total_students, row)?;

        let (neighborhood_students, pss) = if let Some(ni) = r.neighborhood {
            let column = cols.neighborhood_students.as_deref().unwrap_or_default();
            let n = count(&rec, ni, column, row)?;
            if n > total_students {
                return Err(IngestError::RowInvalid {
                    row,
                    message: format!("neighborhood students ({n}) exceed total students ({total_students})"),
                });
            }
            (Some(n), (total_students > 0).then(|| n as f64 / total_students as f64))
        } else {
            let pi = r.pss.expect("resolve guarantees a share column");
            let column = cols.pss.as_deref().unwrap_or_default();
            let s = share(&rec, pi, column, mapping.pss_unit, row)?;
            (None, if total_students > 0 { s } else { None })
        };

        if !seen.insert(id.clone()) {
            return Err(IngestError::DuplicateId(id));
        }
        out.push(School {
            id,
            name: r.name.map(|i| field(&rec, i).to_string()).unwrap_or_default(),
            location,
            total_students,
            neighborhood_students,
            pss,
            latinx_share: match r.latinx {
                Some(i) => share(&rec, i, cols.latinx_share.as_deref().unwrap_or_default(), mapping.latinx_unit, row)?,
                None => None,
            },
            grade_band: r.grade.map(|i| field(&rec, i).to_string()).unwrap_or_default(),
        });
    }
    Ok(out)
}
