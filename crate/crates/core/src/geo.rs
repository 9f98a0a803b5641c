//! WGS84 geometry primitives and the exact spatial predicates every burden
//! computation is built on.
//!
//! Distances between points are great-circle distances on a sphere. Line
//! clipping and polygon distances work in a local equirectangular plane
//! centred on the query point, which is accurate to well under 0.1% within a
//! few kilometres of the origin.

use serde::{Deserialize, Serialize};

/// Mean Earth radius in metres.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// International mile in metres.
pub const METERS_PER_MILE: f64 = 1_609.344;

/// Default proximity radius: one mile.
pub const DEFAULT_RADIUS_M: f64 = METERS_PER_MILE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lon: f64,
    pub lat: f64,
}

impl GeoPoint {
    /// Builds a point, rejecting non-finite or out-of-range coordinates.
    pub fn new(lon: f64, lat: f64) -> Option<Self> {
        let p = GeoPoint { lon, lat };
        p.is_valid().then_some(p)
    }

    pub fn is_valid(&self) -> bool {
        self.lon.is_finite()
            && self.lat.is_finite()
            && (-180.0..=180.0).contains(&self.lon)
            && (-90.0..=90.0).contains(&self.lat)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(&self, other: &PlanarPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<GeoPoint>,
}

impl Polyline {
    /// Fails with `None` when fewer than two vertices are given.
    pub fn new(points: Vec<GeoPoint>) -> Option<Self> {
        (points.len() >= 2).then_some(Polyline { points })
    }

    pub fn points(&self) -> &[GeoPoint] {
        &self.points
    }

    pub fn segments(&self) -> impl Iterator<Item = (GeoPoint, GeoPoint)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }

    /// Planar length after projecting about `origin`.
    pub fn planar_length(&self, origin: GeoPoint) -> f64 {
        self.segments()
            .map(|(a, b)| local_project(origin, a).distance(&local_project(origin, b)))
            .sum()
    }

    pub fn bbox(&self) -> BBox {
        BBox::of_points(&self.points)
    }
}

/// A closed ring: at least four points, first equal to last.
pub type Ring = Vec<GeoPoint>;

#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    outer: Ring,
    holes: Vec<Ring>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RingError {
    TooFewPoints(usize),
    NotClosed,
}

impl std::fmt::Display for RingError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RingError::TooFewPoints(n) => write!(f, "ring has {n} points, at least 4 required"),
            RingError::NotClosed => f.write_str("ring not closed (first point differs from last)"),
        }
    }
}

fn check_ring(ring: &[GeoPoint]) -> Result<(), RingError> {
    if ring.len() < 4 {
        return Err(RingError::TooFewPoints(ring.len()));
    }
    if ring.first() != ring.last() {
        return Err(RingError::NotClosed);
    }
    Ok(())
}

impl Polygon {
    pub fn new(outer: Ring, holes: Vec<Ring>) -> Result<Self, RingError> {
        check_ring(&outer)?;
        for h in &holes {
            check_ring(h)?;
        }
        Ok(Polygon { outer, holes })
    }

    pub fn outer(&self) -> &[GeoPoint] {
        &self.outer
    }

    pub fn holes(&self) -> &[Ring] {
        &self.holes
    }

    pub fn rings(&self) -> impl Iterator<Item = &[GeoPoint]> {
        std::iter::once(self.outer.as_slice()).chain(self.holes.iter().map(|h| h.as_slice()))
    }

    pub fn bbox(&self) -> BBox {
        BBox::of_points(&self.outer)
    }

    fn boundary_segments(&self) -> impl Iterator<Item = (GeoPoint, GeoPoint)> + '_ {
        self.rings().flat_map(|r| r.windows(2).map(|w| (w[0], w[1])))
    }

    /// A point guaranteed to lie strictly inside the polygon (not on its
    /// boundary, not in a hole), when one can be found.
    ///
    /// Tries the vertex centroid of the outer ring first, then scans a
    /// horizontal line through the middle of the bounding box and takes the
    /// midpoint of the widest interior interval.
    pub fn interior_point(&self) -> Option<GeoPoint> {
        let n = (self.outer.len() - 1) as f64;
        let (sx, sy) = self.outer[..self.outer.len() - 1]
            .iter()
            .fold((0.0, 0.0), |(x, y), p| (x + p.lon, y + p.lat));
        let centroid = GeoPoint { lon: sx / n, lat: sy / n };
        if point_in_polygon(centroid, self) && !self.on_boundary(centroid) {
            return Some(centroid);
        }

        let bb = self.bbox();
        let mut best: Option<(f64, GeoPoint)> = None;
        // Several scanlines in case the middle one runs along an edge.
        for frac in [0.5, 0.25, 0.75, 0.375, 0.625, 0.125, 0.875] {
            let y = bb.min_lat + frac * (bb.max_lat - bb.min_lat);
            let mut xs: Vec<f64> = self
                .boundary_segments()
                .filter_map(|(a, b)| {
                    if (a.lat > y) != (b.lat > y) {
                        Some(a.lon + (y - a.lat) * (b.lon - a.lon) / (b.lat - a.lat))
                    } else {
                        None
                    }
                })
                .collect();
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks_exact(2) {
                let width = pair[1] - pair[0];
                let mid = GeoPoint { lon: 0.5 * (pair[0] + pair[1]), lat: y };
                if width > 0.0
                    && best.as_ref().is_none_or(|(w, _)| width > *w)
                    && point_in_polygon(mid, self)
                    && !self.on_boundary(mid)
                {
                    best = Some((width, mid));
                }
            }
            if best.is_some() {
                break;
            }
        }
        best.map(|(_, p)| p)
    }

    pub fn on_boundary(&self, p: GeoPoint) -> bool {
        self.boundary_segments().any(|(a, b)| on_segment(p, a, b))
    }
}

/// Longitude/latitude bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min_lon: f64,
    pub min_lat: f64,
    pub max_lon: f64,
    pub max_lat: f64,
}

impl BBox {
    pub fn of_point(p: GeoPoint) -> Self {
        BBox { min_lon: p.lon, min_lat: p.lat, max_lon: p.lon, max_lat: p.lat }
    }

    pub fn of_points(points: &[GeoPoint]) -> Self {
        let mut bb = BBox::of_point(points[0]);
        for p in &points[1..] {
            bb.min_lon = bb.min_lon.min(p.lon);
            bb.min_lat = bb.min_lat.min(p.lat);
            bb.max_lon = bb.max_lon.max(p.lon);
            bb.max_lat = bb.max_lat.max(p.lat);
        }
        bb
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            min_lon: self.min_lon.min(other.min_lon),
            min_lat: self.min_lat.min(other.min_lat),
            max_lon: self.max_lon.max(other.max_lon),
            max_lat: self.max_lat.max(other.max_lat),
        }
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        p.lon >= self.min_lon && p.lon <= self.max_lon && p.lat >= self.min_lat && p.lat <= self.max_lat
    }

    pub fn intersects(&self, other: &BBox) -> bool {
        self.min_lon <= other.max_lon
            && other.min_lon <= self.max_lon
            && self.min_lat <= other.max_lat
            && other.min_lat <= self.max_lat
    }
}

/// Any single geometry a hazard feature or zone can carry.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Point(GeoPoint),
    Line(Polyline),
    Polygon(Polygon),
}

impl Geometry {
    pub fn bbox(&self) -> BBox {
        match self {
            Geometry::Point(p) => BBox::of_point(*p),
            Geometry::Line(l) => l.bbox(),
            Geometry::Polygon(p) => p.bbox(),
        }
    }

    pub fn points(&self) -> Box<dyn Iterator<Item = &GeoPoint> + '_> {
        match self {
            Geometry::Point(p) => Box::new(std::iter::once(p)),
            Geometry::Line(l) => Box::new(l.points().iter()),
            Geometry::Polygon(p) => Box::new(p.rings().flatten()),
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Geometry::Point(_) => "Point",
            Geometry::Line(_) => "LineString",
            Geometry::Polygon(_) => "Polygon",
        }
    }
}

/// Great-circle distance in metres (haversine form).
pub fn haversine_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    // Symmetric in (a, b): every term above is even in the argument order.
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Equirectangular projection about `origin`, in metres.
pub fn local_project(origin: GeoPoint, p: GeoPoint) -> PlanarPoint {
    let k = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
    PlanarPoint {
        x: k * (p.lon - origin.lon) * origin.lat.to_radians().cos(),
        y: k * (p.lat - origin.lat),
    }
}

/// Length of the part of segment `a`-`b` lying inside the closed disc of
/// radius `r` centred on the planar origin.
fn segment_length_in_disc(a: PlanarPoint, b: PlanarPoint, r: f64) -> f64 {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return 0.0;
    }
    // |a + t d|^2 = r^2  =>  len2 t^2 + 2 (a.d) t + (|a|^2 - r^2) = 0
    let half_b = a.x * dx + a.y * dy;
    let c = a.x * a.x + a.y * a.y - r * r;
    let disc = half_b * half_b - len2 * c;
    if disc <= 0.0 {
        return 0.0;
    }
    let sq = disc.sqrt();
    let t0 = ((-half_b - sq) / len2).max(0.0);
    let t1 = ((-half_b + sq) / len2).min(1.0);
    if t1 <= t0 {
        return 0.0;
    }
    (t1 - t0) * len2.sqrt()
}

/// Total planar length of `line` inside the closed disc of `radius` metres
/// around `center`.
pub fn clip_length_in_disc(center: GeoPoint, radius: f64, line: &Polyline) -> f64 {
    let projected: Vec<PlanarPoint> = line.points().iter().map(|p| local_project(center, *p)).collect();
    projected
        .windows(2)
        .map(|w| segment_length_in_disc(w[0], w[1], radius))
        .sum()
}

const ON_SEGMENT_EPS: f64 = 1e-12;

fn on_segment(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> bool {
    let cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
    if cross.abs() > ON_SEGMENT_EPS {
        return false;
    }
    p.lon >= a.lon.min(b.lon) - ON_SEGMENT_EPS
        && p.lon <= a.lon.max(b.lon) + ON_SEGMENT_EPS
        && p.lat >= a.lat.min(b.lat) - ON_SEGMENT_EPS
        && p.lat <= a.lat.max(b.lat) + ON_SEGMENT_EPS
}

/// Even-odd containment on raw lon/lat coordinates. Points on any ring
/// (outer or hole) count as inside.
pub fn point_in_polygon(p: GeoPoint, poly: &Polygon) -> bool {
    if !poly.bbox().contains(p) {
        return false;
    }
    let mut inside = false;
    for ring in poly.rings() {
        for w in ring.windows(2) {
            let (a, b) = (w[0], w[1]);
            if on_segment(p, a, b) {
                return true;
            }
            if (a.lat > p.lat) != (b.lat > p.lat) {
                let x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
                if p.lon < x {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

fn point_segment_distance(a: PlanarPoint, b: PlanarPoint) -> f64 {
    // Distance from the planar origin to segment a-b.
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return a.norm();
    }
    let t = (-(a.x * dx + a.y * dy) / len2).clamp(0.0, 1.0);
    PlanarPoint { x: a.x + t * dx, y: a.y + t * dy }.norm()
}

/// Zero when `p` is inside `poly`, otherwise the planar distance from `p` to
/// the nearest boundary segment (projected about `p`).
pub fn min_distance_to_polygon(p: GeoPoint, poly: &Polygon) -> f64 {
    if point_in_polygon(p, poly) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for ring in poly.rings() {
        let projected: Vec<PlanarPoint> = ring.iter().map(|q| local_project(p, *q)).collect();
        for w in projected.windows(2) {
            best = best.min(point_segment_distance(w[0], w[1]));
        }
    }
    best
}
