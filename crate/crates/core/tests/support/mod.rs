//! Oracles, random generators and the headline checks, shared by the
//! integration tests here and the workspace acceptance harness.

#![allow(dead_code)]

pub mod criteria;

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_bigint::BigInt;
use num_rational::BigRational;
use proxburden::config::RunConfig;
use proxburden::geo::{haversine_distance, local_project, min_distance_to_polygon, GeoPoint, Geometry, Polygon, Polyline};
use proxburden::ingest::{HazardFeature, HazardKind, HazardLayer, School};
use proxburden::Dataset;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const R: f64 = 6_371_008.8;
pub const MILE: f64 = 1609.344;
pub const LAT0: f64 = 41.8;
pub const LON0: f64 = -87.7;

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

// ---- planar oracle geometry, written out independently of the crate ----

pub fn to_plane(o: (f64, f64), p: (f64, f64)) -> (f64, f64) {
    let k = R * std::f64::consts::PI / 180.0;
    (k * (p.0 - o.0) * (o.1 * std::f64::consts::PI / 180.0).cos(), k * (p.1 - o.1))
}

pub fn from_plane(o: (f64, f64), q: (f64, f64)) -> GeoPoint {
    let k = R * std::f64::consts::PI / 180.0;
    GeoPoint { lon: o.0 + q.0 / (k * (o.1 * std::f64::consts::PI / 180.0).cos()), lat: o.1 + q.1 / k }
}

/// Length inside the disc by walking each segment in 1 cm steps and
/// counting midpoints that fall inside. Steps outside the disc's bounding
/// square are skipped in bulk.
pub fn sampled_clip(center: (f64, f64), r: f64, line: &[(f64, f64)]) -> f64 {
    const STEP: f64 = 0.01;
    let pts: Vec<(f64, f64)> = line.iter().map(|p| to_plane(center, *p)).collect();
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        if len == 0.0 {
            continue;
        }
        let n = (len / STEP).ceil() as u64;
        let h = len / n as f64;
        let (ux, uy) = ((b.0 - a.0) / len, (b.1 - a.1) / len);
        // parameter range where the segment is inside the square [-r, r]^2
        let (mut lo, mut hi) = (0.0f64, len);
        for (p0, u) in [(a.0, ux), (a.1, uy)] {
            if u.abs() < 1e-15 {
                if p0.abs() > r {
                    hi = -1.0;
                }
            } else {
                let (t1, t2) = ((-r - p0) / u, (r - p0) / u);
                lo = lo.max(t1.min(t2));
                hi = hi.min(t1.max(t2));
            }
        }
        if hi < lo {
            continue;
        }
        let i0 = ((lo / h).floor() as u64).saturating_sub(1);
        let i1 = ((hi / h).ceil() as u64 + 1).min(n);
        let r2 = r * r;
        let mut inside = 0u64;
        for i in i0..i1 {
            let t = (i as f64 + 0.5) * h;
            let (x, y) = (a.0 + t * ux, a.1 + t * uy);
            if x * x + y * y <= r2 {
                inside += 1;
            }
        }
        total += inside as f64 * h;
    }
    total
}

pub fn random_polyline(rng: &mut ChaCha8Rng, center: (f64, f64), spread: f64) -> Vec<(f64, f64)> {
    let n = rng.gen_range(2..=6);
    (0..n)
        .map(|_| {
            let q = (rng.gen_range(-spread..spread), rng.gen_range(-spread..spread));
            let g = from_plane(center, q);
            (g.lon, g.lat)
        })
        .collect()
}

pub fn polyline(pts: &[(f64, f64)]) -> Polyline {
    Polyline::new(pts.iter().map(|&(lon, lat)| GeoPoint { lon, lat }).collect()).unwrap()
}

// ---- exact natural-breaks oracle ----

pub fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite")
}

/// Exact within-class sum of squared deviations of `sorted` split after each
/// index in `ends`.
pub fn exact_cost(sorted: &[f64], ends: &[usize]) -> BigRational {
    let mut total = BigRational::from_integer(BigInt::from(0));
    let mut start = 0;
    for end in ends.iter().copied().chain(std::iter::once(sorted.len() - 1)) {
        let class: Vec<BigRational> = sorted[start..=end].iter().map(|v| exact(*v)).collect();
        let n = BigRational::from_integer(BigInt::from(class.len()));
        let sum = class.iter().fold(BigRational::from_integer(BigInt::from(0)), |a, b| a + b);
        let mean = sum / n;
        for v in &class {
            let d = v - &mean;
            total += &d * &d;
        }
        start = end + 1;
    }
    total
}

/// Every strictly increasing `k - 1`-subset of `0..n-1`, in lexicographic order.
pub fn all_cuts(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(from: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in from..n - 1 {
            cur.push(i);
            go(i + 1, n, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k - 1, &mut Vec::new(), &mut out);
    out
}

/// Minimum exact cost and the lexicographically first partition attaining it.
pub fn exhaustive(sorted: &[f64], k: usize) -> (BigRational, Vec<usize>) {
    let mut best: Option<(BigRational, Vec<usize>)> = None;
    for cuts in all_cuts(sorted.len(), k) {
        let c = exact_cost(sorted, &cuts);
        if best.as_ref().is_none_or(|(b, _)| c < *b) {
            best = Some((c, cuts));
        }
    }
    best.unwrap()
}

// ---- random features and schools ----

/// Anywhere in a city-sized box.
pub fn city_point(rng: &mut ChaCha8Rng) -> GeoPoint {
    GeoPoint { lon: rng.gen_range(-87.94..-87.52), lat: rng.gen_range(41.64..42.02) }
}

/// A tighter box, so layers and schools overlap densely.
pub fn core_point(rng: &mut ChaCha8Rng) -> GeoPoint {
    GeoPoint { lon: rng.gen_range(-87.80..-87.60), lat: rng.gen_range(41.78..41.92) }
}

pub fn jitter(rng: &mut ChaCha8Rng, p: GeoPoint, d: f64) -> GeoPoint {
    GeoPoint { lon: p.lon + rng.gen_range(-d..d), lat: p.lat + rng.gen_range(-d..d) }
}

fn rectangle(base: GeoPoint, w: f64, h: f64) -> Polygon {
    let ring = vec![
        base,
        GeoPoint { lon: base.lon + w, lat: base.lat },
        GeoPoint { lon: base.lon + w, lat: base.lat + h },
        GeoPoint { lon: base.lon, lat: base.lat + h },
        base,
    ];
    Polygon::new(ring, vec![]).unwrap()
}

/// Point, line or rectangle anywhere in the city box.
pub fn random_feature(rng: &mut ChaCha8Rng) -> Geometry {
    let base = city_point(rng);
    match rng.gen_range(0..3) {
        0 => Geometry::Point(base),
        1 => {
            let n = rng.gen_range(2..6);
            Geometry::Line(Polyline::new((0..n).map(|_| jitter(rng, base, 0.03)).collect()).unwrap())
        }
        _ => {
            let (w, h) = (rng.gen_range(0.001..0.02), rng.gen_range(0.001..0.02));
            Geometry::Polygon(rectangle(base, w, h))
        }
    }
}

/// Whether `g` meets the closed disc, by the same metrics the burden
/// computation uses (great circle for points, local plane otherwise).
pub fn hits(g: &Geometry, c: GeoPoint, r: f64) -> bool {
    match g {
        Geometry::Point(p) => haversine_distance(c, *p) <= r,
        Geometry::Polygon(poly) => min_distance_to_polygon(c, poly) <= r,
        Geometry::Line(line) => line.points().windows(2).any(|w| {
            let (a, b) = (local_project(c, w[0]), local_project(c, w[1]));
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let l2 = dx * dx + dy * dy;
            let t = if l2 == 0.0 { 0.0 } else { (-(a.x * dx + a.y * dy) / l2).clamp(0.0, 1.0) };
            (a.x + t * dx).hypot(a.y + t * dy) <= r
        }),
    }
}

pub fn kind_geometry(rng: &mut ChaCha8Rng, kind: HazardKind) -> Geometry {
    let base = core_point(rng);
    match kind {
        HazardKind::Point => Geometry::Point(base),
        HazardKind::Line => {
            let n = rng.gen_range(2..7);
            Geometry::Line(Polyline::new((0..n).map(|_| jitter(rng, base, 0.02)).collect()).unwrap())
        }
        HazardKind::Polygon => {
            let (w, h) = (rng.gen_range(0.001..0.01), rng.gen_range(0.001..0.01));
            Geometry::Polygon(rectangle(base, w, h))
        }
    }
}

pub fn layer(id: &str, kind: HazardKind, features: Vec<HazardFeature>) -> HazardLayer {
    HazardLayer { id: id.into(), title: id.into(), kind, features }
}

/// `n` features of one kind, each with one or two parts.
pub fn random_layer(rng: &mut ChaCha8Rng, kind: HazardKind, n: usize) -> HazardLayer {
    let features = (0..n)
        .map(|i| {
            let parts = (0..rng.gen_range(1..3)).map(|_| kind_geometry(rng, kind)).collect();
            HazardFeature { id: format!("h{i}"), parts, properties: Default::default() }
        })
        .collect();
    layer("random", kind, features)
}

/// Schools with random enrolment; some have none.
pub fn random_schools(rng: &mut ChaCha8Rng, n: usize) -> Vec<School> {
    (0..n)
        .map(|i| {
            let total = rng.gen_range(0..900);
            let nbhd = if total == 0 { 0 } else { rng.gen_range(0..=total) };
            School::from_counts(format!("S{i:04}"), core_point(rng), total, nbhd)
        })
        .collect()
}

pub const KINDS: [HazardKind; 3] = [HazardKind::Point, HazardKind::Line, HazardKind::Polygon];

// ---- the bundled fixture and its independently computed table ----

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/synthetic")
}

pub fn fixture_dataset() -> Dataset {
    let cfg = RunConfig::load(&fixture_dir().join("config.json")).unwrap();
    Dataset::load(&cfg).unwrap()
}

pub struct OracleRow {
    pub pss: Option<f64>,
    pub hs: BTreeMap<&'static str, f64>,
    pub score: BTreeMap<&'static str, Option<f64>>,
    pub ca: Option<String>,
    pub ct: Option<String>,
}

/// Layer id with its hs and score columns in the oracle table.
pub const FIXTURE_LAYERS: [(&str, usize, usize); 3] =
    [("industrial_roads", 2, 3), ("tri_facilities", 4, 5), ("brownfields", 6, 7)];

pub fn fixture_oracle() -> BTreeMap<String, OracleRow> {
    let mut rdr = csv::Reader::from_path(fixture_dir().join("oracle/expected_scores.csv")).unwrap();
    let num = |s: &str| (!s.is_empty()).then(|| s.parse::<f64>().unwrap());
    let zone = |s: &str| (!s.is_empty()).then(|| s.to_string());
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            let mut hs = BTreeMap::new();
            let mut score = BTreeMap::new();
            for (layer, h, s) in FIXTURE_LAYERS {
                hs.insert(layer, num(&r[h]).unwrap());
                score.insert(layer, num(&r[s]));
            }
            let row = OracleRow { pss: num(&r[1]), hs, score, ca: zone(&r[8]), ct: zone(&r[9]) };
            (r[0].to_string(), row)
        })
        .collect()
}
