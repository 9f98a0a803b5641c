//! Uniform lon/lat grid used to narrow per-school radius queries to a small
//! candidate set. The grid is approximate by construction: it only ever
//! over-reports, and callers refine candidates with the exact predicates in
//! [`crate::geo`].

use std::collections::BTreeMap;

use crate::geo::{BBox, GeoPoint, EARTH_RADIUS_M};

/// Feature ids are dense indices into the caller's feature list.
pub type FeatureId = usize;

type Cell = (i64, i64);

#[derive(Debug, Clone)]
pub struct FeatureIndex {
    lon_step: f64,
    lat_step: f64,
    bins: BTreeMap<Cell, Vec<FeatureId>>,
    bboxes: Vec<BBox>,
}

// Widening applied to query boxes so that rounding in the degree conversion
// never drops a feature sitting exactly on the disc boundary.
const QUERY_SLACK: f64 = 1.0 + 1e-6;

impl FeatureIndex {
    /// Registers every feature in every grid cell its bounding box overlaps.
    ///
    /// The cell edge is `cell_size_hint` metres, converted to degrees at the
    /// median latitude of the features. An empty input gives an empty index.
    pub fn build(bboxes: Vec<BBox>, cell_size_hint: f64) -> Self {
        assert!(cell_size_hint > 0.0, "cell size hint must be positive");
        let lat_step = (cell_size_hint / EARTH_RADIUS_M).to_degrees();
        let lon_step = if bboxes.is_empty() {
            lat_step
        } else {
            let mut lats: Vec<f64> =
                bboxes.iter().map(|b| 0.5 * (b.min_lat + b.max_lat)).collect();
            lats.sort_by(f64::total_cmp);
            let median = lats[lats.len() / 2];
            // Guard against the poles, where a longitude degree vanishes.
            lat_step / median.to_radians().cos().max(1e-3)
        };

        let mut index = FeatureIndex { lon_step, lat_step, bins: BTreeMap::new(), bboxes };
        for id in 0..index.bboxes.len() {
            let (c0, c1) = index.cell_range(&index.bboxes[id]);
            for cx in c0.0..=c1.0 {
                for cy in c0.1..=c1.1 {
                    index.bins.entry((cx, cy)).or_default().push(id);
                }
            }
        }
        index
    }

    fn cell_of(&self, lon: f64, lat: f64) -> Cell {
        ((lon / self.lon_step).floor() as i64, (lat / self.lat_step).floor() as i64)
    }

    fn cell_range(&self, bb: &BBox) -> (Cell, Cell) {
        (self.cell_of(bb.min_lon, bb.min_lat), self.cell_of(bb.max_lon, bb.max_lat))
    }

    pub fn len(&self) -> usize {
        self.bboxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bboxes.is_empty()
    }

    pub fn occupied_cells(&self) -> usize {
        self.bins.len()
    }

    /// Number of cells that list `id`.
    pub fn cells_containing(&self, id: FeatureId) -> usize {
        self.bins.values().filter(|ids| ids.contains(&id)).count()
    }

    /// Lon/lat box enclosing every point within `radius` metres of `center`,
    /// under both the great-circle metric and the local planar metric used
    /// for line and polygon predicates.
    pub fn query_box(center: GeoPoint, radius: f64) -> BBox {
        let ang = radius / EARTH_RADIUS_M;
        let dlat = ang.to_degrees() * QUERY_SLACK;
        let cos_lat = center.lat.to_radians().cos();
        let dlon = if cos_lat <= ang.sin() || ang >= std::f64::consts::FRAC_PI_2 {
            360.0
        } else {
            // Spherical bound asin(sin d / cos lat) dominates the planar one
            // d / cos lat; keep the larger anyway.
            let spherical = (ang.sin() / cos_lat).asin();
            let planar = ang / cos_lat;
            spherical.max(planar).to_degrees() * QUERY_SLACK
        };
        BBox {
            min_lon: center.lon - dlon,
            max_lon: center.lon + dlon,
            min_lat: center.lat - dlat,
            max_lat: center.lat + dlat,
        }
    }

    /// Ids of every feature whose bounding box meets the query box of the
    /// closed disc, ascending. A superset of the features that intersect the
    /// disc.
    pub fn query_radius_candidates(&self, center: GeoPoint, radius: f64) -> Vec<FeatureId> {
        assert!(radius > 0.0, "query radius must be positive");
        if self.bins.is_empty() {
            return Vec::new();
        }
        let q = Self::query_box(center, radius);
        let (c0, c1) = self.cell_range(&q);
        let span = (c1.0 - c0.0 + 1).saturating_mul(c1.1 - c0.1 + 1);

        let mut out = Vec::new();
        let mut visit = |ids: &Vec<FeatureId>| {
            for &id in ids {
                if self.bboxes[id].intersects(&q) {
                    out.push(id);
                }
            }
        };
        if span as usize > self.bins.len() {
            self.bins
                .iter()
                .filter(|((cx, cy), _)| (c0.0..=c1.0).contains(cx) && (c0.1..=c1.1).contains(cy))
                .for_each(|(_, ids)| visit(ids));
        } else {
            for cx in c0.0..=c1.0 {
                for cy in c0.1..=c1.1 {
                    if let Some(ids) = self.bins.get(&(cx, cy)) {
                        visit(ids);
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}
