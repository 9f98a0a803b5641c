//! Correlation measures, demographic summaries per burden class, and the
//! community-area versus census-tract comparison.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::classify::ClassifiedSurface;
use crate::ingest::{Scale, School, ZoneSet};

/// Share above which a zone counts as predominantly Latinx.
pub const PREDOMINANT_SHARE: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 observations, got {0}")]
    TooShort(usize),
    #[error("correlation undefined: a series is constant")]
    Constant,
    #[error("non-finite observation")]
    NonFinite,
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(StatsError::TooShort(xs.len()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::Constant);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn mean_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson on mean ranks).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    pearson(&mean_ranks(xs), &mean_ranks(ys))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassStats {
    pub class_index: usize,
    pub label: String,
    pub n_zones: usize,
    /// Zones without any enrolled school carrying a Latinx share.
    pub n_missing_student_share: usize,
    pub mean_student_latinx_share: Option<f64>,
    pub min_student_latinx_share: Option<f64>,
    /// Enrolment-weighted over every school in the class's zones.
    pub weighted_student_latinx_share: Option<f64>,
    pub n_missing_zone_share: usize,
    pub mean_zone_latinx_share: Option<f64>,
    pub min_zone_latinx_share: Option<f64>,
    pub n_predominantly_latinx: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassDemographics {
    pub scale: Scale,
    pub total_zones: usize,
    pub predominant_threshold: f64,
    pub classes: Vec<ClassStats>,
    /// Pearson correlation between zone student share and zone population
    /// share, over zones where both are known.
    pub share_correlation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub share_correlation_note: Option<String>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn min(v: &[f64]) -> Option<f64> {
    v.iter().copied().reduce(f64::min)
}

/// Enrolment-weighted Latinx share of the schools in each zone.
fn student_shares(
    surface: &ClassifiedSurface,
    schools: &[School],
    assignment: &BTreeMap<String, Option<String>>,
) -> HashMap<String, (f64, f64)> {
    // zone -> (sum of weights, weighted sum), schools visited in id order
    let mut sorted: Vec<&School> = schools.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let mut acc: HashMap<String, (f64, f64)> = HashMap::new();
    for s in sorted {
        let (Some(Some(zone)), Some(share)) = (assignment.get(&s.id), s.latinx_share) else { continue };
        if s.total_students == 0 || surface.class_of(zone).is_none() {
            continue;
        }
        let w = s.total_students as f64;
        let e = acc.entry(zone.clone()).or_insert((0.0, 0.0));
        e.0 += w;
        e.1 += w * share;
    }
    acc
}

/// Demographic profile of each burden class.
pub fn class_demographics(
    surface: &ClassifiedSurface,
    schools: &[School],
    assignment: &BTreeMap<String, Option<String>>,
    zone_set: &ZoneSet,
) -> ClassDemographics {
    let shares = student_shares(surface, schools, assignment);
    let k = surface.break_set.k;
    let mut classes = Vec::with_capacity(k);
    for class in 0..k {
        let mut student = Vec::new();
        let mut zone_shares = Vec::new();
        let (mut n_zones, mut w_sum, mut ws_sum) = (0, 0.0, 0.0);
        for (z, _) in surface.zones.iter().zip(&surface.class_index).filter(|(_, c)| **c == class) {
            n_zones += 1;
            if let Some(&(w, ws)) = shares.get(&z.zone_id) {
                student.push(ws / w);
                w_sum += w;
                ws_sum += ws;
            }
            if let Some(s) = zone_set.get(&z.zone_id).and_then(|z| z.latinx_share) {
                zone_shares.push(s);
            }
        }
        classes.push(ClassStats {
            class_index: class,
            label: surface.break_set.labels[class].clone(),
            n_zones,
            n_missing_student_share: n_zones - student.len(),
            mean_student_latinx_share: mean(&student),
            min_student_latinx_share: min(&student),
            weighted_student_latinx_share: (w_sum > 0.0).then(|| ws_sum / w_sum),
            n_missing_zone_share: n_zones - zone_shares.len(),
            mean_zone_latinx_share: mean(&zone_shares),
            min_zone_latinx_share: min(&zone_shares),
            n_predominantly_latinx: student.iter().filter(|s| **s > PREDOMINANT_SHARE).count(),
        });
    }

    let (xs, ys): (Vec<f64>, Vec<f64>) = surface
        .zones
        .iter()
        .filter_map(|z| {
            let (w, ws) = shares.get(&z.zone_id)?;
            let pop = zone_set.get(&z.zone_id)?.latinx_share?;
            Some((ws / w, pop))
        })
        .unzip();
    let (share_correlation, share_correlation_note) = match pearson(&xs, &ys) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };

    ClassDemographics {
        scale: zone_set.scale,
        total_zones: surface.zones.len(),
        predominant_threshold: PREDOMINANT_SHARE,
        classes,
        share_correlation,
        share_correlation_note,
    }
}

/// Parent coarse zone of every fine zone, found by locating a strictly
/// interior point of the fine zone. `None` marks an unmapped zone.
pub fn containment_map(fine: &ZoneSet, coarse: &ZoneSet) -> BTreeMap<String, Option<String>> {
    fine.zones
        .iter()
        .map(|z| {
            let parent = z.interior_point().and_then(|p| {
                coarse.zones.iter().filter(|c| c.contains(p)).map(|c| c.id.clone()).min()
            });
            (z.id.clone(), parent)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleSummary {
    pub scale: Scale,
    pub n_zones: usize,
    pub k: usize,
    pub breaks: Vec<f64>,
    /// Zone count per class index.
    pub histogram: Vec<usize>,
    pub top_class_zones: usize,
    pub top_class_ratio: f64,
}

fn summarize(surface: &ClassifiedSurface, scale: Scale) -> ScaleSummary {
    let k = surface.break_set.k;
    let mut histogram = vec![0; k];
    for c in &surface.class_index {
        histogram[*c] += 1;
    }
    let top = histogram[k - 1];
    ScaleSummary {
        scale,
        n_zones: surface.zones.len(),
        k,
        breaks: surface.break_set.breaks.clone(),
        histogram,
        top_class_zones: top,
        top_class_ratio: if surface.zones.is_empty() { 0.0 } else { top as f64 / surface.zones.len() as f64 },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discordance {
    pub fine_zone: String,
    pub coarse_zone: String,
    pub fine_class: usize,
    pub coarse_class: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaupReport {
    pub coarse: ScaleSummary,
    pub fine: ScaleSummary,
    /// Spearman correlation of each fine zone's burden with its parent's.
    pub rank_correlation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_correlation_note: Option<String>,
    pub n_pairs: usize,
    pub discordant: Vec<Discordance>,
    pub unmapped: Vec<String>,
}

/// Compares a coarse (community area) and a fine (census tract) surface
/// built from the same run.
pub fn maup_compare(
    coarse: &ClassifiedSurface,
    fine: &ClassifiedSurface,
    coarse_scale: Scale,
    fine_scale: Scale,
    fine_to_coarse: &BTreeMap<String, Option<String>>,
) -> MaupReport {
    let coarse_by_id: HashMap<&str, (f64, usize)> = coarse
        .zones
        .iter()
        .zip(&coarse.class_index)
        .map(|(z, c)| (z.zone_id.as_str(), (z.cpb, *c)))
        .collect();

    let mut fine_sorted: Vec<(&crate::burden::ZoneBurden, usize)> =
        fine.zones.iter().zip(fine.class_index.iter().copied()).collect();
    fine_sorted.sort_by(|a, b| a.0.zone_id.cmp(&b.0.zone_id));

    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut discordant = Vec::new();
    let mut unmapped = Vec::new();
    for (z, class) in fine_sorted {
        let parent = fine_to_coarse
            .get(&z.zone_id)
            .and_then(Option::as_ref)
            .and_then(|p| coarse_by_id.get(p.as_str()).map(|v| (p, v)));
        match parent {
            Some((pid, &(pcpb, pclass))) => {
                xs.push(z.cpb);
                ys.push(pcpb);
                if class != pclass {
                    discordant.push(Discordance {
                        fine_zone: z.zone_id.clone(),
                        coarse_zone: pid.clone(),
                        fine_class: class,
                        coarse_class: pclass,
                    });
                }
            }
            None => unmapped.push(z.zone_id.clone()),
        }
    }
    let (rank_correlation, rank_correlation_note) = match spearman(&xs, &ys) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    MaupReport {
        coarse: summarize(coarse, coarse_scale),
        fine: summarize(fine, fine_scale),
        rank_correlation,
        rank_correlation_note,
        n_pairs: xs.len(),
        discordant,
        unmapped,
    }
}
