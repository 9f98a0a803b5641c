//! Choropleth class breaks: optimal natural breaks (Fisher's exact 1-D
//! partitioning) and quantiles, plus class assignment.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::burden::ZoneBurden;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    NaturalBreaks,
    Quantile,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::NaturalBreaks => "natural_breaks",
            Method::Quantile => "quantile",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "natural_breaks" | "jenks" => Ok(Method::NaturalBreaks),
            "quantile" => Ok(Method::Quantile),
            other => Err(format!("unknown classification method {other:?}")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("no values to classify")]
    Empty,
    #[error("class count must be at least 1")]
    ZeroClasses,
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("{k} classes requested but only {distinct} distinct values; lower k to at most {distinct}")]
    TooManyClasses { k: usize, distinct: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakSet {
    pub method: Method,
    /// Effective class count, `breaks.len() + 1`.
    pub k: usize,
    pub requested_k: usize,
    /// Upper bounds of classes `0..k-1`, strictly ascending.
    pub breaks: Vec<f64>,
    pub labels: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Low ... Very High style names for small `k`, numbered beyond that.
pub fn default_labels(k: usize) -> Vec<String> {
    let names: &[&str] = match k {
        1 => &["All"],
        2 => &["Low", "High"],
        3 => &["Low", "Medium", "High"],
        4 => &["Low", "Medium", "High", "Very High"],
        5 => &["Very Low", "Low", "Medium", "High", "Very High"],
        _ => return (1..=k).map(|i| format!("Class {i}")).collect(),
    };
    names.iter().map(|s| s.to_string()).collect()
}

fn sorted_finite(values: &[f64]) -> Result<Vec<f64>, ClassifyError> {
    if values.is_empty() {
        return Err(ClassifyError::Empty);
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(ClassifyError::NonFinite(*v));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

fn distinct_count(sorted: &[f64]) -> usize {
    1 + sorted.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Within-class sums of squares from shifted prefix sums.
struct SsdTable {
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl SsdTable {
    fn new(sorted: &[f64]) -> Self {
        let shift = sorted[sorted.len() / 2];
        let mut s1 = vec![0.0; sorted.len() + 1];
        let mut s2 = vec![0.0; sorted.len() + 1];
        for (i, v) in sorted.iter().enumerate() {
            let d = v - shift;
            s1[i + 1] = s1[i] + d;
            s2[i + 1] = s2[i] + d * d;
        }
        SsdTable { s1, s2 }
    }

    /// Sum of squared deviations from the mean over `sorted[i..j)`.
    fn ssd(&self, i: usize, j: usize) -> f64 {
        let n = (j - i) as f64;
        let s = self.s1[j] - self.s1[i];
        (self.s2[j] - self.s2[i] - s * s / n).max(0.0)
    }
}

/// Optimal partition of `sorted` into `k` contiguous classes minimising the
/// total within-class sum of squared deviations. Returns the index of the
/// last element of each of the first `k - 1` classes.
///
/// Among partitions whose costs agree to within rounding, the one with the
/// lexicographically smallest index sequence is returned.
pub fn jenks_partition(sorted: &[f64], k: usize) -> Vec<usize> {
    let n = sorted.len();
    assert!(k >= 1 && k <= n, "need 1 <= k <= n");
    if k == 1 {
        return Vec::new();
    }
    let table = SsdTable::new(sorted);
    let tol = 1e-11 * table.ssd(0, n);

    // cost[m][i]: best cost of splitting sorted[i..n) into m + 1 classes.
    // next[m][i]: exclusive end of the first class in that best split.
    let mut cost = vec![vec![f64::INFINITY; n + 1]; k];
    let mut next = vec![vec![0usize; n + 1]; k];
    for i in 0..n {
        cost[0][i] = table.ssd(i, n);
        next[0][i] = n;
    }
    for m in 1..k {
        // Need at least m + 1 elements for m + 1 classes.
        for i in 0..=(n - m - 1) {
            let last_end = n - m;
            let best = ((i + 1)..=last_end).map(|j| table.ssd(i, j) + cost[m - 1][j]).fold(f64::INFINITY, f64::min);
            let j = ((i + 1)..=last_end)
                .find(|&j| table.ssd(i, j) + cost[m - 1][j] <= best + tol)
                .expect("minimum is attained");
            cost[m][i] = best;
            next[m][i] = j;
        }
    }

    let mut out = Vec::with_capacity(k - 1);
    let mut i = 0;
    for m in (1..k).rev() {
        let j = next[m][i];
        out.push(j - 1);
        i = j;
    }
    out
}

fn finish(method: Method, requested_k: usize, mut breaks: Vec<f64>, max: f64, mut warnings: Vec<String>) -> BreakSet {
    let before = breaks.len();
    breaks.dedup();
    breaks.retain(|b| *b < max);
    if breaks.len() < before {
        warnings.push(format!(
            "duplicate or top-of-range thresholds collapsed: {} effective classes instead of {requested_k}",
            breaks.len() + 1
        ));
    }
    let k = breaks.len() + 1;
    BreakSet { method, k, requested_k, breaks, labels: default_labels(k), warnings }
}

/// Natural breaks: class maxima of the optimal partition.
pub fn jenks_breaks(values: &[f64], k: usize) -> Result<BreakSet, ClassifyError> {
    if k == 0 {
        return Err(ClassifyError::ZeroClasses);
    }
    let sorted = sorted_finite(values)?;
    let distinct = distinct_count(&sorted);
    if k > distinct {
        return Err(ClassifyError::TooManyClasses { k, distinct });
    }
    let breaks = jenks_partition(&sorted, k).into_iter().map(|i| sorted[i]).collect();
    Ok(finish(Method::NaturalBreaks, k, breaks, sorted[sorted.len() - 1], Vec::new()))
}

/// Quantile breaks at the `ceil(j * n / k)`-th order statistic (1-indexed).
pub fn quantile_breaks(values: &[f64], k: usize) -> Result<BreakSet, ClassifyError> {
    if k == 0 {
        return Err(ClassifyError::ZeroClasses);
    }
    let sorted = sorted_finite(values)?;
    let n = sorted.len();
    let breaks = (1..k).map(|j| sorted[(j * n).div_ceil(k).max(1) - 1]).collect();
    Ok(finish(Method::Quantile, k, breaks, sorted[n - 1], Vec::new()))
}

pub fn compute_breaks(method: Method, values: &[f64], k: usize) -> Result<BreakSet, ClassifyError> {
    match method {
        Method::NaturalBreaks => jenks_breaks(values, k),
        Method::Quantile => quantile_breaks(values, k),
    }
}

/// Upper-inclusive intervals: `(-inf, b0], (b0, b1], ..., (b_last, inf)`.
pub fn assign_class(value: f64, bs: &BreakSet) -> usize {
    bs.breaks.iter().position(|b| value <= *b).unwrap_or(bs.breaks.len())
}

/// Zone burdens with their classes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifiedSurface {
    pub zones: Vec<ZoneBurden>,
    pub break_set: BreakSet,
    pub class_index: Vec<usize>,
}

impl ClassifiedSurface {
    pub fn class_of(&self, zone_id: &str) -> Option<usize> {
        self.zones.iter().position(|z| z.zone_id == zone_id).map(|i| self.class_index[i])
    }

    pub fn top_class(&self) -> usize {
        self.break_set.k - 1
    }
}

/// Classifies zone burdens. With `exclude_empty`, zones without schools are
/// left out of the break computation but still receive a class.
pub fn classify_surface(
    zones: Vec<ZoneBurden>,
    method: Method,
    k: usize,
    exclude_empty: bool,
) -> Result<ClassifiedSurface, ClassifyError> {
    let values: Vec<f64> = zones.iter().filter(|z| !exclude_empty || z.n_schools > 0).map(|z| z.cpb).collect();
    let break_set = compute_breaks(method, &values, k)?;
    let class_index = zones.iter().map(|z| assign_class(z.cpb, &break_set)).collect();
    Ok(ClassifiedSurface { zones, break_set, class_index })
}
