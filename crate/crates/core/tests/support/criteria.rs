//! Headline checks with their stated tolerances and time limits. Each
//! returns a one-line summary on success and the first violation otherwise.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::time::Instant;

use proxburden::burden::layer_exposures;
use proxburden::classify::{jenks_partition, Method};
use proxburden::geo::{clip_length_in_disc, GeoPoint, Polyline};
use proxburden::index::FeatureIndex;
use proxburden::ingest::{HazardKind, Scale};
use proxburden::{Parallelism, RunRequest};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

pub type Check = Result<String, String>;

// Written as `!(x <= tol)` so that NaN fails.
macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// 1,000 random polylines against the 1 cm sampling oracle (0.1 %), chords
/// through the centre against the diameter (1e-6 relative), under 30 s.
///
/// The sampling oracle places each disc crossing only to within one 1 cm
/// step, so for very short clipped lengths the bound is that resolution
/// rather than 0.1 % of the length.
pub fn geometry_oracle() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let (mut met, mut by_resolution, mut worst) = (0, 0, 0.0f64);
    for case in 0..1000 {
        let center = (LON0 + rng.gen_range(-0.1..0.1), LAT0 + rng.gen_range(-0.1..0.1));
        let r = rng.gen_range(200.0..1609.344);
        let line = random_polyline(&mut rng, center, 2.0 * r);
        let got = clip_length_in_disc(GeoPoint { lon: center.0, lat: center.1 }, r, &polyline(&line));
        let want = sampled_clip(center, r, &line);
        let err = (got - want).abs();
        let crossings = 2.0 * (line.len() - 1) as f64;
        ensure!(err <= (1e-3 * want).max(0.01 * crossings), "polyline {case}: analytic {got} vs sampled {want}");
        if want > 0.0 {
            met += 1;
            if err > 1e-3 * want {
                by_resolution += 1;
            } else {
                worst = worst.max(err / want);
            }
        }
    }
    ensure!(met > 700, "only {met} polylines met their disc");

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut worst_chord = 0.0f64;
    for case in 0..1000 {
        let center = (LON0 + rng.gen_range(-0.2..0.2), LAT0 + rng.gen_range(-0.2..0.2));
        let r = rng.gen_range(10.0..5000.0);
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let (d1, d2) = (r * rng.gen_range(1.01..3.0), r * rng.gen_range(1.01..3.0));
        let a = from_plane(center, (d1 * theta.cos(), d1 * theta.sin()));
        let b = from_plane(center, (-d2 * theta.cos(), -d2 * theta.sin()));
        let got = clip_length_in_disc(GeoPoint { lon: center.0, lat: center.1 }, r, &Polyline::new(vec![a, b]).unwrap());
        let rel = (got - 2.0 * r).abs() / (2.0 * r);
        ensure!(rel <= 1e-6, "chord {case}: {got} vs {}", 2.0 * r);
        worst_chord = worst_chord.max(rel);
    }
    let secs = started.elapsed().as_secs_f64();
    ensure!(secs < 30.0, "took {secs:.1} s");
    Ok(format!(
        "1000 polylines ({met} meet the disc; worst rel err {worst:.2e}, {by_resolution} short clips within the 1 cm sampling step), \
         1000 chords (worst rel err {worst_chord:.1e}), {secs:.1} s"
    ))
}

/// 200 radius queries over 1,000 mixed features: index-then-refine equals
/// all-pairs brute force, under 10 s.
pub fn index_exactness() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x1d_0002);
    let features: Vec<Geometry> = (0..1000).map(|_| random_feature(&mut rng)).collect();
    let idx = FeatureIndex::build(features.iter().map(Geometry::bbox).collect(), MILE);
    let (mut mismatches, mut nonempty, mut hits_total) = (0, 0, 0);
    for _ in 0..200 {
        let c = city_point(&mut rng);
        let r = rng.gen_range(200.0..2.0 * MILE);
        let refined: Vec<usize> =
            idx.query_radius_candidates(c, r).into_iter().filter(|&i| hits(&features[i], c, r)).collect();
        let brute: Vec<usize> = (0..features.len()).filter(|&i| hits(&features[i], c, r)).collect();
        mismatches += usize::from(refined != brute);
        nonempty += usize::from(!brute.is_empty());
        hits_total += brute.len();
    }
    let secs = started.elapsed().as_secs_f64();
    ensure!(mismatches == 0, "{mismatches} queries differ from brute force");
    ensure!(nonempty > 100, "queries too sparse to be informative: {nonempty}");
    ensure!(secs < 10.0, "took {secs:.1} s");
    Ok(format!("200 queries, {hits_total} hits, 0 mismatches, {secs:.1} s"))
}

/// Random instances with n <= 12, k <= 4: DP cost equals the exhaustive
/// optimum exactly, ties go to the lexicographically first partition, and
/// a second run agrees. At least 500 instances, under 60 s.
pub fn jenks_optimality() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xc1a5_0001);
    let (mut instances, mut with_ties) = (0, 0);
    for case in 0..800 {
        let n = rng.gen_range(1..=12);
        let k = rng.gen_range(1..=4usize.min(n));
        let mut values: Vec<f64> = match case % 3 {
            // small integer ranges force repeated values and tied partitions
            0 => (0..n).map(|_| rng.gen_range(0..4) as f64).collect(),
            1 => (0..n).map(|_| rng.gen_range(0..100) as f64).collect(),
            _ => (0..n).map(|_| rng.gen_range(-50.0..250.0)).collect(),
        };
        values.sort_by(f64::total_cmp);
        let (best, first) = exhaustive(&values, k);
        let got = jenks_partition(&values, k);
        ensure!(exact_cost(&values, &got) == best, "instance {case}: {values:?} k={k}: cost of {got:?} above optimum");
        ensure!(got == first, "instance {case}: {values:?} k={k}: chose {got:?}, first optimum {first:?}");
        ensure!(jenks_partition(&values, k) == got, "instance {case}: second run differs");
        let ties = all_cuts(n, k).into_iter().filter(|c| exact_cost(&values, c) == best).count();
        with_ties += usize::from(ties > 1);
        instances += 1;
    }
    let secs = started.elapsed().as_secs_f64();
    ensure!(instances >= 500, "only {instances} instances");
    ensure!(with_ties > 20, "too few tied instances: {with_ties}");
    ensure!(secs < 60.0, "took {secs:.1} s");
    Ok(format!("{instances} instances ({with_ties} with tied optima), exact cost equality, {secs:.1} s"))
}

fn request(layer: &str, scale: Scale) -> RunRequest {
    RunRequest { layer: layer.into(), radius_m: MILE, scale, method: Method::NaturalBreaks, k: 4 }
}

/// Fixture scores equal the independent table to 1e-9 relative; zone sums
/// equal school sums at both scales; zero shares and empty zones are exact
/// zeros.
pub fn fixture_consistency() -> Check {
    let ds = fixture_dataset();
    let oracle = fixture_oracle();
    ensure!(oracle.len() == ds.schools.len(), "oracle has {} rows for {} schools", oracle.len(), ds.schools.len());
    let mut compared = 0;
    let mut worst = 0.0f64;
    for (layer, _, _) in FIXTURE_LAYERS {
        let out = ds.run(&request(layer, Scale::CommunityArea), Parallelism::Parallel).map_err(|e| e.to_string())?;
        for rec in &out.records {
            let want = &oracle[&rec.school_id];
            match (rec.pss, want.pss) {
                (Some(a), Some(b)) => ensure!(rel_close(a, b, 1e-12), "{} pss {a} vs {b}", rec.school_id),
                (None, None) => {}
                other => return Err(format!("{} pss {other:?}", rec.school_id)),
            }
            ensure!(rel_close(rec.hs, want.hs[layer], 1e-9), "{layer} {} hs {} vs {}", rec.school_id, rec.hs, want.hs[layer]);
            match (rec.score, want.score[layer]) {
                (Some(a), Some(b)) => {
                    ensure!(rel_close(a, b, 1e-9), "{layer} {} score {a} vs {b}", rec.school_id);
                    if a != b {
                        worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
                    }
                    compared += 1;
                }
                (None, None) => {}
                other => return Err(format!("{layer} {} score {other:?}", rec.school_id)),
            }
        }
        for scale in [Scale::CommunityArea, Scale::CensusTract] {
            let out = ds.run(&request(layer, scale), Parallelism::Parallel).map_err(|e| e.to_string())?;
            let zones: f64 = out.surface.zones.iter().map(|z| z.cpb).sum();
            let schools: f64 = out.records.iter().filter(|r| !r.excluded).filter_map(|r| r.score).sum();
            ensure!(rel_close(zones, schools, 1e-9), "{layer} {scale}: zone sum {zones} vs school sum {schools}");
            let mut per_zone: BTreeMap<&str, f64> = BTreeMap::new();
            for r in out.records.iter().filter(|r| !r.excluded) {
                *per_zone.entry(r.zone.as_deref().unwrap()).or_default() += r.score.unwrap();
            }
            for z in &out.surface.zones {
                match per_zone.get(z.zone_id.as_str()) {
                    Some(want) => ensure!(rel_close(z.cpb, *want, 1e-9), "{layer} {scale} {}", z.zone_id),
                    None => ensure!(z.cpb == 0.0 && z.n_schools == 0, "{layer} {scale} {}: no schools but cpb {}", z.zone_id, z.cpb),
                }
            }
        }
    }

    let out = ds.run(&request("industrial_roads", Scale::CommunityArea), Parallelism::Parallel).map_err(|e| e.to_string())?;
    let zero_share = out.records.iter().find(|r| r.school_id == "S012").unwrap();
    ensure!(zero_share.pss == Some(0.0) && zero_share.score == Some(0.0), "zero-share school scored {:?}", zero_share.score);
    let tracts = ds.run(&request("industrial_roads", Scale::CensusTract), Parallelism::Parallel).map_err(|e| e.to_string())?;
    let empty = tracts.surface.zones.iter().filter(|z| z.n_schools == 0).count();
    ensure!(empty > 0, "fixture has no school-free tract");
    Ok(format!(
        "{compared} scores over 3 layers (worst rel err {worst:.1e}), zone sums at both scales, zero-share school and {empty} empty tracts exactly 0"
    ))
}

/// 100 trials each: exposure never falls as the radius grows, and splitting
/// a layer in two splits every school's exposure additively.
pub fn monotonicity_and_additivity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xb0_0002);
    for trial in 0..100 {
        let kind = KINDS[trial % 3];
        let n = rng.gen_range(1..60);
        let l = random_layer(&mut rng, kind, n);
        let schools = random_schools(&mut rng, 20);
        let mut radii: Vec<f64> = (0..4).map(|_| rng.gen_range(50.0..3.0 * MILE)).collect();
        radii.sort_by(f64::total_cmp);
        let runs: Vec<Vec<f64>> = radii
            .iter()
            .map(|r| layer_exposures(&schools, &l, *r, Parallelism::Sequential).unwrap().into_iter().map(|e| e.hs).collect())
            .collect();
        for w in runs.windows(2) {
            for (lo, hi) in w[0].iter().zip(&w[1]) {
                ensure!(lo <= hi, "monotonicity trial {trial}: {lo} > {hi}");
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0xb0_0001);
    for trial in 0..100 {
        let kind = KINDS[trial % 3];
        let n = rng.gen_range(1..60);
        let whole = random_layer(&mut rng, kind, n);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for f in &whole.features {
            if rng.gen_bool(0.5) {
                a.push(f.clone())
            } else {
                b.push(f.clone())
            }
        }
        let (a, b) = (layer("a", kind, a), layer("b", kind, b));
        let schools = random_schools(&mut rng, 30);
        let r = rng.gen_range(100.0..2.0 * MILE);
        let hw = layer_exposures(&schools, &whole, r, Parallelism::Sequential).unwrap();
        let ha = layer_exposures(&schools, &a, r, Parallelism::Sequential).unwrap();
        let hb = layer_exposures(&schools, &b, r, Parallelism::Sequential).unwrap();
        for ((w, x), y) in hw.iter().zip(&ha).zip(&hb) {
            let sum = x.hs + y.hs;
            match kind {
                // summation order differs between the split and whole layer
                HazardKind::Line => ensure!(rel_close(sum, w.hs, 1e-9), "additivity trial {trial}: {sum} vs {}", w.hs),
                _ => ensure!(sum == w.hs, "additivity trial {trial}: {sum} vs {}", w.hs),
            }
        }
    }
    Ok("100 radius trials, 100 split-layer trials (counts exact, lengths to 1e-9)".into())
}

/// On the fixture the top class's minimum school Latinx share is at least
/// 0.58 at both scales, and tracts concentrate the top class at least as
/// sharply as community areas.
pub fn disparity_shape() -> Check {
    let ds = fixture_dataset();
    let mut mins = Vec::new();
    for scale in [Scale::CommunityArea, Scale::CensusTract] {
        let demo = ds.demographics(&request("industrial_roads", scale), Parallelism::Parallel).map_err(|e| e.to_string())?;
        let top = demo.classes.last().ok_or("no classes")?;
        ensure!(top.n_zones > 0, "{scale}: empty top class");
        let min = top.min_student_latinx_share.ok_or(format!("{scale}: top class has no share data"))?;
        ensure!(min >= 0.58, "{scale}: top-class minimum share {min}");
        mins.push(min);
    }
    let maup = ds.maup(&request("industrial_roads", Scale::CommunityArea), Parallelism::Parallel).map_err(|e| e.to_string())?;
    let (ca, ct) = (maup.coarse.top_class_ratio, maup.fine.top_class_ratio);
    ensure!(ct >= ca, "tract top-class ratio {ct} below community-area ratio {ca}");
    Ok(format!(
        "top-class min share {:.3} (areas) / {:.3} (tracts); top-class ratio {}/{} tracts >= {}/{} areas",
        mins[0], mins[1], maup.fine.top_class_zones, maup.fine.n_zones, maup.coarse.top_class_zones, maup.coarse.n_zones
    ))
}
