#!/usr/bin/env python3
"""Generates the bundled synthetic fixture and its independent oracle table.

Layout: 8 community-area-like zones on a 4 x 2 grid west of a lakefront,
subdivided into 20 tract-like zones; 40 schools; one industrial-road line
layer concentrated in the western corridor; one facility point layer.

The oracle (oracle/expected_scores.csv) is computed here with plain Python
arithmetic, independently of the Rust engine: neighbourhood share from the
counts, kilometres of road inside each school's one-mile disc by analytic
segment/circle intersection in an equirectangular plane, facility counts by
haversine distance, and zone membership by rectangle tests.

Run from this directory:  python3 generate.py
"""

import csv
import json
import math
import os
import random

R = 6_371_008.8
MILE = 1_609.344
HERE = os.path.dirname(os.path.abspath(__file__))

LON0, LAT0 = -87.74, 41.80
DLON, DLAT = 0.04, 0.05

CA_NAMES = {
    "01": "Stockyard West",
    "02": "Canal Bend",
    "03": "Park Heights",
    "04": "Lakeside",
    "05": "Corridor South",
    "06": "New City",
    "07": "Garfield East",
    "08": "Harbor Point",
}

# Park hole inside CA 03 (and its tract 0302).
HOLE = (-87.6580, 41.8650, -87.6520, 41.8720)
# Detached piece of CA 08 (and tract 0802), east of the grid.
ISLAND = (-87.5750, 41.8050, -87.5700, 41.8100)


def r6(x):
    return round(x, 6)


def ca_rect(ca):
    i = int(ca) - 1
    col, row = i % 4, i // 4  # row 0 = north
    x0 = LON0 + col * DLON
    y1 = LAT0 + (2 - row) * DLAT
    return (r6(x0), r6(y1 - DLAT), r6(x0 + DLON), r6(y1))


def ring(x0, y0, x1, y1, clockwise=False):
    pts = [[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]
    return pts[::-1] if clockwise else pts


def tract_rects(ca):
    x0, y0, x1, y1 = ca_rect(ca)
    parts = 3 if int(ca) <= 4 else 2
    w = (x1 - x0) / parts
    out = []
    for j in range(parts):
        tx0 = r6(x0 + j * w)
        tx1 = r6(x0 + (j + 1) * w) if j < parts - 1 else x1
        out.append((f"{ca}{j + 1:02d}", (tx0, y0, tx1, y1)))
    return out


def zone_geometry(zone_id, rect):
    x0, y0, x1, y1 = rect
    outer = ring(x0, y0, x1, y1)
    hx0, hy0, hx1, hy1 = HOLE
    if x0 <= hx0 and hx1 <= x1 and y0 <= hy0 and hy1 <= y1:
        return {"type": "Polygon", "coordinates": [outer, ring(hx0, hy0, hx1, hy1, clockwise=True)]}
    if zone_id in ("08", "0802"):
        return {"type": "MultiPolygon", "coordinates": [[outer], [ring(*ISLAND)]]}
    return {"type": "Polygon", "coordinates": [outer]}


def in_rect(p, rect):
    x0, y0, x1, y1 = rect
    return x0 <= p[0] <= x1 and y0 <= p[1] <= y1


def zone_contains(zone_id, rect, p):
    hx0, hy0, hx1, hy1 = HOLE
    strictly_in_hole = hx0 < p[0] < hx1 and hy0 < p[1] < hy1
    inside = in_rect(p, rect) and not strictly_in_hole
    if zone_id in ("08", "0802") and in_rect(p, ISLAND):
        inside = True
    return inside


# --- hazard layers ---------------------------------------------------------

ROADS = [
    ("R1", "Western Ave", [[[-87.7050, 41.8000], [-87.7048, 41.8500], [-87.7052, 41.9000]]]),
    ("R2", "Pershing Rd", [[[-87.7400, 41.8230], [-87.6900, 41.8232], [-87.6600, 41.8229]]]),
    ("R3", "Archer Ave", [[[-87.7380, 41.8050], [-87.7150, 41.8180], [-87.6950, 41.8300], [-87.6800, 41.8440]]]),
    ("R4", "Canal Spur", [
        [[-87.7300, 41.8600], [-87.7150, 41.8620], [-87.7000, 41.8650]],
        [[-87.6950, 41.8700], [-87.6850, 41.8760]],
    ]),
    ("R5", "Stockyard Loop", [[[-87.7000, 41.8120], [-87.6900, 41.8120], [-87.6900, 41.8050], [-87.7000, 41.8050], [-87.7000, 41.8120]]]),
    ("R6", "Lake Freight", [[[-87.6000, 41.8850], [-87.5900, 41.8800]]]),
]

FACILITIES = [
    ("TRI-01", -87.7210, 41.8150), ("TRI-02", -87.7080, 41.8090), ("TRI-03", -87.6990, 41.8210),
    ("TRI-04", -87.7120, 41.8340), ("TRI-05", -87.7270, 41.8610), ("TRI-06", -87.6960, 41.8580),
    ("TRI-07", -87.6890, 41.8070), ("TRI-08", -87.7030, 41.8770), ("TRI-09", -87.6700, 41.8190),
    ("TRI-10", -87.6350, 41.8850), ("TRI-11", -87.6120, 41.8300), ("TRI-12", -87.7330, 41.8880),
]

BROWNFIELDS = [
    ("BF-1", [[-87.7180, 41.8280], [-87.7120, 41.8280], [-87.7120, 41.8320], [-87.7180, 41.8320], [-87.7180, 41.8280]]),
    ("BF-2", [[-87.6930, 41.8520], [-87.6870, 41.8500], [-87.6860, 41.8560], [-87.6930, 41.8520]]),
    ("BF-3", [[-87.7320, 41.8920], [-87.7260, 41.8920], [-87.7260, 41.8960], [-87.7320, 41.8960], [-87.7320, 41.8920]]),
    ("BF-4", [[-87.6200, 41.8150], [-87.6150, 41.8150], [-87.6150, 41.8190], [-87.6200, 41.8190], [-87.6200, 41.8150]]),
]

# --- schools ---------------------------------------------------------------

# (ca, count, latinx range in percent)
ALLOCATION = [
    ("01", 5, (62, 90)), ("02", 5, (60, 88)), ("03", 4, (15, 45)), ("04", 3, (8, 30)),
    ("05", 5, (64, 95)), ("06", 10, (60, 93)), ("07", 4, (20, 48)), ("08", 3, (5, 25)),
]


def make_schools(rng):
    schools = []
    n = 0
    for ca, count, (lo, hi) in ALLOCATION:
        x0, y0, x1, y1 = ca_rect(ca)
        for _ in range(count):
            while True:
                p = (r6(rng.uniform(x0 + 0.002, x1 - 0.002)), r6(rng.uniform(y0 + 0.002, y1 - 0.002)))
                hx0, hy0, hx1, hy1 = HOLE
                near_hole = hx0 - 0.001 <= p[0] <= hx1 + 0.001 and hy0 - 0.001 <= p[1] <= hy1 + 0.001
                near_tract_edge = any(
                    abs(p[0] - tr[0]) < 0.001 or abs(p[0] - tr[2]) < 0.001 for _, tr in tract_rects(ca)
                )
                if not near_hole and not near_tract_edge:
                    break
            n += 1
            total = rng.randrange(220, 900)
            nbhd = round(total * rng.uniform(0.35, 0.95))
            latinx = round(rng.uniform(lo, hi), 1)
            schools.append({
                "school_id": f"S{n:03d}", "name": f"Synthetic School {n}", "lon": p[0], "lat": p[1],
                "total": total, "nbhd": nbhd, "pct_latinx": latinx, "grades": "K-8",
            })
    return schools


def special_cases(schools):
    by_id = {s["school_id"]: s for s in schools}
    # Zero share of neighbourhood students.
    by_id["S012"]["nbhd"] = 0
    # Mostly out-of-area enrolment (selective schools near the corridor).
    by_id["S029"]["nbhd"] = round(by_id["S029"]["total"] * 0.12)
    by_id["S031"]["nbhd"] = round(by_id["S031"]["total"] * 0.12)
    # No enrolment: share undefined, excluded from burden.
    by_id["S035"]["total"] = 0
    by_id["S035"]["nbhd"] = 0
    # On the shared edge of CA 01 and 02 (and tracts 0103 / 0201).
    by_id["S003"]["lon"] = ca_rect("01")[2]
    by_id["S003"]["lat"] = 41.8700
    # Inside the park hole: outside every zone.
    schools.append({
        "school_id": "S040", "name": "Synthetic School 40", "lon": -87.6550, "lat": 41.8685,
        "total": 310, "nbhd": 200, "pct_latinx": 35.0, "grades": "K-8",
    })


# --- oracle ----------------------------------------------------------------

def project(origin, p):
    k = R * math.pi / 180.0
    return (k * (p[0] - origin[0]) * math.cos(math.radians(origin[1])), k * (p[1] - origin[1]))


def clip_segment(a, b, r):
    dx, dy = b[0] - a[0], b[1] - a[1]
    L = math.hypot(dx, dy)
    if L == 0:
        return 0.0
    ux, uy = dx / L, dy / L
    # distance along the segment of the closest approach to the origin
    s = -(a[0] * ux + a[1] * uy)
    perp2 = (a[0] + s * ux) ** 2 + (a[1] + s * uy) ** 2
    if perp2 >= r * r:
        return 0.0
    h = math.sqrt(r * r - perp2)
    lo, hi = max(0.0, s - h), min(L, s + h)
    return max(0.0, hi - lo)


def road_km(school, radius):
    c = (school["lon"], school["lat"])
    total = 0.0
    for _, _, parts in ROADS:
        for part in parts:
            pts = [project(c, p) for p in part]
            total += sum(clip_segment(pts[i], pts[i + 1], radius) for i in range(len(pts) - 1))
    return total / 1000.0


def seg_dist(p, a, b):
    dx, dy = b[0] - a[0], b[1] - a[1]
    L2 = dx * dx + dy * dy
    t = 0.0 if L2 == 0 else max(0.0, min(1.0, ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / L2))
    return math.hypot(a[0] + t * dx - p[0], a[1] + t * dy - p[1])


def inside_ring(p, pts):
    c = False
    for i in range(len(pts) - 1):
        (x1, y1), (x2, y2) = pts[i], pts[i + 1]
        if (y1 > p[1]) != (y2 > p[1]) and p[0] < x1 + (p[1] - y1) * (x2 - x1) / (y2 - y1):
            c = not c
    return c


def brownfield_count(school, radius):
    c = (school["lon"], school["lat"])
    n = 0
    for _, ring_ in BROWNFIELDS:
        pts = [project(c, p) for p in ring_]
        d = 0.0 if inside_ring((0.0, 0.0), pts) else min(
            seg_dist((0.0, 0.0), pts[i], pts[i + 1]) for i in range(len(pts) - 1))
        n += d <= radius
    return n


def haversine(a, b):
    l1, p1, l2, p2 = map(math.radians, (a[0], a[1], b[0], b[1]))
    h = math.sin((p2 - p1) / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin((l2 - l1) / 2) ** 2
    return 2 * R * math.asin(min(1.0, math.sqrt(h)))


def facility_count(school, radius):
    c = (school["lon"], school["lat"])
    return sum(1 for _, x, y in FACILITIES if haversine(c, (x, y)) <= radius)


def assign(p, zones):
    hits = sorted(zid for zid, rect in zones if zone_contains(zid, rect, p))
    return hits[0] if hits else ""


# --- writers ---------------------------------------------------------------

def feature_collection(features):
    return {"type": "FeatureCollection", "features": features}


def write_json(path, obj):
    with open(path, "w", newline="\n") as f:
        json.dump(obj, f, indent=1)
        f.write("\n")


def main():
    rng = random.Random(20210615)
    schools = make_schools(rng)
    special_cases(schools)
    schools.sort(key=lambda s: s["school_id"])

    cas = [(ca, ca_rect(ca)) for ca in CA_NAMES]
    cts = [t for ca in CA_NAMES for t in tract_rects(ca)]

    def zone_share(zid, rect, members):
        vals = [s["pct_latinx"] for s in schools if s["total"] > 0 and assign((s["lon"], s["lat"]), members) == zid]
        if not vals:
            base = 30.0
        else:
            base = sum(vals) / len(vals)
        # population share tracks the student share, a little lower
        return round(max(0.0, min(100.0, base - 6.0 + rng.uniform(-4, 4))), 1)

    ca_features = [{
        "type": "Feature",
        "properties": {"area_num": ca, "community": CA_NAMES[ca], "pct_latinx": zone_share(ca, rect, cas)},
        "geometry": zone_geometry(ca, rect),
    } for ca, rect in cas]
    ct_features = [{
        "type": "Feature",
        "properties": {"tract": tid, "label": f"Tract {tid}", "pct_latinx": zone_share(tid, rect, cts)},
        "geometry": zone_geometry(tid, rect),
    } for tid, rect in cts]

    road_features = []
    for rid, name, parts in ROADS:
        geom = ({"type": "LineString", "coordinates": parts[0]} if len(parts) == 1
                else {"type": "MultiLineString", "coordinates": parts})
        road_features.append({"type": "Feature", "id": rid, "properties": {"name": name, "class": "heavy"}, "geometry": geom})
    facility_features = [{
        "type": "Feature",
        "properties": {"facility_id": fid, "rsei_hazard": round(1000 * (i + 1) / 7, 2)},
        "geometry": {"type": "Point", "coordinates": [x, y]},
    } for i, (fid, x, y) in enumerate(FACILITIES)]

    brownfield_features = [{
        "type": "Feature",
        "properties": {"site": bid, "status": "assessment"},
        "geometry": {"type": "Polygon", "coordinates": [ring_]},
    } for bid, ring_ in BROWNFIELDS]
    write_json(os.path.join(HERE, "brownfields.geojson"), feature_collection(brownfield_features))
    write_json(os.path.join(HERE, "community_areas.geojson"), feature_collection(ca_features))
    write_json(os.path.join(HERE, "census_tracts.geojson"), feature_collection(ct_features))
    write_json(os.path.join(HERE, "industrial_roads.geojson"), feature_collection(road_features))
    write_json(os.path.join(HERE, "tri_facilities.geojson"), feature_collection(facility_features))

    cols = ["school_id", "name", "lon", "lat", "total", "nbhd", "pct_latinx", "grades"]
    with open(os.path.join(HERE, "schools.csv"), "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for s in schools:
            w.writerow({c: s[c] for c in cols})

    os.makedirs(os.path.join(HERE, "oracle"), exist_ok=True)
    with open(os.path.join(HERE, "oracle", "expected_scores.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["school_id", "pss", "hs_roads_km", "score_roads", "hs_tri", "score_tri", "hs_brownfields", "score_brownfields", "ca", "ct"])
        for s in schools:
            p = (s["lon"], s["lat"])
            pss = s["nbhd"] / s["total"] if s["total"] > 0 else None
            km = road_km(s, MILE)
            tri = facility_count(s, MILE)
            bf = brownfield_count(s, MILE)
            fmt = lambda v: "" if v is None else repr(v)
            w.writerow([
                s["school_id"], fmt(pss), repr(km), fmt(None if pss is None else pss * km),
                tri, fmt(None if pss is None else pss * tri),
                bf, fmt(None if pss is None else pss * bf), assign(p, cas), assign(p, cts),
            ])


if __name__ == "__main__":
    main()
