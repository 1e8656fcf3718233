//! Independent reference implementations used by the integration tests.
//!
//! None of these call into the code paths they check.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trackmetrics::model::{BoundingBox, DetectionRecord, Point, ZonePolygon};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dist(a: &Point<f64>, b: &Point<f64>) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

/// Minimum over every monotone coupling of the maximum coupled distance,
/// by exhaustive enumeration of lattice paths.
pub fn frechet_brute_force(p: &[Point<f64>], q: &[Point<f64>]) -> f64 {
    fn walk(p: &[Point<f64>], q: &[Point<f64>], i: usize, j: usize, worst: f64, best: &mut f64) {
        let worst = worst.max(dist(&p[i], &q[j]));
        if worst >= *best {
            return;
        }
        if i == p.len() - 1 && j == q.len() - 1 {
            *best = worst;
            return;
        }
        if i + 1 < p.len() {
            walk(p, q, i + 1, j, worst, best);
        }
        if j + 1 < q.len() {
            walk(p, q, i, j + 1, worst, best);
        }
        if i + 1 < p.len() && j + 1 < q.len() {
            walk(p, q, i + 1, j + 1, worst, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(p, q, 0, 0, 0.0, &mut best);
    best
}

/// Crossing-number point-in-polygon test (open interior).
pub fn ray_cast(p: Point<f64>, poly: &[Point<f64>]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Random star-shaped (hence simple) polygon around `center`. Angles are
/// jittered around an even spread so every angular gap stays below pi.
pub fn star_polygon(rng: &mut impl Rng, center: Point<f64>, n: usize, r_min: f64, r_max: f64) -> Vec<Point<f64>> {
    let step = std::f64::consts::TAU / n as f64;
    let turn = rng.random_range(0.0..std::f64::consts::TAU);
    (0..n)
        .map(|k| {
            let a = turn + (k as f64 + rng.random_range(-0.2..0.2)) * step;
            let r = rng.random_range(r_min..r_max);
            Point::new(center.x + r * a.cos(), center.y + r * a.sin())
        })
        .collect()
}

/// Naive DBSCAN: core flags by counting, clusters by transitive closure of
/// the core adjacency, border items to the nearest core (ties: smallest id).
/// Returns the partition as sorted member lists plus the sorted noise list.
pub fn dbscan_naive(d: &[Vec<f64>], ids: &[u64], eps: f64, min_pts: usize) -> (Vec<Vec<usize>>, Vec<usize>) {
    let n = d.len();
    let core: Vec<bool> = (0..n)
        .map(|i| (0..n).filter(|&j| j == i || d[i][j] < eps).count() >= min_pts)
        .collect();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            reach[i][j] = core[i] && core[j] && (i == j || d[i][j] < eps);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    // representative of a core item: smallest index it reaches
    let rep = |i: usize| (0..n).find(|&j| reach[i][j]).unwrap();
    let mut owner = vec![None; n];
    for i in 0..n {
        if core[i] {
            owner[i] = Some(rep(i));
        } else {
            let mut best: Option<usize> = None;
            for j in 0..n {
                if core[j] && j != i && d[i][j] < eps {
                    best = match best {
                        None => Some(j),
                        Some(b) if d[i][j] < d[i][b] || (d[i][j] == d[i][b] && ids[j] < ids[b]) => Some(j),
                        keep => keep,
                    };
                }
            }
            owner[i] = best.map(rep);
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    let mut noise = Vec::new();
    for (i, o) in owner.iter().enumerate() {
        match o {
            Some(r) => groups.entry(*r).or_default().push(i),
            None => noise.push(i),
        }
    }
    let mut parts: Vec<Vec<usize>> = groups.into_values().collect();
    parts.sort();
    (parts, noise)
}

/// Partition (sorted member lists) and noise list from cluster labels.
pub fn partition_of(labels: &[trackmetrics::patterns::ClusterLabel]) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    let mut noise = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        match l {
            trackmetrics::patterns::ClusterLabel::Cluster(c) => groups.entry(*c).or_default().push(i),
            trackmetrics::patterns::ClusterLabel::Noise => noise.push(i),
        }
    }
    let mut parts: Vec<Vec<usize>> = groups.into_values().collect();
    parts.sort();
    (parts, noise)
}

pub struct DwellThresholds {
    pub stability: f64,
    pub stabilization_ms: i64,
    pub min_ms: i64,
    pub max_ms: i64,
    pub grace_ms: i64,
}

impl Default for DwellThresholds {
    fn default() -> Self {
        Self {
            stability: 0.15,
            stabilization_ms: 2_000,
            min_ms: 60_000,
            max_ms: 7_200_000,
            grace_ms: 3_000,
        }
    }
}

/// (start_ts, end_ts, duration_s, capped) for every maximal stable run
/// inside the zone, found by scanning all start positions.
pub fn dwell_brute_force(
    recs: &[DetectionRecord<f64>],
    inside: impl Fn(&BoundingBox<f64>) -> bool,
    th: &DwellThresholds,
) -> Vec<(i64, i64, f64, bool)> {
    let n = recs.len();
    let ins: Vec<bool> = recs.iter().map(|r| inside(&r.bbox)).collect();
    let link = |k: usize| -> bool {
        if k == 0 || !ins[k] || !ins[k - 1] {
            return false;
        }
        let (p, c) = (&recs[k - 1].bbox, &recs[k].bbox);
        let change = [
            (c.x - p.x).abs() / p.w,
            (c.y - p.y).abs() / p.h,
            (c.w - p.w).abs() / p.w,
            (c.h - p.h).abs() / p.h,
        ]
        .into_iter()
        .fold(0.0f64, f64::max);
        recs[k].timestamp - recs[k - 1].timestamp <= th.grace_ms && change < th.stability
    };
    let mut out = Vec::new();
    for i in 0..n {
        if !ins[i] || link(i) {
            continue; // not the start of a maximal run
        }
        let mut j = i;
        while j + 1 < n && link(j + 1) {
            j += 1;
        }
        let raw = recs[j].timestamp - recs[i].timestamp;
        if raw >= th.stabilization_ms && raw >= th.min_ms {
            out.push((
                recs[i].timestamp,
                recs[j].timestamp,
                raw.min(th.max_ms) as f64 / 1000.0,
                raw > th.max_ms,
            ));
        }
    }
    out
}

pub fn rect_zone(id: &str, x0: f64, y0: f64, x1: f64, y1: f64) -> ZonePolygon<f64> {
    ZonePolygon::new(
        id,
        0,
        vec![
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ],
    )
    .unwrap()
}

/// Random person track built from phases: stationary stays, walks that may
/// leave the zone, size jitter around the stability threshold, and gaps.
pub fn random_dwell_track(rng: &mut impl Rng, track_id: u64) -> Vec<DetectionRecord<f64>> {
    let mut out = Vec::new();
    let mut ts: i64 = rng.random_range(0..1_000_000);
    let (mut x, mut y, mut w, mut h) = (200.0, 200.0, 40.0, 80.0);
    let phases = rng.random_range(1..8);
    for _ in 0..phases {
        match rng.random_range(0..5) {
            0 | 1 => {
                // stationary with small jitter, length around the 60 s limit
                let frames = rng.random_range(1..160);
                let step = rng.random_range(300..1200);
                for _ in 0..frames {
                    x += rng.random_range(-2.0..2.0);
                    y += rng.random_range(-2.0..2.0);
                    push(&mut out, ts, track_id, x, y, w, h);
                    ts += step;
                }
            }
            2 => {
                // walking: large steps, possibly leaving the zone
                for _ in 0..rng.random_range(1..10) {
                    x += rng.random_range(-60.0..60.0);
                    y += rng.random_range(-60.0..60.0);
                    push(&mut out, ts, track_id, x, y, w, h);
                    ts += 500;
                }
            }
            3 => {
                // size changes straddling the threshold
                for _ in 0..rng.random_range(1..20) {
                    let f = 1.0 + rng.random_range(-0.2..0.2);
                    w *= f;
                    h *= 1.0 + rng.random_range(-0.1..0.1);
                    w = w.clamp(10.0, 120.0);
                    h = h.clamp(20.0, 240.0);
                    push(&mut out, ts, track_id, x, y, w, h);
                    ts += 1000;
                }
            }
            _ => {
                // detection gap around the grace period
                ts += rng.random_range(1_000..6_000);
            }
        }
    }
    if out.is_empty() {
        push(&mut out, ts, track_id, x, y, w, h);
    }
    out
}

fn push(out: &mut Vec<DetectionRecord<f64>>, ts: i64, track_id: u64, x: f64, y: f64, w: f64, h: f64) {
    out.push(DetectionRecord {
        timestamp: ts,
        camera_id: "cam1".into(),
        track_id,
        bbox: BoundingBox { x, y, w, h },
        category: "person".into(),
    });
}

/// Stationary track of `seconds` at `step_ms` spacing, ending exactly on
/// `seconds` even when it is not a multiple of the step.
pub fn stationary_track(track_id: u64, seconds_ms: i64, step_ms: i64) -> Vec<DetectionRecord<f64>> {
    let mut out = Vec::new();
    let mut t = 0;
    while t < seconds_ms {
        push(&mut out, 5_000 + t, track_id, 200.0, 200.0, 40.0, 80.0);
        t += step_ms;
    }
    push(&mut out, 5_000 + seconds_ms, track_id, 200.0, 200.0, 40.0, 80.0);
    out
}
