//! Seeded synthetic detection streams with scripted ground truth.
//!
//! Each track follows one script. Track `i` uses `scripts[i % scripts.len()]`
//! and starts `i * track_spacing_s` after `start_ts_ms`. Positions are
//! deterministic; the seed only drives jitter and frame dropout.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::io::csv_string;
use crate::model::{point_in_polygon, BoundingBox, DetectionRecord, Point, Rect, TimestampMs, ZoneConfig, PERSON};

fn default_start() -> TimestampMs {
    // 2025-05-02T10:00:00Z
    1_746_180_000_000
}

fn default_interval() -> i64 {
    500
}

fn default_spacing() -> f64 {
    30.0
}

fn default_box() -> BoxSize {
    BoxSize { w: 40.0, h: 80.0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSize {
    pub w: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Noise {
    /// Uniform jitter amplitude applied to box x and y, pixels.
    pub jitter_px: f64,
    /// Probability that a frame is dropped.
    pub dropout: f64,
}

fn default_crossing() -> f64 {
    4.0
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

fn default_gap() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Script {
    /// Walk along `path` over `duration_s`.
    PassThrough {
        path: Vec<[f64; 2]>,
        duration_s: f64,
        #[serde(default)]
        label: String,
    },
    /// Walk into a zone, stand still for `duration_s`, walk away.
    Dwell {
        duration_s: f64,
        #[serde(default)]
        zone: Option<String>,
    },
    /// Cross from the Start gate to the Finish gate in `crossing_s`.
    Entry {
        #[serde(default = "default_crossing")]
        crossing_s: f64,
    },
    /// Cross from the Finish gate to the Start gate in `crossing_s`.
    Exit {
        #[serde(default = "default_crossing")]
        crossing_s: f64,
    },
    /// A `path` walk split into `pieces` track ids with `gap_s` between them.
    Fragmented {
        pieces: usize,
        path: Vec<[f64; 2]>,
        duration_s: f64,
        #[serde(default = "default_gap")]
        gap_s: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub tracks: usize,
    pub zones: ZoneConfig<f64>,
    #[serde(default)]
    pub scripts: Vec<Script>,
    #[serde(default)]
    pub noise: Noise,
    #[serde(default = "default_start")]
    pub start_ts_ms: TimestampMs,
    #[serde(default = "default_interval")]
    pub frame_interval_ms: i64,
    #[serde(default = "default_spacing")]
    pub track_spacing_s: f64,
    #[serde(default = "default_box")]
    pub person_box: BoxSize,
    #[serde(default)]
    pub category: Option<String>,
}

/// Scripted ground truth for one generated track.
#[derive(Debug, Clone, PartialEq)]
pub struct Label {
    pub track_id: u64,
    pub script: &'static str,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticOutput {
    pub records: Vec<DetectionRecord<f64>>,
    pub labels: Vec<Label>,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        self.zones.check()?;
        if self.tracks > 0 && self.scripts.is_empty() {
            return Err(Error::invalid("tracks > 0 but no scripts given"));
        }
        if self.frame_interval_ms <= 0 {
            return Err(Error::invalid("frame_interval_ms must be positive"));
        }
        if self.track_spacing_s.is_nan()
            || self.track_spacing_s < 0.0
            || !positive(self.person_box.w)
            || !positive(self.person_box.h)
        {
            return Err(Error::invalid("track spacing must be >= 0 and the person box positive"));
        }
        if !(0.0..1.0).contains(&self.noise.dropout) || self.noise.jitter_px.is_nan() || self.noise.jitter_px < 0.0 {
            return Err(Error::invalid("dropout must be in [0, 1) and jitter >= 0"));
        }
        for s in &self.scripts {
            match s {
                Script::PassThrough { path, duration_s, .. } => check_walk(path, *duration_s)?,
                Script::Fragmented {
                    pieces,
                    path,
                    duration_s,
                    gap_s,
                } => {
                    check_walk(path, *duration_s)?;
                    if *pieces == 0 || !positive(*gap_s) {
                        return Err(Error::invalid("fragmented needs pieces >= 1 and gap_s > 0"));
                    }
                }
                Script::Dwell { duration_s, zone } => {
                    if duration_s.is_nan() || *duration_s < 0.0 {
                        return Err(Error::invalid("dwell duration must be >= 0"));
                    }
                    if self.zones.zones.is_empty() {
                        return Err(Error::invalid("dwell script needs at least one zone"));
                    }
                    if let Some(z) = zone {
                        if !self.zones.zones.iter().any(|p| &p.zone_id == z) {
                            return Err(Error::invalid(format!("dwell script names unknown zone {z:?}")));
                        }
                    }
                }
                Script::Entry { crossing_s } | Script::Exit { crossing_s } => {
                    if self.zones.gates.is_none() {
                        return Err(Error::invalid("entry/exit scripts need a gate pair"));
                    }
                    if !positive(*crossing_s) {
                        return Err(Error::invalid("crossing_s must be positive"));
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_walk(path: &[[f64; 2]], duration_s: f64) -> Result<()> {
    if path.len() < 2 || !positive(duration_s) {
        return Err(Error::invalid(
            "walk scripts need >= 2 path points and a positive duration",
        ));
    }
    Ok(())
}

fn ms(s: f64) -> i64 {
    (s * 1000.0).round() as i64
}

/// Timestamps `0, step, 2*step, ...` below `total`, then `total` itself.
fn frame_times(total: i64, step: i64) -> Vec<i64> {
    let mut t: Vec<i64> = (0..).map(|k| k * step).take_while(|&x| x < total).collect();
    t.push(total);
    t
}

/// Point at fraction `f` of the arc length of a polyline.
fn along(path: &[Point<f64>], f: f64) -> Point<f64> {
    let lens: Vec<f64> = path.windows(2).map(|w| w[0].distance(&w[1])).collect();
    let total: f64 = lens.iter().sum();
    if total == 0.0 {
        return path[0];
    }
    let mut target = f.clamp(0.0, 1.0) * total;
    for (i, &l) in lens.iter().enumerate() {
        if target <= l || i == lens.len() - 1 {
            let r = if l > 0.0 { (target / l).min(1.0) } else { 0.0 };
            let (a, b) = (path[i], path[i + 1]);
            return Point::new(a.x + (b.x - a.x) * r, a.y + (b.y - a.y) * r);
        }
        target -= l;
    }
    path[path.len() - 1]
}

fn expanded(r: &Rect<f64>, m: f64) -> Rect<f64> {
    Rect::new(r.x - m, r.y - m, r.w + 2.0 * m, r.h + 2.0 * m)
}

fn in_rect(p: Point<f64>, r: &Rect<f64>) -> bool {
    p.x >= r.x && p.x <= r.x + r.w && p.y >= r.y && p.y <= r.y + r.h
}

/// Interior point of a zone close to its vertex average.
fn stand_point(vertices: &[Point<f64>]) -> Point<f64> {
    let n = vertices.len() as f64;
    let avg = Point::new(
        vertices.iter().map(|p| p.x).sum::<f64>() / n,
        vertices.iter().map(|p| p.y).sum::<f64>() / n,
    );
    if point_in_polygon(avg, vertices) {
        return avg;
    }
    let (x0, x1) = vertices
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.x), b.max(p.x)));
    let (y0, y1) = vertices
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.y), b.max(p.y)));
    let mut best = vertices[0];
    let mut best_d = f64::MAX;
    for i in 1..64 {
        for j in 1..64 {
            let p = Point::new(x0 + (x1 - x0) * i as f64 / 64.0, y0 + (y1 - y0) * j as f64 / 64.0);
            let d = p.distance(&avg);
            if d < best_d && point_in_polygon(p, vertices) {
                best = p;
                best_d = d;
            }
        }
    }
    best
}

struct Frames {
    /// (relative ms, position, position is the box centroid rather than the anchor)
    points: Vec<(i64, Point<f64>)>,
    centroid: bool,
}

struct Generator<'a> {
    spec: &'a SyntheticSpec,
    rng: ChaCha8Rng,
    next_id: u64,
    records: Vec<DetectionRecord<f64>>,
    labels: Vec<Label>,
}

impl Generator<'_> {
    fn emit(&mut self, track_id: u64, start: TimestampMs, frames: Frames) {
        let BoxSize { w, h } = self.spec.person_box;
        let category = self.spec.category.clone().unwrap_or_else(|| PERSON.to_string());
        let last = frames.points.len().saturating_sub(1);
        for (k, (t, p)) in frames.points.into_iter().enumerate() {
            let dropped = self.spec.noise.dropout > 0.0
                && k != 0
                && k != last
                && self.rng.random::<f64>() < self.spec.noise.dropout;
            let (jx, jy) = if self.spec.noise.jitter_px > 0.0 {
                let a = self.spec.noise.jitter_px;
                (self.rng.random_range(-a..=a), self.rng.random_range(-a..=a))
            } else {
                (0.0, 0.0)
            };
            if dropped {
                continue;
            }
            let top = if frames.centroid { p.y - h / 2.0 } else { p.y - h };
            self.records.push(DetectionRecord {
                timestamp: start + t,
                camera_id: self.spec.zones.camera_id.clone(),
                track_id,
                bbox: BoundingBox {
                    x: p.x - w / 2.0 + jx,
                    y: top + jy,
                    w,
                    h,
                },
                category: category.clone(),
            });
        }
    }

    fn label(&mut self, track_id: u64, script: &'static str, value: String) {
        self.labels.push(Label {
            track_id,
            script,
            value,
        });
    }

    fn walk(&self, path: &[[f64; 2]], from_ms: i64, to_ms: i64, total_ms: i64) -> Vec<(i64, Point<f64>)> {
        let pts: Vec<Point<f64>> = path.iter().map(|&[x, y]| Point::new(x, y)).collect();
        frame_times(to_ms - from_ms, self.spec.frame_interval_ms)
            .into_iter()
            .map(|t| {
                let abs = from_ms + t;
                (abs, along(&pts, abs as f64 / total_ms as f64))
            })
            .collect()
    }

    fn dwell(&mut self, start: TimestampMs, duration_s: f64, zone: &Option<String>) {
        let id = self.alloc();
        let z = match zone {
            Some(name) => self.spec.zones.zones.iter().find(|z| &z.zone_id == name).unwrap(),
            None => &self.spec.zones.zones[0],
        };
        let stand = stand_point(&z.vertices);
        let step = self.spec.person_box.w * 0.5;
        let dt = self.spec.frame_interval_ms;
        let stay = ms(duration_s);
        let mut points = Vec::new();
        // approach from the left, leave to the right, each frame moving half a box width
        for k in 0..4 {
            points.push((k as i64 * dt, Point::new(stand.x - (4 - k) as f64 * step, stand.y)));
        }
        let t0 = 4 * dt;
        for t in frame_times(stay, dt) {
            points.push((t0 + t, stand));
        }
        let t1 = t0 + stay;
        for k in 1..=4 {
            points.push((t1 + k as i64 * dt, Point::new(stand.x + k as f64 * step, stand.y)));
        }
        self.emit(
            id,
            start,
            Frames {
                points,
                centroid: false,
            },
        );
        self.label(id, "dwell", format!("{duration_s}"));
    }

    fn crossing(&mut self, start: TimestampMs, crossing_s: f64, entry: bool) {
        let id = self.alloc();
        let gates = self.spec.zones.gates.as_ref().unwrap();
        let (from, to) = if entry {
            (gates.start_zone, gates.finish_zone)
        } else {
            (gates.finish_zone, gates.start_zone)
        };
        let BoxSize { w, h } = self.spec.person_box;
        let margin = 0.25 * (w * w + h * h).sqrt() + 1.0;
        let (a, b) = (from.center(), to.center());
        let at = |s: f64| Point::new(a.x + (b.x - a.x) * s, a.y + (b.y - a.y) * s);
        // free stretch of the centre line clear of both buffered gates
        let (ea, eb) = (expanded(&from, margin), expanded(&to, margin));
        let free: Vec<f64> = (0..=1000)
            .map(|i| i as f64 / 1000.0)
            .filter(|&s| !in_rect(at(s), &ea) && !in_rect(at(s), &eb))
            .collect();
        let total = ms(crossing_s);
        let dt = self.spec.frame_interval_ms;
        let mut points = vec![(0, a)];
        if let (Some(&lo), Some(&hi)) = (free.first(), free.last()) {
            let mut t = dt;
            while t < total {
                points.push((t, at(lo + (hi - lo) * t as f64 / total as f64)));
                t += dt;
            }
        }
        points.push((total, b));
        self.emit(id, start, Frames { points, centroid: true });
        self.label(id, if entry { "entry" } else { "exit" }, format!("{crossing_s}"));
    }

    fn pass_through(&mut self, start: TimestampMs, path: &[[f64; 2]], duration_s: f64, label: &str) {
        let id = self.alloc();
        let total = ms(duration_s);
        let points = self.walk(path, 0, total, total);
        self.emit(
            id,
            start,
            Frames {
                points,
                centroid: false,
            },
        );
        self.label(id, "pass_through", label.to_string());
    }

    fn fragmented(&mut self, start: TimestampMs, pieces: usize, path: &[[f64; 2]], duration_s: f64, gap_s: f64) {
        let total = ms(duration_s);
        let gap = ms(gap_s);
        let first = self.next_id;
        let share = (total - gap * (pieces as i64 - 1)) / pieces as i64;
        for p in 0..pieces as i64 {
            let id = self.alloc();
            let from = p * (share + gap);
            let to = if p == pieces as i64 - 1 { total } else { from + share };
            let points = self.walk(path, from, to, total);
            self.emit(
                id,
                start,
                Frames {
                    points,
                    centroid: false,
                },
            );
        }
        self.label(first, "fragmented", format!("{pieces}"));
    }

    fn alloc(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }
}

/// Generates the stream. Records are ordered by (timestamp, track).
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticOutput> {
    spec.validate()?;
    let mut g = Generator {
        spec,
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        next_id: 1,
        records: Vec::new(),
        labels: Vec::new(),
    };
    for i in 0..spec.tracks {
        let start = spec.start_ts_ms + ms(i as f64 * spec.track_spacing_s);
        match &spec.scripts[i % spec.scripts.len()] {
            Script::Dwell { duration_s, zone } => g.dwell(start, *duration_s, zone),
            Script::Entry { crossing_s } => g.crossing(start, *crossing_s, true),
            Script::Exit { crossing_s } => g.crossing(start, *crossing_s, false),
            Script::PassThrough {
                path,
                duration_s,
                label,
            } => g.pass_through(start, path, *duration_s, label),
            Script::Fragmented {
                pieces,
                path,
                duration_s,
                gap_s,
            } => g.fragmented(start, *pieces, path, *duration_s, *gap_s),
        }
    }
    let mut records = g.records;
    records.sort_by_key(|r| (r.timestamp, r.track_id));
    Ok(SyntheticOutput {
        records,
        labels: g.labels,
    })
}

pub fn records_csv(records: &[DetectionRecord<f64>]) -> String {
    csv_string(
        &["ts_ms", "camera", "track", "x", "y", "w", "h", "category"],
        records.iter().map(|r| {
            vec![
                r.timestamp.to_string(),
                r.camera_id.clone(),
                r.track_id.to_string(),
                r.bbox.x.to_string(),
                r.bbox.y.to_string(),
                r.bbox.w.to_string(),
                r.bbox.h.to_string(),
                r.category.clone(),
            ]
        }),
    )
}

pub fn records_ndjson(records: &[DetectionRecord<f64>]) -> String {
    let mut s = String::new();
    for r in records {
        let v = serde_json::json!({
            "ts_ms": r.timestamp,
            "camera": r.camera_id,
            "track": r.track_id,
            "x": r.bbox.x,
            "y": r.bbox.y,
            "w": r.bbox.w,
            "h": r.bbox.h,
            "category": r.category,
        });
        s.push_str(&v.to_string());
        s.push('\n');
    }
    s
}

pub fn labels_csv(labels: &[Label]) -> String {
    csv_string(
        &["track_id", "script", "value"],
        labels
            .iter()
            .map(|l| vec![l.track_id.to_string(), l.script.to_string(), l.value.clone()]),
    )
}

/// Side-file paths next to the generated log: `<stem>.labels.csv` and
/// `<stem>.zones.json`.
pub fn side_paths(out: &Path) -> (PathBuf, PathBuf) {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let dir = out.parent().unwrap_or(Path::new(""));
    (
        dir.join(format!("{stem}.labels.csv")),
        dir.join(format!("{stem}.zones.json")),
    )
}

/// Reads a spec file and writes the log next to its side files.
pub fn generate_synthetic(spec_path: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(spec_path).map_err(|e| Error::Input {
        path: spec_path.to_path_buf(),
        message: format!("cannot read file: {e}"),
    })?;
    let spec: SyntheticSpec = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: spec_path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let generated = generate(&spec).map_err(|e| Error::Config {
        path: spec_path.to_path_buf(),
        message: e.to_string(),
    })?;
    let ndjson = out
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("jsonl") || e.eq_ignore_ascii_case("ndjson"));
    let log = if ndjson {
        records_ndjson(&generated.records)
    } else {
        records_csv(&generated.records)
    };
    let (labels_path, zones_path) = side_paths(out);
    let zones = serde_json::to_string_pretty(&spec.zones.to_json()).expect("json") + "\n";
    let dir = out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = |p: &Path| p.file_name().unwrap().to_string_lossy().into_owned();
    crate::io::write_all_atomic(
        dir,
        &[
            (name(out), log),
            (name(&labels_path), labels_csv(&generated.labels)),
            (name(&zones_path), zones),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GatePair, ZonePolygon};

    pub(crate) fn venue() -> ZoneConfig<f64> {
        let sq = |x0: f64, y0: f64, s: f64| {
            vec![
                Point::new(x0, y0),
                Point::new(x0 + s, y0),
                Point::new(x0 + s, y0 + s),
                Point::new(x0, y0 + s),
            ]
        };
        ZoneConfig {
            camera_id: "cam1".into(),
            zones: vec![ZonePolygon::new("seats", 1, sq(200.0, 200.0, 200.0)).unwrap()],
            gates: Some(GatePair {
                camera_id: "cam1".into(),
                start_zone: Rect::new(0.0, 600.0, 100.0, 100.0),
                finish_zone: Rect::new(600.0, 600.0, 100.0, 100.0),
            }),
        }
    }

    fn spec(scripts: Vec<Script>, tracks: usize) -> SyntheticSpec {
        SyntheticSpec {
            seed: 3,
            tracks,
            zones: venue(),
            scripts,
            noise: Noise::default(),
            start_ts_ms: default_start(),
            frame_interval_ms: 500,
            track_spacing_s: 30.0,
            person_box: default_box(),
            category: None,
        }
    }

    #[test]
    fn deterministic_and_labelled() {
        let mut s = spec(
            vec![Script::Dwell {
                duration_s: 90.0,
                zone: None,
            }],
            2,
        );
        s.noise = Noise {
            jitter_px: 1.5,
            dropout: 0.1,
        };
        let a = generate(&s).unwrap();
        let b = generate(&s).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.labels[0],
            Label {
                track_id: 1,
                script: "dwell",
                value: "90".into()
            }
        );
        assert_eq!(records_csv(&a.records), records_csv(&b.records));
    }

    #[test]
    fn zero_tracks() {
        let out = generate(&spec(vec![], 0)).unwrap();
        assert!(out.records.is_empty());
        assert!(out.labels.is_empty());
    }

    #[test]
    fn crossing_touches_each_gate_once() {
        use crate::geometry::gate_contains;
        let out = generate(&spec(vec![Script::Entry { crossing_s: 12.0 }], 1)).unwrap();
        let g = venue().gates.unwrap();
        let s: Vec<i64> = out
            .records
            .iter()
            .filter(|r| gate_contains(&r.bbox, &g.start_zone, 0.05))
            .map(|r| r.timestamp)
            .collect();
        let f: Vec<i64> = out
            .records
            .iter()
            .filter(|r| gate_contains(&r.bbox, &g.finish_zone, 0.05))
            .map(|r| r.timestamp)
            .collect();
        assert_eq!(s.len(), 1);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0] - s[0], 12_000);
    }

    #[test]
    fn fragments_get_consecutive_ids() {
        let path = vec![[0.0, 0.0], [400.0, 0.0]];
        let out = generate(&spec(
            vec![Script::Fragmented {
                pieces: 3,
                path,
                duration_s: 20.0,
                gap_s: 1.0,
            }],
            1,
        ))
        .unwrap();
        let mut ids: Vec<u64> = out.records.iter().map(|r| r.track_id).collect();
        ids.dedup();
        ids.sort();
        ids.dedup();
        assert_eq!(ids, [1, 2, 3]);
        assert_eq!(out.labels[0].value, "3");
    }

    #[test]
    fn rejects_bad_spec() {
        assert!(generate(&spec(vec![], 3)).is_err());
        let mut s = spec(vec![Script::Entry { crossing_s: 4.0 }], 1);
        s.zones.gates = None;
        assert!(generate(&s).is_err());
    }
}
