//! Shared domain types plus detection validation and zone lookup.

use std::collections::BTreeSet;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Milliseconds since the Unix epoch.
pub type TimestampMs = i64;

/// Category label of the records that are analyzed.
pub const PERSON: &str = "person";

/// A point in image pixels, origin top-left, y growing downward.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    /// Euclidean distance. Every distance kernel goes through this function.
    #[inline]
    pub fn distance(&self, other: &Self) -> T {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl<T> From<(T, T)> for Point<T> {
    fn from((x, y): (T, T)) -> Self {
        Self { x, y }
    }
}

/// Detector bounding box: left edge, top edge, width, height in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox<T> {
    pub x: T,
    pub y: T,
    pub w: T,
    pub h: T,
}

impl<T: Scalar> BoundingBox<T> {
    pub fn new(x: T, y: T, w: T, h: T) -> Result<Self> {
        let b = Self { x, y, w, h };
        b.check()?;
        Ok(b)
    }

    /// Checks the box invariants: finite values, strictly positive size.
    pub fn check(&self) -> Result<()> {
        if !(self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()) {
            return Err(Error::invalid("bounding box has a non-finite value"));
        }
        if self.w <= T::zero() || self.h <= T::zero() {
            return Err(Error::invalid(format!(
                "bounding box size must be positive (w={}, h={})",
                self.w, self.h
            )));
        }
        Ok(())
    }

    pub fn diagonal(&self) -> T {
        (self.w * self.w + self.h * self.h).sqrt()
    }
}

/// Axis-aligned rectangle in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect<T> {
    pub x: T,
    pub y: T,
    pub w: T,
    pub h: T,
}

impl<T: Scalar> Rect<T> {
    pub fn new(x: T, y: T, w: T, h: T) -> Self {
        Self { x, y, w, h }
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite())
            || self.w <= T::zero()
            || self.h <= T::zero()
    }

    pub fn center(&self) -> Point<T> {
        let two = T::lit(2.0);
        Point::new(self.x + self.w / two, self.y + self.h / two)
    }

    /// Closed-rectangle overlap test.
    pub fn overlaps(&self, other: &Self) -> bool {
        self.x <= other.x + other.w
            && other.x <= self.x + self.w
            && self.y <= other.y + other.h
            && other.y <= self.y + self.h
    }
}

/// One time-stamped person observation from one camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord<T> {
    pub timestamp: TimestampMs,
    pub camera_id: String,
    /// Local tracker id, unique only within a camera.
    pub track_id: u64,
    pub bbox: BoundingBox<T>,
    pub category: String,
}

impl<T> DetectionRecord<T> {
    pub fn is_person(&self) -> bool {
        self.category.eq_ignore_ascii_case(PERSON)
    }
}

/// Named polygonal zone of interest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Deserialize<'de>"))]
pub struct ZonePolygon<T> {
    #[serde(rename = "id")]
    pub zone_id: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub priority: i64,
    #[serde(deserialize_with = "deserialize_vertices")]
    pub vertices: Vec<Point<T>>,
}

fn deserialize_vertices<'de, D, T>(de: D) -> std::result::Result<Vec<Point<T>>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Vertex<T> {
        Pair([T; 2]),
        Named { x: T, y: T },
    }
    let raw: Vec<Vertex<T>> = Vec::deserialize(de)?;
    Ok(raw
        .into_iter()
        .map(|v| match v {
            Vertex::Pair([x, y]) => Point { x, y },
            Vertex::Named { x, y } => Point { x, y },
        })
        .collect())
}

impl<T: Scalar> ZonePolygon<T> {
    pub fn new(zone_id: impl Into<String>, priority: i64, vertices: Vec<Point<T>>) -> Result<Self> {
        let zone_id = zone_id.into();
        let z = Self {
            name: zone_id.clone(),
            zone_id,
            priority,
            vertices,
        };
        z.check()?;
        Ok(z)
    }

    /// Requires at least three finite vertices forming a simple polygon.
    pub fn check(&self) -> Result<()> {
        if self.vertices.len() < 3 {
            return Err(Error::invalid(format!(
                "zone {:?} needs at least 3 vertices, got {}",
                self.zone_id,
                self.vertices.len()
            )));
        }
        if self.vertices.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid(format!(
                "zone {:?} has a non-finite vertex",
                self.zone_id
            )));
        }
        if !is_simple_polygon(&self.vertices) {
            return Err(Error::invalid(format!("zone {:?} is self-intersecting", self.zone_id)));
        }
        Ok(())
    }

    pub fn contains(&self, p: Point<T>) -> bool {
        point_in_polygon(p, &self.vertices)
    }
}

/// Start/Finish gate rectangles used for directional counting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatePair<T> {
    pub camera_id: String,
    pub start_zone: Rect<T>,
    pub finish_zone: Rect<T>,
}

impl<T: Scalar> GatePair<T> {
    pub fn check(&self) -> Result<()> {
        if self.start_zone.is_degenerate() || self.finish_zone.is_degenerate() {
            return Err(Error::invalid("gate rectangles must have positive finite size"));
        }
        if self.start_zone.overlaps(&self.finish_zone) {
            return Err(Error::invalid("start and finish gates overlap"));
        }
        Ok(())
    }
}

/// Per-camera venue configuration: zones of interest and an optional gate pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZoneConfig<T> {
    pub camera_id: String,
    pub zones: Vec<ZonePolygon<T>>,
    pub gates: Option<GatePair<T>>,
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for ZoneConfig<T> {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Gates<T> {
            start: Rect<T>,
            finish: Rect<T>,
        }
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Doc<T> {
            camera: String,
            #[serde(default = "Vec::new")]
            zones: Vec<ZonePolygon<T>>,
            #[serde(default = "Option::default")]
            gates: Option<Gates<T>>,
        }
        let doc = Doc::<T>::deserialize(de)?;
        let gates = doc.gates.map(|g| GatePair {
            camera_id: doc.camera.clone(),
            start_zone: g.start,
            finish_zone: g.finish,
        });
        Ok(ZoneConfig {
            camera_id: doc.camera,
            zones: doc.zones,
            gates,
        })
    }
}

impl<T: Scalar> ZoneConfig<T> {
    /// Validates each zone and the gate pair; priorities must be unique.
    pub fn check(&self) -> Result<()> {
        let mut priorities = BTreeSet::new();
        let mut ids = BTreeSet::new();
        for z in &self.zones {
            z.check()?;
            if !priorities.insert(z.priority) {
                return Err(Error::invalid(format!(
                    "duplicate zone priority {} on camera {:?}",
                    z.priority, self.camera_id
                )));
            }
            if !ids.insert(z.zone_id.as_str()) {
                return Err(Error::invalid(format!("duplicate zone id {:?}", z.zone_id)));
            }
        }
        if let Some(g) = &self.gates {
            g.check()?;
        }
        Ok(())
    }

    /// Document form used by the zone-config reader.
    pub fn to_json(&self) -> serde_json::Value {
        let zones: Vec<_> = self
            .zones
            .iter()
            .map(|z| {
                serde_json::json!({
                    "id": z.zone_id,
                    "name": z.name,
                    "priority": z.priority,
                    "vertices": z.vertices.iter().map(|p| [p.x.as_f64(), p.y.as_f64()]).collect::<Vec<_>>(),
                })
            })
            .collect();
        let mut doc = serde_json::json!({ "camera": self.camera_id, "zones": zones });
        if let Some(g) = &self.gates {
            let rect = |r: &Rect<T>| serde_json::json!({"x": r.x.as_f64(), "y": r.y.as_f64(), "w": r.w.as_f64(), "h": r.h.as_f64()});
            doc["gates"] = serde_json::json!({
                "start": rect(&g.start_zone),
                "finish": rect(&g.finish_zone),
            });
        }
        doc
    }
}

/// One anchor-point sample of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<T> {
    pub ts: TimestampMs,
    pub point: Point<T>,
}

/// Ordered anchor samples of one (possibly stitched) track.
///
/// Trajectories built from detections have strictly increasing timestamps.
/// Resampled trajectories carry interpolated timestamps, which are only
/// guaranteed non-decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub track_id: u64,
    samples: Vec<Sample<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn new(track_id: u64, samples: Vec<Sample<T>>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid(format!("trajectory {track_id} has no samples")));
        }
        if samples.windows(2).any(|w| w[1].ts <= w[0].ts) {
            return Err(Error::invalid(format!(
                "trajectory {track_id} timestamps are not strictly increasing"
            )));
        }
        Ok(Self { track_id, samples })
    }

    pub(crate) fn from_parts(track_id: u64, samples: Vec<Sample<T>>) -> Self {
        debug_assert!(!samples.is_empty());
        Self { track_id, samples }
    }

    /// Anchor-point trajectory of one track's time-sorted detections.
    pub fn from_records(track_id: u64, records: &[DetectionRecord<T>]) -> Result<Self> {
        let samples = records
            .iter()
            .map(|r| Sample {
                ts: r.timestamp,
                point: crate::geometry::anchor_point(&r.bbox),
            })
            .collect();
        Self::new(track_id, samples)
    }

    pub fn samples(&self) -> &[Sample<T>] {
        &self.samples
    }

    pub fn points(&self) -> Vec<Point<T>> {
        self.samples.iter().map(|s| s.point).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> &Sample<T> {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample<T> {
        &self.samples[self.samples.len() - 1]
    }

    pub(crate) fn into_samples(self) -> Vec<Sample<T>> {
        self.samples
    }
}

/// DBSCAN neighbourhood radius: fixed pixels or derived from the data.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Eps {
    #[default]
    Auto,
    Fixed(f64),
}

impl Serialize for Eps {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Eps::Auto => s.serialize_str("auto"),
            Eps::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Eps {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(de)? {
            Raw::Num(v) => Ok(Eps::Fixed(v)),
            Raw::Str(s) if s.eq_ignore_ascii_case("auto") => Ok(Eps::Auto),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "dbscan_eps must be a number or \"auto\", got {s:?}"
            ))),
        }
    }
}

/// Tunable thresholds. Time values are seconds, distances pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub stability_threshold: f64,
    pub stabilization_time: f64,
    pub min_dwell: f64,
    pub max_dwell: f64,
    /// Gap between consecutive detections that ends a stable run.
    pub track_gap_grace: f64,
    pub gate_tolerance: f64,
    pub max_crossing_time: f64,
    pub resample_points: usize,
    pub segment_length: usize,
    pub segment_overlap: usize,
    pub stitch_max_gap: f64,
    pub stitch_max_distance: f64,
    pub frechet_cell_budget: usize,
    pub dbscan_min_pts: usize,
    pub dbscan_eps: Eps,
    /// Histogram bin width for dwell reports.
    pub histogram_bin_width: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            stability_threshold: 0.15,
            stabilization_time: 2.0,
            min_dwell: 60.0,
            max_dwell: 7200.0,
            track_gap_grace: 3.0,
            gate_tolerance: 0.05,
            max_crossing_time: 10.0,
            resample_points: 20,
            segment_length: 8,
            segment_overlap: 2,
            stitch_max_gap: 2.0,
            stitch_max_distance: 75.0,
            frechet_cell_budget: 10_000,
            dbscan_min_pts: 3,
            dbscan_eps: Eps::Auto,
            histogram_bin_width: 60.0,
        }
    }
}

/// Exact seconds to milliseconds conversion for threshold comparisons.
pub fn secs_to_ms(s: f64) -> i64 {
    (s * 1000.0).round() as i64
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("stability_threshold", self.stability_threshold),
            ("stabilization_time", self.stabilization_time),
            ("min_dwell", self.min_dwell),
            ("max_dwell", self.max_dwell),
            ("track_gap_grace", self.track_gap_grace),
            ("gate_tolerance", self.gate_tolerance),
            ("max_crossing_time", self.max_crossing_time),
            ("stitch_max_gap", self.stitch_max_gap),
            ("stitch_max_distance", self.stitch_max_distance),
            ("histogram_bin_width", self.histogram_bin_width),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        let counts = [
            ("resample_points", self.resample_points),
            ("segment_length", self.segment_length),
            ("segment_overlap", self.segment_overlap),
            ("frechet_cell_budget", self.frechet_cell_budget),
            ("dbscan_min_pts", self.dbscan_min_pts),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.resample_points < 2 {
            return Err(Error::InvalidConfig("resample_points must be at least 2".into()));
        }
        if self.segment_overlap >= self.segment_length {
            return Err(Error::InvalidConfig(format!(
                "segment_overlap ({}) must be smaller than segment_length ({})",
                self.segment_overlap, self.segment_length
            )));
        }
        if self.min_dwell >= self.max_dwell {
            return Err(Error::InvalidConfig(format!(
                "min_dwell ({}) must be smaller than max_dwell ({})",
                self.min_dwell, self.max_dwell
            )));
        }
        if let Eps::Fixed(e) = self.dbscan_eps {
            if !(e.is_finite() && e >= 0.0) {
                return Err(Error::InvalidConfig(format!("dbscan_eps must be >= 0, got {e}")));
            }
        }
        Ok(())
    }
}

/// Why a record was dropped during validation.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    /// Position of the record in the input list.
    pub index: usize,
    pub camera_id: String,
    pub track_id: u64,
    pub timestamp: TimestampMs,
    pub message: String,
}

/// Output of [`validate_and_sort`].
#[derive(Debug, Clone, PartialEq)]
pub struct Validated<T> {
    pub records: Vec<DetectionRecord<T>>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Keeps valid person records sorted by (camera, track, timestamp).
///
/// Duplicate (camera, track, timestamp) keys keep the last occurrence in
/// input order. Invalid boxes are reported per record.
pub fn validate_and_sort<T: Scalar>(records: Vec<DetectionRecord<T>>) -> Validated<T> {
    let mut diagnostics = Vec::new();
    let mut kept = Vec::with_capacity(records.len());
    for (index, r) in records.into_iter().enumerate() {
        if !r.is_person() {
            continue;
        }
        let problem = if r.timestamp < 0 {
            Some("negative timestamp".to_string())
        } else {
            r.bbox.check().err().map(|e| match e {
                Error::InvalidArgument(m) => m,
                other => other.to_string(),
            })
        };
        match problem {
            Some(message) => diagnostics.push(Diagnostic {
                index,
                camera_id: r.camera_id.clone(),
                track_id: r.track_id,
                timestamp: r.timestamp,
                message,
            }),
            None => kept.push(r),
        }
    }
    // stable: equal keys stay in input order, so the last of each run wins
    kept.sort_by(|a, b| (&a.camera_id, a.track_id, a.timestamp).cmp(&(&b.camera_id, b.track_id, b.timestamp)));
    let mut out: Vec<DetectionRecord<T>> = Vec::with_capacity(kept.len());
    for r in kept {
        match out.last_mut() {
            Some(prev)
                if prev.camera_id == r.camera_id && prev.track_id == r.track_id && prev.timestamp == r.timestamp =>
            {
                *prev = r
            }
            _ => out.push(r),
        }
    }
    Validated {
        records: out,
        diagnostics,
    }
}

/// Splits sorted records into per-(camera, track) runs.
pub fn group_tracks<T>(records: &[DetectionRecord<T>]) -> Vec<&[DetectionRecord<T>]> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=records.len() {
        if i == records.len()
            || records[i].track_id != records[start].track_id
            || records[i].camera_id != records[start].camera_id
        {
            if i > start {
                out.push(&records[start..i]);
            }
            start = i;
        }
    }
    out
}

fn on_segment<T: Scalar>(p: Point<T>, a: Point<T>, b: Point<T>) -> bool {
    let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    let scale = a.distance(&b) * a.distance(&p);
    if cross.abs() > T::lit(8.0) * T::epsilon() * scale {
        return false;
    }
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed point-in-polygon test: boundary points are inside.
///
/// Interior classification uses the non-zero winding number.
pub fn point_in_polygon<T: Scalar>(p: Point<T>, poly: &[Point<T>]) -> bool {
    if poly.len() < 3 {
        return false;
    }
    let mut winding = 0i32;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        if on_segment(p, a, b) {
            return true;
        }
        let side = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
        if a.y <= p.y {
            if b.y > p.y && side > T::zero() {
                winding += 1;
            }
        } else if b.y <= p.y && side < T::zero() {
            winding -= 1;
        }
    }
    winding != 0
}

fn segments_intersect<T: Scalar>(a: Point<T>, b: Point<T>, c: Point<T>, d: Point<T>) -> bool {
    let orient = |p: Point<T>, q: Point<T>, r: Point<T>| {
        let v = (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
        if v > T::zero() {
            1
        } else if v < T::zero() {
            -1
        } else {
            0
        }
    };
    let within = |p: Point<T>, q: Point<T>, r: Point<T>| {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if o1 != o2 && o3 != o4 {
        return true;
    }
    (o1 == 0 && within(a, b, c))
        || (o2 == 0 && within(a, b, d))
        || (o3 == 0 && within(c, d, a))
        || (o4 == 0 && within(c, d, b))
}

/// True when no two non-adjacent edges touch and no vertex repeats.
pub fn is_simple_polygon<T: Scalar>(poly: &[Point<T>]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if poly[i] == poly[j] {
                return false;
            }
        }
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Highest-priority zone containing the point. Larger `priority` wins.
pub fn zone_of<T: Scalar>(point: Point<T>, zones: &[ZonePolygon<T>]) -> Option<&ZonePolygon<T>> {
    zones
        .iter()
        .filter(|z| z.contains(point))
        .max_by(|a, b| a.priority.cmp(&b.priority).then_with(|| b.zone_id.cmp(&a.zone_id)))
}
