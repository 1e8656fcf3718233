//! Stationary-stay detection inside a zone of interest.
//!
//! A detection is stable when its box moved less than the stability
//! threshold relative to the previous detection of the same track. A run of
//! consecutive stable detections whose anchors stay inside the zone becomes
//! a dwell once it has lasted the stabilization time; its duration counts
//! from the first detection of the run. Runs shorter than the minimum dwell
//! are discarded and longer than the maximum are truncated and flagged.

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::geometry::anchor_point;
use crate::model::{secs_to_ms, AnalysisConfig, BoundingBox, DetectionRecord, TimestampMs, ZonePolygon};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityVerdict<T> {
    pub stable: bool,
    pub max_relative_change: T,
}

/// Frame-to-frame box change test.
///
/// Position deltas are normalized by the previous box size (`|dx|/w`,
/// `|dy|/h`), size deltas by the previous size (`|dw|/w`, `|dh|/h`).
pub fn stability_check<T: Scalar>(prev: &BoundingBox<T>, curr: &BoundingBox<T>, threshold: T) -> StabilityVerdict<T> {
    let changes = [
        (curr.x - prev.x).abs() / prev.w,
        (curr.y - prev.y).abs() / prev.h,
        (curr.w - prev.w).abs() / prev.w,
        (curr.h - prev.h).abs() / prev.h,
    ];
    let max_relative_change = changes.iter().fold(T::zero(), |acc, &c| acc.max(c));
    StabilityVerdict {
        stable: max_relative_change < threshold,
        max_relative_change,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DwellEvent {
    pub track_id: u64,
    pub zone_id: String,
    pub start_ts: TimestampMs,
    /// Last detection of the stay; not moved when the duration is capped.
    pub end_ts: TimestampMs,
    /// Seconds, within `[min_dwell, max_dwell]`.
    pub duration: f64,
    pub capped: bool,
}

#[derive(Debug, Clone, Copy)]
enum State {
    Outside,
    Candidate { start: TimestampMs },
    Dwelling { start: TimestampMs, last: TimestampMs },
}

struct Thresholds {
    stabilization_ms: i64,
    min_ms: i64,
    max_ms: i64,
    grace_ms: i64,
}

impl Thresholds {
    fn new(cfg: &AnalysisConfig) -> Self {
        Self {
            stabilization_ms: secs_to_ms(cfg.stabilization_time),
            min_ms: secs_to_ms(cfg.min_dwell),
            max_ms: secs_to_ms(cfg.max_dwell),
            grace_ms: secs_to_ms(cfg.track_gap_grace),
        }
    }

    fn close(&self, state: State, track_id: u64, zone_id: &str, out: &mut Vec<DwellEvent>) {
        if let State::Dwelling { start, last } = state {
            let raw = last - start;
            if raw >= self.min_ms {
                let capped = raw > self.max_ms;
                let kept = raw.min(self.max_ms);
                out.push(DwellEvent {
                    track_id,
                    zone_id: zone_id.to_string(),
                    start_ts: start,
                    end_ts: last,
                    duration: kept as f64 / 1000.0,
                    capped,
                });
            }
        }
    }

    fn promote(&self, start: TimestampMs, last: TimestampMs) -> State {
        if last - start >= self.stabilization_ms {
            State::Dwelling { start, last }
        } else {
            State::Candidate { start }
        }
    }
}

/// Dwell events of one track (time-sorted detections) in one zone.
pub fn extract_dwell_events<T: Scalar>(
    records: &[DetectionRecord<T>],
    zoi: &ZonePolygon<T>,
    cfg: &AnalysisConfig,
) -> Vec<DwellEvent> {
    let th = Thresholds::new(cfg);
    let threshold = T::lit(cfg.stability_threshold);
    let mut out = Vec::new();
    let Some(first) = records.first() else {
        return out;
    };
    let track_id = first.track_id;
    let mut state = State::Outside;
    let mut prev: Option<&DetectionRecord<T>> = None;

    for r in records {
        let inside = zoi.contains(anchor_point(&r.bbox));
        if !inside {
            th.close(state, track_id, &zoi.zone_id, &mut out);
            state = State::Outside;
        } else {
            let linked = match (state, prev) {
                (State::Outside, _) | (_, None) => false,
                (_, Some(p)) => {
                    r.timestamp - p.timestamp <= th.grace_ms && stability_check(&p.bbox, &r.bbox, threshold).stable
                }
            };
            state = match state {
                State::Candidate { start, .. } | State::Dwelling { start, .. } if linked => {
                    th.promote(start, r.timestamp)
                }
                _ => {
                    th.close(state, track_id, &zoi.zone_id, &mut out);
                    th.promote(r.timestamp, r.timestamp)
                }
            };
        }
        prev = Some(r);
    }
    th.close(state, track_id, &zoi.zone_id, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DailySummary {
    pub date: NaiveDate,
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (n - 1 denominator), 0 for a single event.
    pub sd: f64,
}

/// Summary statistics of event durations (sample SD); `None` when empty.
pub fn daily_summary(events: &[DwellEvent], date: NaiveDate) -> Option<DailySummary> {
    if events.is_empty() {
        return None;
    }
    let mut d: Vec<f64> = events.iter().map(|e| e.duration).collect();
    d.sort_by(|a, b| a.total_cmp(b));
    let n = d.len();
    let mean = d.iter().sum::<f64>() / n as f64;
    let median = if n % 2 == 1 {
        d[n / 2]
    } else {
        (d[n / 2 - 1] + d[n / 2]) / 2.0
    };
    let sd = if n > 1 {
        (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Some(DailySummary {
        date,
        n,
        mean,
        median,
        sd,
    })
}

/// Duration histogram with bins `[k*w, (k+1)*w)`.
///
/// Emits the contiguous bin range from the first to the last non-empty bin;
/// empty bins inside that range are kept with a zero count.
pub fn dwell_histogram(events: &[DwellEvent], bin_width: f64) -> Result<Vec<(f64, usize)>> {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::invalid(format!(
            "histogram bin width must be positive, got {bin_width}"
        )));
    }
    if events.is_empty() {
        return Ok(Vec::new());
    }
    let bins: Vec<usize> = events
        .iter()
        .map(|e| (e.duration / bin_width).floor().max(0.0) as usize)
        .collect();
    let lo = *bins.iter().min().unwrap();
    let hi = *bins.iter().max().unwrap();
    let mut counts = vec![0usize; hi - lo + 1];
    for b in bins {
        counts[b - lo] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| ((lo + i) as f64 * bin_width, c))
        .collect())
}
