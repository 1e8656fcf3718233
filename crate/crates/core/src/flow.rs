//! Directional entry/exit classification between a Start and a Finish gate.

use std::collections::BTreeMap;

use chrono::{FixedOffset, NaiveDate};

use crate::calendar::local_date;
use crate::geometry::gate_contains;
use crate::model::{secs_to_ms, AnalysisConfig, DetectionRecord, GatePair, TimestampMs};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Entry,
    Exit,
    Uncertain,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Entry => "entry",
            Direction::Exit => "exit",
            Direction::Uncertain => "uncertain",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowEvent {
    pub track_id: u64,
    pub direction: Direction,
    pub first_zone_ts: TimestampMs,
    pub second_zone_ts: TimestampMs,
}

impl FlowEvent {
    pub fn crossing_seconds(&self) -> f64 {
        (self.second_zone_ts - self.first_zone_ts) as f64 / 1000.0
    }
}

/// Classifies one track by the first-touch times of the two gates.
///
/// Start before Finish is an entry, Finish before Start an exit. A crossing
/// slower than `max_crossing_time` is uncertain, and so is a track whose
/// first touch of both gates is the same detection. Returns `None` when the
/// track touches at most one gate.
pub fn classify_crossing<T: Scalar>(
    records: &[DetectionRecord<T>],
    gates: &GatePair<T>,
    cfg: &AnalysisConfig,
) -> Option<FlowEvent> {
    let tol = T::lit(cfg.gate_tolerance);
    let mut first_start = None;
    let mut first_finish = None;
    for r in records {
        if first_start.is_none() && gate_contains(&r.bbox, &gates.start_zone, tol) {
            first_start = Some(r.timestamp);
        }
        if first_finish.is_none() && gate_contains(&r.bbox, &gates.finish_zone, tol) {
            first_finish = Some(r.timestamp);
        }
        if first_start.is_some() && first_finish.is_some() {
            break;
        }
    }
    let (s, f) = (first_start?, first_finish?);
    let (direction, first, second) = if s < f {
        (Direction::Entry, s, f)
    } else if f < s {
        (Direction::Exit, f, s)
    } else {
        (Direction::Uncertain, s, f)
    };
    let direction = if second - first > secs_to_ms(cfg.max_crossing_time) {
        Direction::Uncertain
    } else {
        direction
    };
    Some(FlowEvent {
        track_id: records[0].track_id,
        direction,
        first_zone_ts: first,
        second_zone_ts: second,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DailyFlowCounts {
    pub date: NaiveDate,
    pub camera_id: String,
    pub entries: usize,
    pub exits: usize,
    pub uncertain: usize,
}

/// Per-day tallies keyed by the local day of `first_zone_ts`, ascending.
pub fn count_daily_flows(events: &[FlowEvent], camera: &str, offset: FixedOffset) -> Vec<DailyFlowCounts> {
    let mut days: BTreeMap<NaiveDate, [usize; 3]> = BTreeMap::new();
    for e in events {
        let slot = days.entry(local_date(e.first_zone_ts, offset)).or_default();
        match e.direction {
            Direction::Entry => slot[0] += 1,
            Direction::Exit => slot[1] += 1,
            Direction::Uncertain => slot[2] += 1,
        }
    }
    days.into_iter()
        .map(|(date, [entries, exits, uncertain])| DailyFlowCounts {
            date,
            camera_id: camera.to_string(),
            entries,
            exits,
            uncertain,
        })
        .collect()
}
