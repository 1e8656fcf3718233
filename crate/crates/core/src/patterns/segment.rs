use crate::model::{AnalysisConfig, Point, Trajectory};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Segment<T> {
    /// Index of the first point in the parent trajectory.
    pub start: usize,
    pub points: Vec<Point<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSet<T> {
    pub parent_track: u64,
    pub segments: Vec<Segment<T>>,
}

/// Start indices of fixed-length overlapping windows over `n` points.
///
/// Windows advance by `length - overlap`; a window that would run past the
/// end is shifted back to finish on the last point. A trajectory shorter
/// than `length` yields one window at 0.
pub(crate) fn window_starts(n: usize, length: usize, overlap: usize) -> Vec<usize> {
    if n <= length {
        return vec![0];
    }
    let stride = length - overlap;
    let mut starts = Vec::new();
    let mut start = 0;
    loop {
        if start + length >= n {
            starts.push(n - length);
            break;
        }
        starts.push(start);
        start += stride;
    }
    starts
}

pub fn segment_trajectory<T: Scalar>(traj: &Trajectory<T>, cfg: &AnalysisConfig) -> SegmentSet<T> {
    let points = traj.points();
    let len = cfg.segment_length.min(points.len());
    let segments = window_starts(points.len(), cfg.segment_length, cfg.segment_overlap)
        .into_iter()
        .map(|start| Segment {
            start,
            points: points[start..start + len].to_vec(),
        })
        .collect();
    SegmentSet {
        parent_track: traj.track_id,
        segments,
    }
}
