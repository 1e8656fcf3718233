use crate::model::{secs_to_ms, AnalysisConfig, Sample, Trajectory};
use crate::scalar::Scalar;

/// One accepted link: `absorbed` continues `predecessor` and now belongs to
/// the chain headed by `surviving`.
#[derive(Debug, Clone, PartialEq)]
pub struct StitchMerge {
    pub absorbed: u64,
    pub surviving: u64,
    pub predecessor: u64,
    pub gap_seconds: f64,
    pub gap_pixels: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StitchPlan {
    pub merges: Vec<StitchMerge>,
}

struct Candidate<T> {
    from: usize,
    to: usize,
    gap_ms: i64,
    dist: T,
}

/// Merges fragments where one track ends and another starts shortly after
/// and nearby.
///
/// Candidate pairs need `0 < start(B) - end(A) <= stitch_max_gap` and an
/// endpoint distance within `stitch_max_distance`. They are accepted greedily,
/// nearest first, each track keeping at most one successor and one
/// predecessor. Chains take the id of their earliest piece. Output is
/// ordered by surviving track id.
pub fn stitch_tracks<T: Scalar>(
    trajectories: Vec<Trajectory<T>>,
    cfg: &AnalysisConfig,
) -> (Vec<Trajectory<T>>, StitchPlan) {
    let max_gap = secs_to_ms(cfg.stitch_max_gap);
    let max_dist = T::lit(cfg.stitch_max_distance);
    let n = trajectories.len();

    let mut candidates = Vec::new();
    for (i, a) in trajectories.iter().enumerate() {
        for (j, b) in trajectories.iter().enumerate() {
            if i == j {
                continue;
            }
            let gap_ms = b.first().ts - a.last().ts;
            if gap_ms <= 0 || gap_ms > max_gap {
                continue;
            }
            let dist = a.last().point.distance(&b.first().point);
            if dist <= max_dist {
                candidates.push(Candidate {
                    from: i,
                    to: j,
                    gap_ms,
                    dist,
                });
            }
        }
    }
    candidates.sort_by(|x, y| {
        x.dist
            .partial_cmp(&y.dist)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.gap_ms.cmp(&y.gap_ms))
            .then(trajectories[x.from].track_id.cmp(&trajectories[y.from].track_id))
            .then(trajectories[x.to].track_id.cmp(&trajectories[y.to].track_id))
    });

    let mut next: Vec<Option<usize>> = vec![None; n];
    let mut prev: Vec<Option<usize>> = vec![None; n];
    let mut links = Vec::new();
    for c in candidates {
        // strictly positive gaps order the chain in time, so no cycles
        if next[c.from].is_none() && prev[c.to].is_none() {
            next[c.from] = Some(c.to);
            prev[c.to] = Some(c.from);
            links.push(c);
        }
    }

    let mut head_of = vec![usize::MAX; n];
    for h in (0..n).filter(|&i| prev[i].is_none()) {
        let mut cur = Some(h);
        while let Some(i) = cur {
            head_of[i] = h;
            cur = next[i];
        }
    }

    let mut merges: Vec<StitchMerge> = links
        .iter()
        .map(|c| StitchMerge {
            absorbed: trajectories[c.to].track_id,
            surviving: trajectories[head_of[c.to]].track_id,
            predecessor: trajectories[c.from].track_id,
            gap_seconds: c.gap_ms as f64 / 1000.0,
            gap_pixels: c.dist.as_f64(),
        })
        .collect();
    merges.sort_by_key(|m| (m.surviving, m.absorbed));

    let mut slots: Vec<Option<Trajectory<T>>> = trajectories.into_iter().map(Some).collect();
    let mut out = Vec::new();
    for h in 0..n {
        if prev[h].is_some() {
            continue;
        }
        let head = slots[h].take().unwrap();
        let track_id = head.track_id;
        let mut samples: Vec<Sample<T>> = head.into_samples();
        let mut cur = next[h];
        while let Some(i) = cur {
            samples.extend(slots[i].take().unwrap().into_samples());
            cur = next[i];
        }
        out.push(Trajectory::from_parts(track_id, samples));
    }
    out.sort_by_key(|t| t.track_id);
    (out, StitchPlan { merges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Point;

    fn piece(id: u64, from: (f64, f64, f64), to: (f64, f64, f64)) -> Trajectory<f64> {
        let s = |(t, x, y): (f64, f64, f64)| Sample {
            ts: (t * 1000.0) as i64,
            point: Point::new(x, y),
        };
        Trajectory::new(id, vec![s(from), s(to)]).unwrap()
    }

    #[test]
    fn merges_close_fragments() {
        let cfg = AnalysisConfig::default();
        let a = piece(1, (0.0, 0.0, 0.0), (10.0, 100.0, 100.0));
        let b = piece(2, (10.5, 110.0, 105.0), (20.0, 200.0, 200.0));
        let (out, plan) = stitch_tracks(vec![a, b], &cfg);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].track_id, 1);
        assert_eq!(out[0].len(), 4);
        assert_eq!(plan.merges.len(), 1);
        let m = &plan.merges[0];
        assert_eq!((m.absorbed, m.surviving), (2, 1));
        assert_eq!(m.gap_seconds, 0.5);
        assert!((m.gap_pixels - 125f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn respects_thresholds() {
        let cfg = AnalysisConfig::default();
        let a = piece(1, (0.0, 0.0, 0.0), (10.0, 100.0, 100.0));
        let late = piece(2, (15.0, 110.0, 105.0), (20.0, 200.0, 200.0));
        let (out, plan) = stitch_tracks(vec![a.clone(), late], &cfg);
        assert_eq!(out.len(), 2);
        assert!(plan.merges.is_empty());
        let far = piece(2, (10.5, 300.0, 100.0), (20.0, 400.0, 200.0));
        let (out, _) = stitch_tracks(vec![a, far], &cfg);
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn chains_and_nearest_first() {
        let cfg = AnalysisConfig::default();
        let a = piece(5, (0.0, 0.0, 0.0), (10.0, 100.0, 100.0));
        let near = piece(7, (11.0, 101.0, 100.0), (20.0, 150.0, 100.0));
        let other = piece(6, (10.5, 130.0, 100.0), (20.0, 300.0, 100.0));
        let tail = piece(9, (21.0, 152.0, 100.0), (30.0, 160.0, 100.0));
        let (out, plan) = stitch_tracks(vec![tail, other, near, a], &cfg);
        let ids: Vec<u64> = out.iter().map(|t| t.track_id).collect();
        assert_eq!(ids, [5, 6]);
        assert_eq!(out[0].len(), 6);
        let pairs: Vec<(u64, u64, u64)> = plan
            .merges
            .iter()
            .map(|m| (m.absorbed, m.surviving, m.predecessor))
            .collect();
        assert_eq!(pairs, [(7, 5, 5), (9, 5, 7)]);
        assert!(out[0].samples().windows(2).all(|w| w[0].ts < w[1].ts));
    }
}
