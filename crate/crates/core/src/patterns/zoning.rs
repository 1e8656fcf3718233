use crate::model::{zone_of, Trajectory, ZonePolygon};
use crate::scalar::Scalar;

/// Zones visited in order, with consecutive repeats collapsed. Samples
/// outside every zone are skipped.
pub fn zone_sequence<T: Scalar>(traj: &Trajectory<T>, zones: &[ZonePolygon<T>]) -> Vec<String> {
    let mut seq: Vec<String> = Vec::new();
    for s in traj.samples() {
        if let Some(z) = zone_of(s.point, zones) {
            if seq.last() != Some(&z.zone_id) {
                seq.push(z.zone_id.clone());
            }
        }
    }
    seq
}

/// Next-distinct-zone transition tallies and their row-normalized form.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub zone_ids: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    pub probabilities: Vec<Vec<f64>>,
}

impl TransitionMatrix {
    pub fn index_of(&self, zone_id: &str) -> Option<usize> {
        self.zone_ids.iter().position(|z| z == zone_id)
    }

    pub fn probability(&self, from: &str, to: &str) -> Option<f64> {
        Some(self.probabilities[self.index_of(from)?][self.index_of(to)?])
    }

    /// Rows with at least one outgoing transition.
    pub fn active_rows(&self) -> usize {
        self.counts.iter().filter(|r| r.iter().any(|&c| c > 0)).count()
    }
}

/// Tallies adjacent ordered pairs over all sequences. Self-transitions and
/// ids not in `zones` are ignored. Rows follow the order of `zones`.
pub fn transition_matrix<T: Scalar>(sequences: &[Vec<String>], zones: &[ZonePolygon<T>]) -> TransitionMatrix {
    let zone_ids: Vec<String> = zones.iter().map(|z| z.zone_id.clone()).collect();
    let k = zone_ids.len();
    let idx = |id: &str| zone_ids.iter().position(|z| z == id);
    let mut counts = vec![vec![0u64; k]; k];
    for seq in sequences {
        for pair in seq.windows(2) {
            if let (Some(a), Some(b)) = (idx(&pair[0]), idx(&pair[1])) {
                if a != b {
                    counts[a][b] += 1;
                }
            }
        }
    }
    let probabilities = counts
        .iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            row.iter()
                .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
                .collect()
        })
        .collect();
    TransitionMatrix {
        zone_ids,
        counts,
        probabilities,
    }
}

/// Per-zone sum of incoming transition probabilities (column sums).
pub fn exposure_index(m: &TransitionMatrix) -> Vec<(String, f64)> {
    m.zone_ids
        .iter()
        .enumerate()
        .map(|(j, id)| (id.clone(), m.probabilities.iter().map(|row| row[j]).sum()))
        .collect()
}

/// Arrivals times mean service time, in person-seconds.
pub fn load_index(arrivals: f64, mean_service: f64) -> f64 {
    arrivals * mean_service
}

/// Load of `(arrivals, mean_service)` relative to a baseline pair.
pub fn load_ratio(peak: (f64, f64), baseline: (f64, f64)) -> f64 {
    load_index(peak.0, peak.1) / load_index(baseline.0, baseline.1)
}
