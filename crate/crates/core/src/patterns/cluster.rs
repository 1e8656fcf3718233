use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::point_list_distance;
use crate::model::{AnalysisConfig, Eps, Point};
use crate::scalar::Scalar;

/// Percentile of the non-zero pairwise distances used by `Eps::Auto`.
const AUTO_EPS_PERCENTILE: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClusterLabel {
    Noise,
    Cluster(usize),
}

impl ClusterLabel {
    pub fn is_noise(&self) -> bool {
        matches!(self, ClusterLabel::Noise)
    }

    /// `-1` for noise, otherwise the cluster number.
    pub fn as_i64(&self) -> i64 {
        match self {
            ClusterLabel::Noise => -1,
            ClusterLabel::Cluster(c) => *c as i64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult<T> {
    pub labels: Vec<ClusterLabel>,
    pub cluster_sizes: Vec<usize>,
    /// Item index of each cluster's medoid, indexed by cluster number.
    pub medoids: Vec<usize>,
    /// Neighbourhood radius actually used.
    pub eps: T,
}

impl<T> ClusterResult<T> {
    pub fn n_clusters(&self) -> usize {
        self.cluster_sizes.len()
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_noise()).count()
    }
}

/// Symmetric pairwise distance matrix, rows filled in parallel.
pub fn distance_matrix<T: Scalar>(items: &[Vec<Point<T>>], cell_budget: usize) -> Result<Vec<Vec<T>>> {
    let n = items.len();
    let upper: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| point_list_distance(&items[i], &items[j], cell_budget).map(|d| d.value))
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<_>>()?;
    let mut m = vec![vec![T::zero(); n]; n];
    for (i, row) in upper.into_iter().enumerate() {
        for (k, d) in row.into_iter().enumerate() {
            let j = i + 1 + k;
            m[i][j] = d;
            m[j][i] = d;
        }
    }
    Ok(m)
}

/// Fixed radius, or the nearest-rank 15th percentile of non-zero pairwise
/// distances. With no non-zero distance every item coincides, and the
/// smallest positive value is returned.
pub fn resolve_eps<T: Scalar>(dist: &[Vec<T>], eps: Eps) -> T {
    match eps {
        Eps::Fixed(v) => T::lit(v),
        Eps::Auto => {
            let mut nonzero: Vec<T> = dist
                .iter()
                .enumerate()
                .flat_map(|(i, row)| row[i + 1..].iter().copied())
                .filter(|&d| d > T::zero())
                .collect();
            if nonzero.is_empty() {
                return T::min_positive_value();
            }
            nonzero.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let rank = (AUTO_EPS_PERCENTILE * nonzero.len() as f64).ceil() as usize;
            nonzero[rank.saturating_sub(1)]
        }
    }
}

/// DBSCAN over a precomputed distance matrix.
///
/// Neighbours are items at distance strictly below `eps`; an item is core
/// when it has at least `min_pts` items in its neighbourhood, itself
/// included. Clusters are the connected components of core items. A border
/// item joins the cluster of its nearest core neighbour, ties going to the
/// smallest id. Cluster numbers follow the smallest core id in each cluster,
/// so the result does not depend on input order. Medoids minimise the summed
/// distance to the other members, ties to the smallest id.
pub fn dbscan<T: Scalar, K: Ord>(dist: &[Vec<T>], ids: &[K], eps: T, min_pts: usize) -> ClusterResult<T> {
    let n = dist.len();
    assert_eq!(ids.len(), n, "one id per item");
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && dist[i][j] < eps).collect())
        .collect();
    let core: Vec<bool> = neighbours.iter().map(|nb| nb.len() + 1 >= min_pts.max(1)).collect();

    let mut component = vec![usize::MAX; n];
    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if !core[start] || component[start] != usize::MAX {
            continue;
        }
        let c = components.len();
        let mut members = vec![start];
        component[start] = c;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            for &j in &neighbours[i] {
                if core[j] && component[j] == usize::MAX {
                    component[j] = c;
                    members.push(j);
                    queue.push_back(j);
                }
            }
        }
        components.push(members);
    }

    let mut order: Vec<usize> = (0..components.len()).collect();
    let min_id = |c: usize| components[c].iter().map(|&i| &ids[i]).min().unwrap();
    order.sort_by(|&a, &b| min_id(a).cmp(min_id(b)));
    let mut renumber = vec![0; components.len()];
    for (new, &old) in order.iter().enumerate() {
        renumber[old] = new;
    }

    let mut labels = vec![ClusterLabel::Noise; n];
    for i in 0..n {
        if core[i] {
            labels[i] = ClusterLabel::Cluster(renumber[component[i]]);
            continue;
        }
        let nearest = neighbours[i].iter().filter(|&&j| core[j]).min_by(|&&a, &&b| {
            dist[i][a]
                .partial_cmp(&dist[i][b])
                .unwrap()
                .then_with(|| ids[a].cmp(&ids[b]))
        });
        if let Some(&j) = nearest {
            labels[i] = ClusterLabel::Cluster(renumber[component[j]]);
        }
    }

    let k = components.len();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, l) in labels.iter().enumerate() {
        if let ClusterLabel::Cluster(c) = l {
            members[*c].push(i);
        }
    }
    let medoids = members
        .iter()
        .map(|m| {
            *m.iter()
                .min_by(|&&a, &&b| {
                    let sa = m.iter().fold(T::zero(), |acc, &j| acc + dist[a][j]);
                    let sb = m.iter().fold(T::zero(), |acc, &j| acc + dist[b][j]);
                    sa.partial_cmp(&sb).unwrap().then_with(|| ids[a].cmp(&ids[b]))
                })
                .unwrap()
        })
        .collect();
    ClusterResult {
        labels,
        cluster_sizes: members.iter().map(Vec::len).collect(),
        medoids,
        eps,
    }
}

/// Clusters equal-length point lists with trajectory distances and the
/// configured DBSCAN parameters. `ids` break ties deterministically.
pub fn cluster<T: Scalar, K: Ord>(
    items: &[Vec<Point<T>>],
    ids: &[K],
    cfg: &AnalysisConfig,
) -> Result<ClusterResult<T>> {
    if items.len() != ids.len() {
        return Err(Error::invalid("cluster needs one id per item"));
    }
    let dist = distance_matrix(items, cfg.frechet_cell_budget)?;
    let eps = resolve_eps(&dist, cfg.dbscan_eps);
    Ok(dbscan(&dist, ids, eps, cfg.dbscan_min_pts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(dx: f64, dy: f64) -> Vec<Point<f64>> {
        (0..20).map(|i| Point::new(i as f64 * 5.0 + dx, dy)).collect()
    }

    #[test]
    fn four_identical_and_one_far() {
        let cfg = AnalysisConfig::default();
        let items = vec![
            path(0.0, 0.0),
            path(0.0, 0.0),
            path(0.0, 300.0),
            path(0.0, 0.0),
            path(0.0, 0.0),
        ];
        let r = cluster(&items, &[1u64, 2, 3, 4, 5], &cfg).unwrap();
        assert_eq!(r.n_clusters(), 1);
        assert_eq!(r.cluster_sizes, [4]);
        assert!(r.labels[2].is_noise());
        assert_eq!(r.eps, 300.0);
        // all-zero distances within the cluster: lowest id is the medoid
        assert_eq!(r.medoids, [0]);
    }

    #[test]
    fn all_identical() {
        let cfg = AnalysisConfig::default();
        let items = vec![path(1.0, 1.0); 6];
        let r = cluster(&items, &[9u64, 4, 7, 5, 8, 6], &cfg).unwrap();
        assert_eq!(r.cluster_sizes, [6]);
        assert_eq!(r.medoids, [1]);
    }

    #[test]
    fn zero_eps_is_all_noise() {
        let cfg = AnalysisConfig {
            dbscan_eps: Eps::Fixed(0.0),
            ..Default::default()
        };
        let items = vec![path(0.0, 0.0), path(0.0, 0.0), path(0.0, 0.0), path(0.0, 1.0)];
        let r = cluster(&items, &[0u64, 1, 2, 3], &cfg).unwrap();
        assert_eq!(r.noise_count(), 4);
        assert_eq!(r.n_clusters(), 0);
    }

    #[test]
    fn too_few_items() {
        let cfg = AnalysisConfig::default();
        let r = cluster(&[path(0.0, 0.0), path(0.0, 0.0)], &[0u64, 1], &cfg).unwrap();
        assert_eq!(r.noise_count(), 2);
        let r = cluster::<f64, u64>(&[], &[], &cfg).unwrap();
        assert!(r.labels.is_empty());
    }

    #[test]
    fn border_goes_to_nearest_core() {
        // two groups on a line with a border item equidistant from both
        let x: [f64; 9] = [0.0, 1.0, 2.0, 3.0, 6.5, 10.0, 11.0, 12.0, 13.0];
        let dist: Vec<Vec<f64>> = x.iter().map(|a| x.iter().map(|b| (a - b).abs()).collect()).collect();
        let r = dbscan(&dist, &[0, 1, 2, 3, 4, 5, 6, 7, 8], 4.0, 4);
        assert_eq!(r.n_clusters(), 2);
        assert_eq!(r.cluster_sizes, [5, 4]);
        assert_eq!(r.labels[4], ClusterLabel::Cluster(0));
        let r = dbscan(&dist, &[0, 1, 2, 99, 4, 5, 6, 7, 8], 4.0, 4);
        assert_eq!(r.labels[4], ClusterLabel::Cluster(1));
    }

    #[test]
    fn auto_eps_percentile() {
        let x: [f64; 5] = [0.0, 1.0, 3.0, 6.0, 10.0];
        let dist: Vec<Vec<f64>> = x.iter().map(|a| x.iter().map(|b| (a - b).abs()).collect()).collect();
        // ten pairs: 1,2,3,3,4,5,6,7,9,10 -> rank ceil(1.5) = 2 -> 2
        assert_eq!(resolve_eps(&dist, Eps::Auto), 2.0);
        assert_eq!(resolve_eps(&dist, Eps::Fixed(7.5)), 7.5);
    }
}
