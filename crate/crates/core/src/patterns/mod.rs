//! Movement patterns. Fragmented tracks are stitched first; the result feeds
//! zone-transition statistics and trajectory clustering.

mod cluster;
mod segment;
mod stitch;
mod zoning;

pub use cluster::{cluster, dbscan, distance_matrix, resolve_eps, ClusterLabel, ClusterResult};
pub use segment::{segment_trajectory, Segment, SegmentSet};
pub use stitch::{stitch_tracks, StitchMerge, StitchPlan};
pub use zoning::{exposure_index, load_index, load_ratio, transition_matrix, zone_sequence, TransitionMatrix};
