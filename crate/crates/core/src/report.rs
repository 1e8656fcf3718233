//! End-to-end analysis runs that read inputs and write report tables.
//!
//! Every run computes all of its tables in memory first and then writes
//! them together, so a failed run leaves no report files behind.

use std::collections::BTreeMap;
use std::path::PathBuf;

use chrono::{FixedOffset, NaiveDate};
use rayon::prelude::*;

use crate::calendar::local_date;
use crate::dwell::{daily_summary, dwell_histogram, extract_dwell_events, DwellEvent};
use crate::error::{Error, Result};
use crate::flow::{classify_crossing, count_daily_flows, FlowEvent};
use crate::geometry::resample;
use crate::io::{csv_string, read_analysis_config, read_detections, read_zone_config, write_all_atomic};
use crate::model::{
    group_tracks, validate_and_sort, AnalysisConfig, DetectionRecord, Diagnostic, Trajectory, ZoneConfig,
};
use crate::patterns::{
    cluster, exposure_index, segment_trajectory, stitch_tracks, transition_matrix, zone_sequence, ClusterResult,
};

/// Inputs shared by the analysis runs.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub input: PathBuf,
    pub zones: Vec<PathBuf>,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub camera: Option<String>,
    pub offset: FixedOffset,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub written: Vec<PathBuf>,
    pub diagnostics: Vec<Diagnostic>,
    pub records: usize,
}

struct Loaded {
    cfg: AnalysisConfig,
    cameras: Vec<ZoneConfig<f64>>,
    records: Vec<DetectionRecord<f64>>,
    diagnostics: Vec<Diagnostic>,
}

impl Loaded {
    /// Sorted records of one camera, split per track.
    fn tracks_of(&self, camera: &str) -> Vec<&[DetectionRecord<f64>]> {
        let lo = self.records.partition_point(|r| r.camera_id.as_str() < camera);
        let hi = self.records.partition_point(|r| r.camera_id.as_str() <= camera);
        group_tracks(&self.records[lo..hi])
    }
}

fn load(opts: &RunOptions) -> Result<Loaded> {
    let cfg = match &opts.config {
        Some(p) => read_analysis_config(p)?,
        None => AnalysisConfig::default(),
    };
    if opts.zones.is_empty() {
        return Err(Error::invalid("at least one --zones document is required"));
    }
    let mut cameras: BTreeMap<String, ZoneConfig<f64>> = BTreeMap::new();
    for path in &opts.zones {
        let z: ZoneConfig<f64> = read_zone_config(path)?;
        if cameras.contains_key(&z.camera_id) {
            return Err(Error::Config {
                path: path.clone(),
                message: format!("camera {:?} configured twice", z.camera_id),
            });
        }
        cameras.insert(z.camera_id.clone(), z);
    }
    if let Some(c) = &opts.camera {
        cameras.retain(|k, _| k == c);
        if cameras.is_empty() {
            return Err(Error::Config {
                path: opts.zones[0].clone(),
                message: format!("no zone document for camera {c:?}"),
            });
        }
    }
    let raw = read_detections::<f64>(&opts.input)?;
    let validated = validate_and_sort(raw);
    let records = validated
        .records
        .into_iter()
        .filter(|r| cameras.contains_key(&r.camera_id))
        .collect();
    Ok(Loaded {
        cfg,
        cameras: cameras.into_values().collect(),
        records,
        diagnostics: validated.diagnostics,
    })
}

fn finish(opts: &RunOptions, loaded: &Loaded, files: Vec<(String, String)>) -> Result<RunSummary> {
    let written = write_all_atomic(&opts.out, &files)?;
    Ok(RunSummary {
        written,
        diagnostics: loaded.diagnostics.clone(),
        records: loaded.records.len(),
    })
}

fn f1(v: f64) -> String {
    format!("{v:.1}")
}

fn f3(v: f64) -> String {
    format!("{v:.3}")
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

/// Dwell events with their daily summary and duration histograms.
pub fn run_dwell(opts: &RunOptions) -> Result<RunSummary> {
    let loaded = load(opts)?;
    let cfg = &loaded.cfg;

    let mut events: Vec<(String, NaiveDate, DwellEvent)> = Vec::new();
    for cam in &loaded.cameras {
        let tracks = loaded.tracks_of(&cam.camera_id);
        let per_track: Vec<Vec<DwellEvent>> = tracks
            .par_iter()
            .map(|t| cam.zones.iter().flat_map(|z| extract_dwell_events(t, z, cfg)).collect())
            .collect();
        for e in per_track.into_iter().flatten() {
            events.push((cam.camera_id.clone(), local_date(e.start_ts, opts.offset), e));
        }
    }

    let mut by_day: BTreeMap<NaiveDate, Vec<DwellEvent>> = BTreeMap::new();
    for (_, day, e) in &events {
        by_day.entry(*day).or_default().push(e.clone());
    }

    let event_rows = events.iter().map(|(cam, day, e)| {
        vec![
            cam.clone(),
            e.track_id.to_string(),
            e.zone_id.clone(),
            day.to_string(),
            e.start_ts.to_string(),
            e.end_ts.to_string(),
            f3(e.duration),
            e.capped.to_string(),
        ]
    });
    let events_csv = csv_string(
        &[
            "camera",
            "track_id",
            "zone_id",
            "date",
            "start_ts",
            "end_ts",
            "duration_s",
            "capped",
        ],
        event_rows,
    );

    let summary_rows = by_day.iter().filter_map(|(day, evs)| {
        daily_summary(evs, *day).map(|s| vec![s.date.to_string(), s.n.to_string(), f1(s.mean), f1(s.median), f1(s.sd)])
    });
    let summary_csv = csv_string(&["Date", "N", "Mean", "Median", "SD"], summary_rows);

    let all: Vec<DwellEvent> = events.iter().map(|(_, _, e)| e.clone()).collect();
    let hist = dwell_histogram(&all, cfg.histogram_bin_width)?;
    let hist_csv = csv_string(
        &["bin_start_s", "count"],
        hist.iter().map(|(b, c)| vec![f1(*b), c.to_string()]),
    );
    let mut ridge_rows = Vec::new();
    for (day, evs) in &by_day {
        for (b, c) in dwell_histogram(evs, cfg.histogram_bin_width)? {
            ridge_rows.push(vec![day.to_string(), f1(b), c.to_string()]);
        }
    }
    let ridge_csv = csv_string(&["date", "bin_start_s", "count"], ridge_rows);

    finish(
        opts,
        &loaded,
        vec![
            ("dwell_events.csv".into(), events_csv),
            ("dwell_daily_summary.csv".into(), summary_csv),
            ("dwell_histogram.csv".into(), hist_csv),
            ("dwell_histogram_by_day.csv".into(), ridge_csv),
        ],
    )
}

/// Per-track crossing classification and daily entry/exit counts.
pub fn run_flow(opts: &RunOptions) -> Result<RunSummary> {
    let loaded = load(opts)?;
    let cfg = &loaded.cfg;
    let gated: Vec<&ZoneConfig<f64>> = loaded.cameras.iter().filter(|c| c.gates.is_some()).collect();
    if gated.is_empty() || (opts.camera.is_some() && gated.len() != loaded.cameras.len()) {
        return Err(Error::Config {
            path: opts.zones[0].clone(),
            message: "no start/finish gate pair configured".into(),
        });
    }

    let mut event_rows = Vec::new();
    let mut daily = Vec::new();
    for cam in gated {
        let gates = cam.gates.as_ref().unwrap();
        let tracks = loaded.tracks_of(&cam.camera_id);
        let events: Vec<FlowEvent> = tracks
            .par_iter()
            .filter_map(|t| classify_crossing(t, gates, cfg))
            .collect();
        for e in &events {
            event_rows.push(vec![
                cam.camera_id.clone(),
                e.track_id.to_string(),
                e.direction.as_str().to_string(),
                e.first_zone_ts.to_string(),
                e.second_zone_ts.to_string(),
                f3(e.crossing_seconds()),
            ]);
        }
        daily.extend(count_daily_flows(&events, &cam.camera_id, opts.offset));
    }
    daily.sort_by(|a, b| (a.date, &a.camera_id).cmp(&(b.date, &b.camera_id)));

    let events_csv = csv_string(
        &[
            "camera",
            "track_id",
            "direction",
            "first_zone_ts",
            "second_zone_ts",
            "crossing_s",
        ],
        event_rows,
    );
    let daily_csv = csv_string(
        &["date", "camera", "entries", "exits", "uncertain"],
        daily.iter().map(|d| {
            vec![
                d.date.to_string(),
                d.camera_id.clone(),
                d.entries.to_string(),
                d.exits.to_string(),
                d.uncertain.to_string(),
            ]
        }),
    );
    finish(
        opts,
        &loaded,
        vec![
            ("flow_events.csv".into(), events_csv),
            ("flow_daily.csv".into(), daily_csv),
        ],
    )
}

fn file_safe(camera: &str) -> String {
    camera
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Movement-pattern tables for each camera.
pub fn run_patterns(opts: &RunOptions) -> Result<RunSummary> {
    let loaded = load(opts)?;
    let cfg = &loaded.cfg;

    let mut files: Vec<(String, String)> = Vec::new();
    let mut stitch_rows = Vec::new();
    let mut exposure_rows = Vec::new();
    let mut full_rows = Vec::new();
    let mut full_medoid_rows = Vec::new();
    let mut seg_rows = Vec::new();
    let mut seg_medoid_rows = Vec::new();

    for cam in &loaded.cameras {
        let camera = cam.camera_id.clone();
        let trajectories: Vec<Trajectory<f64>> = loaded
            .tracks_of(&camera)
            .into_iter()
            .map(|t| Trajectory::from_records(t[0].track_id, t))
            .collect::<Result<_>>()?;
        let (stitched, plan) = stitch_tracks(trajectories, cfg);
        for m in &plan.merges {
            stitch_rows.push(vec![
                camera.clone(),
                m.absorbed.to_string(),
                m.surviving.to_string(),
                m.predecessor.to_string(),
                f3(m.gap_seconds),
                f3(m.gap_pixels),
            ]);
        }

        let sequences: Vec<Vec<String>> = stitched.iter().map(|t| zone_sequence(t, &cam.zones)).collect();
        let matrix = transition_matrix(&sequences, &cam.zones);
        let mut header = vec!["from".to_string()];
        header.extend(matrix.zone_ids.iter().cloned());
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let prob_rows = matrix.zone_ids.iter().zip(&matrix.probabilities).map(|(id, row)| {
            std::iter::once(id.clone())
                .chain(row.iter().map(|&p| f6(p)))
                .collect::<Vec<_>>()
        });
        let count_rows = matrix.zone_ids.iter().zip(&matrix.counts).map(|(id, row)| {
            std::iter::once(id.clone())
                .chain(row.iter().map(|c| c.to_string()))
                .collect::<Vec<_>>()
        });
        let safe = file_safe(&camera);
        files.push((format!("transition_matrix_{safe}.csv"), csv_string(&header, prob_rows)));
        files.push((format!("transition_counts_{safe}.csv"), csv_string(&header, count_rows)));
        for (zone, score) in exposure_index(&matrix) {
            exposure_rows.push(vec![camera.clone(), zone, f6(score)]);
        }

        let resampled: Vec<Trajectory<f64>> = stitched
            .iter()
            .map(|t| resample(t, cfg.resample_points))
            .collect::<Result<_>>()?;
        let items: Vec<_> = resampled.iter().map(Trajectory::points).collect();
        let ids: Vec<u64> = resampled.iter().map(|t| t.track_id).collect();
        let full = cluster(&items, &ids, cfg)?;
        for (t, l) in resampled.iter().zip(&full.labels) {
            full_rows.push(vec![camera.clone(), t.track_id.to_string(), l.as_i64().to_string()]);
        }
        medoid_rows(
            &full,
            &items,
            |i| vec![ids[i].to_string()],
            &camera,
            &mut full_medoid_rows,
        );

        let mut seg_items = Vec::new();
        let mut seg_ids = Vec::new();
        for t in &resampled {
            for s in segment_trajectory(t, cfg).segments {
                seg_ids.push((t.track_id, s.start));
                seg_items.push(s.points);
            }
        }
        let segs = cluster(&seg_items, &seg_ids, cfg)?;
        for ((track, start), l) in seg_ids.iter().zip(&segs.labels) {
            seg_rows.push(vec![
                camera.clone(),
                track.to_string(),
                start.to_string(),
                l.as_i64().to_string(),
            ]);
        }
        medoid_rows(
            &segs,
            &seg_items,
            |i| vec![seg_ids[i].0.to_string(), seg_ids[i].1.to_string()],
            &camera,
            &mut seg_medoid_rows,
        );
    }

    files.push((
        "stitch_plan.csv".into(),
        csv_string(
            &["camera", "absorbed", "surviving", "predecessor", "gap_s", "gap_px"],
            stitch_rows,
        ),
    ));
    files.push((
        "exposure_index.csv".into(),
        csv_string(&["camera", "zone_id", "exposure"], exposure_rows),
    ));
    files.push((
        "clusters_full.csv".into(),
        csv_string(&["camera", "track_id", "cluster"], full_rows),
    ));
    files.push((
        "medoids_full.csv".into(),
        csv_string(
            &["camera", "cluster", "track_id", "point_index", "x", "y"],
            full_medoid_rows,
        ),
    ));
    files.push((
        "clusters_segments.csv".into(),
        csv_string(&["camera", "track_id", "segment_start", "cluster"], seg_rows),
    ));
    files.push((
        "medoids_segments.csv".into(),
        csv_string(
            &[
                "camera",
                "cluster",
                "track_id",
                "segment_start",
                "point_index",
                "x",
                "y",
            ],
            seg_medoid_rows,
        ),
    ));
    finish(opts, &loaded, files)
}

fn medoid_rows(
    result: &ClusterResult<f64>,
    items: &[Vec<crate::model::Point<f64>>],
    id_cols: impl Fn(usize) -> Vec<String>,
    camera: &str,
    out: &mut Vec<Vec<String>>,
) {
    for (c, &m) in result.medoids.iter().enumerate() {
        for (k, p) in items[m].iter().enumerate() {
            let mut row = vec![camera.to_string(), c.to_string()];
            row.extend(id_cols(m));
            row.extend([k.to_string(), f3(p.x), f3(p.y)]);
            out.push(row);
        }
    }
}
