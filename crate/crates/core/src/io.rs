//! Input readers and the atomic report writer.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{AnalysisConfig, BoundingBox, DetectionRecord, ZoneConfig};
use crate::scalar::Scalar;

#[derive(Debug, Deserialize)]
struct RawDetection<T> {
    ts_ms: u64,
    camera: String,
    track: u64,
    x: T,
    y: T,
    w: T,
    h: T,
    category: String,
}

impl<T> RawDetection<T> {
    fn into_record(self, path: &Path, line: usize) -> Result<DetectionRecord<T>> {
        let timestamp = i64::try_from(self.ts_ms).map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("timestamp {} out of range", self.ts_ms),
        })?;
        Ok(DetectionRecord {
            timestamp,
            camera_id: self.camera,
            track_id: self.track,
            bbox: BoundingBox {
                x: self.x,
                y: self.y,
                w: self.w,
                h: self.h,
            },
            category: self.category,
        })
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Input {
        path: path.to_path_buf(),
        message: format!("cannot read file: {e}"),
    })
}

/// Reads a detection log.
///
/// A log whose first non-blank line starts with `{` is read as one JSON
/// object per line; anything else as delimited text with a header row
/// (comma, or tab when the header contains tabs). Both use the columns
/// `ts_ms, camera, track, x, y, w, h, category`.
pub fn read_detections<T: Scalar + DeserializeOwned>(path: &Path) -> Result<Vec<DetectionRecord<T>>> {
    let text = read_text(path)?;
    parse_detections(&text, path)
}

pub fn parse_detections<T: Scalar + DeserializeOwned>(text: &str, path: &Path) -> Result<Vec<DetectionRecord<T>>> {
    let first = text.lines().find(|l| !l.trim().is_empty());
    match first {
        None => Ok(Vec::new()),
        Some(l) if l.trim_start().starts_with('{') => parse_ndjson(text, path),
        Some(l) => parse_delimited(text, path, if l.contains('\t') { b'\t' } else { b',' }),
    }
}

fn parse_ndjson<T: Scalar + DeserializeOwned>(text: &str, path: &Path) -> Result<Vec<DetectionRecord<T>>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawDetection<T> = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(raw.into_record(path, i + 1)?);
    }
    Ok(out)
}

fn parse_delimited<T: Scalar + DeserializeOwned>(
    text: &str,
    path: &Path,
    delimiter: u8,
) -> Result<Vec<DetectionRecord<T>>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let headers = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let raw: RawDetection<T> = row.deserialize(Some(&headers)).map_err(|e| {
            let message = match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                _ => e.to_string(),
            };
            parse_err(line, message)
        })?;
        out.push(raw.into_record(path, line)?);
    }
    Ok(out)
}

fn is_toml(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"))
}

/// Reads and validates one camera's zone document.
pub fn read_zone_config<T: Scalar + DeserializeOwned>(path: &Path) -> Result<ZoneConfig<T>> {
    let text = read_text(path)?;
    let parsed: ZoneConfig<T> = if is_toml(path) {
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: toml_line(&text, &e),
            message: e.message().to_string(),
        })?
    } else {
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?
    };
    parsed.check().map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(parsed)
}

fn toml_line(text: &str, e: &toml::de::Error) -> usize {
    e.span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(1)
}

/// Reads an analysis config; fields left out keep their defaults.
pub fn read_analysis_config(path: &Path) -> Result<AnalysisConfig> {
    let cfg_err = |message: String| Error::Config {
        path: path.to_path_buf(),
        message,
    };
    let text = fs::read_to_string(path).map_err(|e| cfg_err(format!("cannot read file: {e}")))?;
    let cfg: AnalysisConfig = if is_toml(path) {
        toml::from_str(&text).map_err(|e| cfg_err(format!("line {}: {}", toml_line(&text, &e), e.message())))?
    } else {
        serde_json::from_str(&text).map_err(|e| cfg_err(format!("line {}: {}", e.line(), e)))?
    };
    cfg.validate().map_err(|e| cfg_err(e.to_string()))?;
    Ok(cfg)
}

/// Renders rows as comma-separated text with a header.
pub fn csv_string<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>())
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// Writes every file or none: contents go to temporary siblings first and
/// are renamed into place once all writes succeeded.
pub fn write_all_atomic(dir: &Path, files: &[(String, String)]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut staged = Vec::new();
    let cleanup = |paths: &[(PathBuf, PathBuf)]| {
        for (tmp, _) in paths {
            let _ = fs::remove_file(tmp);
        }
    };
    for (name, body) in files {
        let target = dir.join(name);
        let tmp = dir.join(format!(".{name}.partial"));
        if let Err(e) = fs::write(&tmp, body) {
            cleanup(&staged);
            let _ = fs::remove_file(&tmp);
            return Err(Error::io(&target, e));
        }
        staged.push((tmp, target));
    }
    let mut done = Vec::new();
    for (tmp, target) in &staged {
        if let Err(e) = fs::rename(tmp, target) {
            for p in &done {
                let _ = fs::remove_file(p);
            }
            cleanup(&staged);
            return Err(Error::io(target, e));
        }
        done.push(target.clone());
    }
    Ok(done)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "ts_ms,camera,track,x,y,w,h,category\n\
                       1000,cam1,3,10,20,30,40,person\n\
                       1500,cam1,3,11,20,30,40,person\n";

    #[test]
    fn both_formats_agree() {
        let p = Path::new("in.csv");
        let a: Vec<DetectionRecord<f64>> = parse_detections(CSV, p).unwrap();
        let nd = "{\"ts_ms\":1000,\"camera\":\"cam1\",\"track\":3,\"x\":10,\"y\":20,\"w\":30,\"h\":40,\"category\":\"person\"}\n\n\
                  {\"ts_ms\":1500,\"camera\":\"cam1\",\"track\":3,\"x\":11,\"y\":20,\"w\":30,\"h\":40,\"category\":\"person\"}\n";
        let b: Vec<DetectionRecord<f64>> = parse_detections(nd, p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert_eq!(a[1].bbox.x, 11.0);
        let tsv = CSV.replace(',', "\t");
        let c: Vec<DetectionRecord<f64>> = parse_detections(&tsv, p).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn line_numbers_in_errors() {
        let bad = format!("{CSV}2000,cam1,3,abc,20,30,40,person\n");
        match parse_detections::<f64>(&bad, Path::new("in.csv")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let nd = "{\"ts_ms\":1}\n";
        match parse_detections::<f64>(nd, Path::new("in.jsonl")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        let neg = "ts_ms,camera,track,x,y,w,h,category\n-5,c,1,0,0,1,1,person\n";
        assert!(matches!(
            parse_detections::<f64>(neg, Path::new("x")),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn empty_log() {
        assert!(parse_detections::<f64>("", Path::new("x")).unwrap().is_empty());
        assert!(
            parse_detections::<f64>("ts_ms,camera,track,x,y,w,h,category\n", Path::new("x"))
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn missing_files_name_the_path() {
        let e = read_zone_config::<f64>(Path::new("/nonexistent/zones.json")).unwrap_err();
        assert!(e.to_string().contains("/nonexistent/zones.json"));
        assert_eq!(e.exit_code(), 2);
        let e = read_analysis_config(Path::new("/nonexistent/cfg.json")).unwrap_err();
        assert_eq!(e.exit_code(), 3);
    }

    #[test]
    fn atomic_writes() {
        let dir = tempfile::tempdir().unwrap();
        let files = vec![
            ("a.csv".to_string(), "x\n".to_string()),
            ("b.csv".to_string(), "y\n".to_string()),
        ];
        let written = write_all_atomic(dir.path(), &files).unwrap();
        assert_eq!(written.len(), 2);
        assert_eq!(fs::read_to_string(dir.path().join("b.csv")).unwrap(), "y\n");
        let names: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names.len(), 2);
    }

    #[test]
    fn csv_quotes_fields() {
        let s = csv_string(&["a", "b"], vec![vec!["x,y".to_string(), "z".to_string()]]);
        assert_eq!(s, "a,b\n\"x,y\",z\n");
    }
}
