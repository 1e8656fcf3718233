//! Local calendar days for per-day partitioning.

use chrono::{DateTime, FixedOffset, NaiveDate};

use crate::error::{Error, Result};
use crate::model::TimestampMs;

/// Parses `+HH:MM`, `-HH:MM`, `Z`, or a whole number of hours such as `-5`.
pub fn parse_offset(s: &str) -> Result<FixedOffset> {
    let s = s.trim();
    let bad = || Error::invalid(format!("invalid timezone offset {s:?}"));
    if s.eq_ignore_ascii_case("z") || s.eq_ignore_ascii_case("utc") {
        return Ok(FixedOffset::east_opt(0).unwrap());
    }
    let (sign, rest) = match s.as_bytes().first() {
        Some(b'-') => (-1, &s[1..]),
        Some(b'+') => (1, &s[1..]),
        _ => (1, s),
    };
    let (hours, minutes) = match rest.split_once(':') {
        Some((h, m)) => (
            h.parse::<i32>().map_err(|_| bad())?,
            m.parse::<i32>().map_err(|_| bad())?,
        ),
        None => (rest.parse::<i32>().map_err(|_| bad())?, 0),
    };
    if !(0..60).contains(&minutes) {
        return Err(bad());
    }
    FixedOffset::east_opt(sign * (hours * 3600 + minutes * 60)).ok_or_else(bad)
}

/// Calendar day of a timestamp in the given local offset.
pub fn local_date(ts: TimestampMs, offset: FixedOffset) -> NaiveDate {
    DateTime::from_timestamp_millis(ts)
        .expect("timestamp within chrono range")
        .with_timezone(&offset)
        .date_naive()
}
