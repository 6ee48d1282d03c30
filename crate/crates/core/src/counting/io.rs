//! Text formats for event streams and histograms.
//!
//! Event files start with `# detector_id=<id> duration=<seconds>` followed by
//! one timestamp per line in seconds with 12 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{EventStream, Histogram};
use crate::error::{Error, Result};

fn parse_err(context: &Path, reason: impl Into<String>) -> Error {
    Error::Parse {
        context: context.display().to_string(),
        reason: reason.into(),
    }
}

pub fn events_to_string(stream: &EventStream) -> String {
    let mut out = String::with_capacity(20 * (stream.len() + 2));
    let _ = writeln!(
        out,
        "# detector_id={} duration={:.11e}",
        stream.detector_id(),
        stream.duration()
    );
    for t in stream.timestamps() {
        let _ = writeln!(out, "{t:.11e}");
    }
    out
}

pub fn write_events(path: &Path, stream: &EventStream) -> Result<()> {
    fs::write(path, events_to_string(stream)).map_err(|e| Error::io(path, e))
}

pub fn read_events(path: &Path) -> Result<EventStream> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| parse_err(path, "missing header"))?;
    let fields = header
        .strip_prefix('#')
        .ok_or_else(|| parse_err(path, "header must start with '#'"))?;
    let (mut id, mut duration) = (None, None);
    for field in fields.split_whitespace() {
        match field.split_once('=') {
            Some(("detector_id", v)) => {
                id = Some(v.parse::<u32>().map_err(|e| parse_err(path, e.to_string()))?)
            }
            Some(("duration", v)) => {
                duration = Some(v.parse::<f64>().map_err(|e| parse_err(path, e.to_string()))?)
            }
            _ => return Err(parse_err(path, format!("unknown header field '{field}'"))),
        }
    }
    let id = id.ok_or_else(|| parse_err(path, "header lacks detector_id"))?;
    let duration = duration.ok_or_else(|| parse_err(path, "header lacks duration"))?;
    let mut ts = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let t = line
            .parse::<f64>()
            .map_err(|e| parse_err(path, format!("line {}: {e}", n + 2)))?;
        ts.push(t);
    }
    EventStream::new(ts, duration, id)
}

pub fn write_histogram_csv(path: &Path, h: &Histogram) -> Result<()> {
    let mut out = String::with_capacity(24 * (h.counts.len() + 1));
    out.push_str("channel_center_s,count\n");
    for (i, c) in h.counts.iter().enumerate() {
        let _ = writeln!(out, "{:.11e},{c}", h.channel_center(i));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Channel centres and counts as written by [`write_histogram_csv`].
pub fn read_histogram_csv(path: &Path) -> Result<Vec<(f64, u64)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("channel_center_s,count") {
        return Err(parse_err(path, "unexpected header"));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            let (c, k) = l
                .split_once(',')
                .ok_or_else(|| parse_err(path, format!("line {}: expected two columns", n + 2)))?;
            let c = c.parse::<f64>().map_err(|e| parse_err(path, e.to_string()))?;
            let k = k.parse::<u64>().map_err(|e| parse_err(path, e.to_string()))?;
            Ok((c, k))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn event_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d1.txt");
        let s = EventStream::new(vec![1.234567890123456e-3, 0.5, 9.999999], 10.0, 1).unwrap();
        write_events(&path, &s).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# detector_id=1 duration=1.00000000000e1\n1.23456789012e-3\n"));
        let r = read_events(&path).unwrap();
        assert_eq!(r.detector_id(), 1);
        assert_eq!(r.duration(), 10.0);
        for (a, b) in r.timestamps().iter().zip(s.timestamps()) {
            assert!((a - b).abs() <= 5e-12 * b.abs());
        }
    }

    #[test]
    fn malformed_event_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        fs::write(&path, "detector 1\n0.1\n").unwrap();
        assert!(matches!(read_events(&path), Err(Error::Parse { .. })));
        fs::write(&path, "# detector_id=1 duration=1\n0.5\n0.2\n").unwrap();
        assert!(read_events(&path).is_err());
        assert!(matches!(
            read_events(&dir.path().join("missing.txt")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn histogram_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        let mut h = Histogram::new(0.3e-9, 0.9e-9).unwrap();
        h.counts = vec![1, 2, 3, 4, 5, 6, 7];
        write_histogram_csv(&path, &h).unwrap();
        let rows = read_histogram_csv(&path).unwrap();
        assert_eq!(rows.len(), 7);
        assert_eq!(rows[3], (0.0, 4));
        assert!((rows[0].0 + 0.9e-9).abs() < 1e-20);
    }
}
