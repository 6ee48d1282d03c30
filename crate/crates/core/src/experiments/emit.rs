//! Result files.
//!
//! `summary.json` echoes the full spec and every derived metric; it and all
//! CSV files depend only on the spec and seed. Wall-clock data goes to
//! `run_info.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::{json, Value};

use super::temporal::histogram_prediction;
use super::RunResult;
use crate::analytic::G2Curve;
use crate::counting::{write_events, write_histogram_csv};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    /// CSV data files plus `summary.json`.
    #[default]
    Csv,
    /// Everything in `summary.json`.
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::invalid("format", format!("'{other}' is not csv or json"))),
        }
    }
}

pub const NO_CURVES_NOTICE: &str = "no g2 curves in this result; curve CSV files not written";

fn write(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

fn curve_csv(curve: &G2Curve, analytic: &G2Curve) -> String {
    let mut out = String::from("position,g2,stderr,analytic\n");
    for i in 0..curve.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            curve.abscissa[i], curve.g2[i], curve.stderr[i], analytic.g2[i]
        );
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn to_json(value: &Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Parse {
        context: "summary".into(),
        reason: e.to_string(),
    })?;
    s.push('\n');
    Ok(s)
}

/// Writes the result files into `dir`, creating it if needed; returns the paths written.
pub fn emit_results(result: &RunResult, format: OutputFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut result = result.clone();
    if result.curves.is_empty() {
        result.notices.push(NO_CURVES_NOTICE.to_string());
    }
    let mut summary = serde_json::to_value(&result).map_err(|e| Error::Parse {
        context: "summary".into(),
        reason: e.to_string(),
    })?;

    let prediction = match (&result.histogram, &result.temporal) {
        (Some(h), Some(t)) => Some(histogram_prediction(
            h,
            t.accidental_baseline,
            t.coherence_factor,
            &result.spec.optics(),
        )),
        _ => None,
    };

    match format {
        OutputFormat::Json => {
            if let (Some(h), Some(pred), Some(obj)) =
                (&result.histogram, &prediction, summary.as_object_mut())
            {
                obj.insert(
                    "histogram".into(),
                    json!({
                        "channel_width": h.channel_width,
                        "channel_center_s": h.centers(),
                        "count": h.counts,
                        "analytic": pred,
                    }),
                );
            }
        }
        OutputFormat::Csv => {
            for (i, c) in result.curves.iter().enumerate() {
                write(
                    dir.join(format!("curve_{i:02}.csv")),
                    &curve_csv(&c.curve, &c.analytic),
                    &mut written,
                )?;
            }
            for t in &result.singles {
                let mut out = String::from("position,rate,stderr\n");
                for i in 0..t.positions.len() {
                    let _ = writeln!(out, "{},{},{}", t.positions[i], t.rate[i], t.stderr[i]);
                }
                write(dir.join(format!("singles_d{}.csv", t.detector)), &out, &mut written)?;
            }
            if !result.widths.is_empty() {
                let mut out = String::from(
                    "source_diameter,fitted_first_zero,crossing,hwhm,analytic_width,analytic_hwhm,relative_error\n",
                );
                for w in &result.widths {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        w.source_diameter,
                        w.estimate.fitted_first_zero,
                        opt(w.estimate.crossing),
                        opt(w.estimate.hwhm),
                        w.analytic_width,
                        w.analytic_hwhm,
                        w.relative_error
                    );
                }
                write(dir.join("widths.csv"), &out, &mut written)?;
            }
            if let (Some(h), Some(pred)) = (&result.histogram, &prediction) {
                let path = dir.join("histogram.csv");
                write_histogram_csv(&path, h)?;
                written.push(path);
                let mut out = String::from("channel_center_s,expected\n");
                for (i, p) in pred.iter().enumerate() {
                    let _ = writeln!(out, "{:.11e},{p}", h.channel_center(i));
                }
                write(dir.join("histogram_analytic.csv"), &out, &mut written)?;
            }
            if let Some(report) = &result.oracle {
                let mut out = String::from("identity,cases,max_deviation,tolerance,pass\n");
                for r in &report.rows {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{}",
                        r.identity, r.cases, r.max_deviation, r.tolerance, r.pass
                    );
                }
                write(dir.join("oracle.csv"), &out, &mut written)?;
            }
        }
    }
    if let Some((s1, s2)) = &result.events {
        for s in [s1, s2] {
            let path = dir.join(format!("events_d{}.txt", s.detector_id()));
            write_events(&path, s)?;
            written.push(path);
        }
    }
    write(dir.join("summary.json"), &to_json(&summary)?, &mut written)?;
    let info = json!({
        "runtime_s": result.runtime_s,
        "curve_runtime_s": result.curve_runtime_s,
        "software_version": result.metadata.software_version,
    });
    write(dir.join("run_info.json"), &to_json(&info)?, &mut written)?;
    Ok(written)
}

/// Parses a curve file back into the curve and its analytic column.
pub fn read_curve_csv(path: &Path) -> Result<(G2Curve, Vec<f64>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |reason: String| Error::Parse {
        context: path.display().to_string(),
        reason,
    };
    let mut lines = text.lines();
    if lines.next() != Some("position,g2,stderr,analytic") {
        return Err(bad("unexpected header".into()));
    }
    let (mut x, mut g, mut s, mut a) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(format!("line {}: {e}", n + 2)))?;
        if cols.len() != 4 {
            return Err(bad(format!("line {}: expected 4 columns", n + 2)));
        }
        x.push(cols[0]);
        g.push(cols[1]);
        s.push(cols[2]);
        a.push(cols[3]);
    }
    Ok((G2Curve::new(x, g, s)?, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{analytic_curve, ExperimentKind, ExperimentSpec};

    #[test]
    fn csv_round_trip_and_byte_stability() {
        let spec = ExperimentSpec::for_kind(ExperimentKind::AnalyticCurve);
        let r = analytic_curve(&spec).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        emit_results(&r, OutputFormat::Csv, a.path()).unwrap();
        emit_results(&r, OutputFormat::Csv, b.path()).unwrap();
        for name in ["curve_00.csv", "curve_02.csv", "summary.json"] {
            assert_eq!(
                fs::read(a.path().join(name)).unwrap(),
                fs::read(b.path().join(name)).unwrap()
            );
        }
        let (curve, analytic) = read_curve_csv(&a.path().join("curve_01.csv")).unwrap();
        assert_eq!(curve, r.curves[1].curve);
        assert_eq!(analytic, r.curves[1].analytic.g2);
    }

    #[test]
    fn empty_curve_list_writes_summary_only() {
        let spec = ExperimentSpec::for_kind(ExperimentKind::AnalyticCurve);
        let mut r = analytic_curve(&spec).unwrap();
        r.curves.clear();
        let dir = tempfile::tempdir().unwrap();
        let files = emit_results(&r, OutputFormat::Csv, dir.path()).unwrap();
        assert!(files.iter().all(|p| p.extension().unwrap() != "csv"));
        let text = fs::read_to_string(dir.path().join("summary.json")).unwrap();
        assert!(text.contains(NO_CURVES_NOTICE));
    }

    #[test]
    fn unwritable_destination_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let spec = ExperimentSpec::for_kind(ExperimentKind::AnalyticCurve);
        let r = analytic_curve(&spec).unwrap();
        let err = emit_results(&r, OutputFormat::Csv, &blocker.join("sub")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("sub"));
    }

    #[test]
    fn format_parsing() {
        assert_eq!("csv".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
        assert_eq!("json".parse::<OutputFormat>().unwrap(), OutputFormat::Json);
        assert!("xml".parse::<OutputFormat>().is_err());
    }
}
