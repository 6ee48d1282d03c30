//! Acceptance run at full default settings.
//!
//! Prints one PASS/FAIL line per criterion and fails if any criterion fails.
//! Run with `cargo test --release --test acceptance -- --nocapture` to see the table.

use std::fs;
use std::path::Path;
use std::process::Command;

use thermal_hbt::analytic::correlation_width;
use thermal_hbt::counting::{
    coincidences_in_window, CoxSampler, DetectorModel, EventStream, DEFAULT_SINGLES_RATE,
    DEFAULT_WINDOW,
};
use thermal_hbt::experiments::{run, ExperimentKind, ExperimentSpec, RunResult};
use thermal_hbt::rng::sub_seed;

const ONE_THIRD: f64 = 1.0 / 3.0;
const SCAN_STEP: f64 = 0.1e-3;

struct Report {
    lines: Vec<String>,
    all_pass: bool,
}

impl Report {
    fn check(&mut self, n: usize, name: &str, pass: bool, detail: String) {
        let line = format!(
            "criterion {n}: {} {name}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
        println!("{line}");
        self.lines.push(line);
        self.all_pass &= pass;
    }
}

fn run_kind(kind: ExperimentKind) -> RunResult {
    run(&ExperimentSpec::for_kind(kind)).unwrap()
}

fn visibility_bound(r: &mut Report, analytic: &RunResult, runs: &[&RunResult]) {
    let worst_limit = analytic
        .curves
        .iter()
        .map(|c| (c.analytic_visibility_limit - ONE_THIRD).abs())
        .fold(0.0, f64::max);
    let mut detail = format!("analytic |V - 1/3| = {worst_limit:.2e}");
    let mut pass = worst_limit < 1e-6;
    let mut slowest: f64 = 0.0;
    for res in runs {
        for (c, t) in res.curves.iter().zip(&res.curve_runtime_s) {
            let v = c.visibility_jackknife.expect("Monte Carlo curve");
            let ok = v.mean <= ONE_THIRD + 3.0 * v.stderr;
            pass &= ok;
            slowest = slowest.max(*t);
            if !ok {
                detail += &format!("; {} V = {:.4} +- {:.4}", c.label, v.mean, v.stderr);
            }
        }
    }
    let curves: usize = runs.iter().map(|res| res.curves.len()).sum();
    detail += &format!("; {curves} MC curves within 1/3 + 3 se; slowest curve {slowest:.1} s");
    pass &= slowest < 60.0;
    r.check(1, "visibility bound", pass, detail);
}

fn airy_law(r: &mut Report, spatial: &RunResult) {
    let worst = spatial
        .curves
        .iter()
        .map(|c| c.max_abs_deviation)
        .fold(0.0, f64::max);
    r.check(
        2,
        "Airy law",
        worst < 0.05,
        format!("max |g2 - analytic| = {worst:.4} over {} curves", spatial.curves.len()),
    );
}

fn width_reciprocity(r: &mut Report, sizes: &RunResult) {
    let spec = &sizes.spec;
    let mut pass = sizes.widths.len() == spec.source_sizes.len();
    let mut detail = String::new();
    for w in &sizes.widths {
        let expected = correlation_width(&spec.optics().with_source_diameter(w.source_diameter));
        let err = w.estimate.fitted_first_zero / expected - 1.0;
        pass &= err.abs() < 0.05;
        detail += &format!("{:.0}um {:+.2}%; ", w.source_diameter * 1e6, 100.0 * err);
    }
    let decreasing = sizes.widths_strictly_decreasing == Some(true);
    detail += if decreasing { "strictly decreasing" } else { "NOT decreasing" };
    r.check(3, "width-size reciprocity", pass && decreasing, detail);
}

fn peak_tracking(r: &mut Report, spatial: &RunResult) {
    let mut pass = true;
    let mut detail = String::new();
    for c in &spatial.curves {
        let off = (c.argmax_position - c.d1_position).abs();
        pass &= off <= SCAN_STEP + 1e-9;
        detail += &format!("{} argmax {:+.2} mm; ", c.label, c.argmax_position * 1e3);
    }
    for t in &spatial.singles {
        pass &= t.max_deviation_sigma <= 3.0;
        detail += &format!("singles D{} {:.2} sigma; ", t.detector, t.max_deviation_sigma);
    }
    r.check(4, "peak tracking", pass, detail.trim_end_matches("; ").to_string());
}

fn temporal_histogram(r: &mut Report, temporal: &RunResult) {
    let t = temporal.temporal.as_ref().unwrap();
    let finest = &t.ratios[0];
    let mut pass = (finest.width - temporal.spec.channel_width).abs() < 1e-15
        && finest.deviation_sigma().abs() < 5.0;
    let analytic_rising = t
        .ratios
        .windows(2)
        .all(|w| w[0].width < w[1].width && w[0].analytic > w[1].analytic);
    let all_within = t.ratios.iter().all(|x| x.deviation_sigma().abs() < 5.0);
    pass &= analytic_rising && all_within && finest.analytic > 1.999 && t.baseline_flat;
    let ratios: Vec<String> = t
        .ratios
        .iter()
        .map(|x| format!("{:.1}ns {:.3}+-{:.3} ({:.4})", x.width * 1e9, x.measured, x.stderr, x.analytic))
        .collect();
    r.check(
        5,
        "temporal histogram",
        pass,
        format!(
            "peak/baseline {}; baseline chi2 {:.0} < {:.0}: {}",
            ratios.join(", "),
            t.baseline_chi2,
            t.baseline_chi2_critical,
            t.baseline_flat
        ),
    );
}

fn poisson_stream(duration: f64, id: u32, seed: u64) -> EventStream {
    let mut s = CoxSampler::new(0.0, DEFAULT_SINGLES_RATE, &DetectorModel::default(), seed);
    s.push_segment(1.0, duration);
    let mut ts = s.finish();
    ts.retain(|&t| t <= duration);
    EventStream::new(ts, duration, id).unwrap()
}

fn accidental_rate(r: &mut Report) {
    let t = 10.0;
    let seed = ExperimentSpec::default().seed;
    let s1 = poisson_stream(t, 1, sub_seed(seed, 1));
    let s2 = poisson_stream(t, 2, sub_seed(seed, 2));
    let nc = coincidences_in_window(&s1, &s2, DEFAULT_WINDOW) as f64;
    let rate = nc / t;
    let sigma = nc.sqrt() / t;
    r.check(
        6,
        "accidental rate",
        (rate - 2160.0).abs() < 5.0 * sigma,
        format!("{rate:.1} +- {sigma:.1} per s (expected 2160)"),
    );
}

fn oracle_identities(r: &mut Report, oracle: &RunResult) {
    let o = oracle.oracle.as_ref().unwrap();
    let worst = o.rows.iter().map(|row| row.max_deviation).fold(0.0, f64::max);
    let pass = o.all_pass && o.n_max >= 20 && o.mode_means.len() <= 3 && worst < 1e-6;
    r.check(
        7,
        "oracle identities",
        pass,
        format!(
            "{} modes, n_max {}, max deviation {worst:.2e} across {} identities",
            o.mode_means.len(),
            o.n_max,
            o.rows.len()
        ),
    );
}

fn data_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "run_info.json")
        .map(|e| (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism(r: &mut Report) {
    let small = "realizations = 200\nbatches = 10\nacquisition_time = 0.2\nwrite_events = true\n";
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    fs::write(&config, small).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for cmd in [
        "temporal-histogram",
        "spatial-scan",
        "source-size-scan",
        "analytic-curve",
        "oracle-check",
    ] {
        let outs: Vec<_> = (0..2)
            .map(|i| {
                let out = dir.path().join(format!("{cmd}-{i}"));
                let status = Command::new(env!("CARGO_BIN_EXE_thermal-hbt"))
                    .arg(cmd)
                    .arg("--config")
                    .arg(&config)
                    .arg("--out")
                    .arg(&out)
                    .output()
                    .unwrap()
                    .status;
                assert!(status.success(), "{cmd} failed");
                data_files(&out)
            })
            .collect();
        let same = !outs[0].is_empty() && outs[0] == outs[1];
        pass &= same;
        detail.push(format!("{cmd} {} files {}", outs[0].len(), if same { "identical" } else { "DIFFER" }));
    }
    r.check(8, "determinism", pass, detail.join("; "));
}

#[test]
fn acceptance() {
    let mut r = Report {
        lines: Vec::new(),
        all_pass: true,
    };
    let analytic = run_kind(ExperimentKind::AnalyticCurve);
    let spatial = run_kind(ExperimentKind::SpatialScan);
    let sizes = run_kind(ExperimentKind::SourceSizeScan);
    let temporal = run_kind(ExperimentKind::TemporalHistogram);
    let oracle = run_kind(ExperimentKind::OracleCheck);

    visibility_bound(&mut r, &analytic, &[&spatial, &sizes]);
    airy_law(&mut r, &spatial);
    width_reciprocity(&mut r, &sizes);
    peak_tracking(&mut r, &spatial);
    temporal_histogram(&mut r, &temporal);
    accidental_rate(&mut r);
    oracle_identities(&mut r, &oracle);
    determinism(&mut r);

    assert!(r.all_pass, "failed criteria:\n{}", r.lines.join("\n"));
}
