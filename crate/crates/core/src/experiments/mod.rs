//! Measurement harness: composes the lower layers into complete runs and
//! serializes the results.

mod emit;
pub mod fit;
mod oracle_check;
mod spec;
mod temporal;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use emit::{emit_results, read_curve_csv, OutputFormat, NO_CURVES_NOTICE};
pub use fit::{estimate_width, WidthEstimate};
pub use oracle_check::{oracle_report, run_oracle_check, OracleReport, OracleRow};
pub use spec::{ExperimentKind, ExperimentSpec, DEFAULT_REALIZATIONS, DEFAULT_SEED};
pub use temporal::{
    histogram_prediction, run_temporal_histogram, simulate_pair_streams, PairStreams,
    RatioEstimate, TemporalSummary,
};

use crate::analytic::{
    correlation_width, spatial_curve, visibility, G2Curve, OpticalConfig,
};
use crate::counting::{EventStream, Histogram};
use crate::error::{Error, Result};
use crate::montecarlo::{MeanWithError, SpatialEnsemble};
use crate::rng::sub_seed;

pub const SOFTWARE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One g2 curve with its analytic overlay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveResult {
    pub label: String,
    pub d1_position: f64,
    pub source_diameter: f64,
    pub curve: G2Curve,
    /// Point-detector analytic curve on the same abscissa.
    pub analytic: G2Curve,
    /// Raw `(max − min)/(max + min)` with batch-means error.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub visibility: Option<MeanWithError>,
    /// Jackknife bias-corrected visibility with jackknife error.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub visibility_jackknife: Option<MeanWithError>,
    /// Visibility of the analytic overlay as sampled by the scan.
    pub analytic_visibility: f64,
    /// Visibility between the analytic peak and the first zero.
    pub analytic_visibility_limit: f64,
    pub argmax_position: f64,
    pub max_abs_deviation: f64,
}

/// Singles rate against detector position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinglesTable {
    pub detector: u32,
    pub positions: Vec<f64>,
    /// [counts/s]
    pub rate: Vec<f64>,
    pub stderr: Vec<f64>,
    pub expected_rate: f64,
    /// `max |rate − expected| / stderr`.
    pub max_deviation_sigma: f64,
}

impl SinglesTable {
    pub fn is_flat(&self, sigmas: f64) -> bool {
        self.max_deviation_sigma <= sigmas
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthResult {
    pub source_diameter: f64,
    /// `3.8317 λ f / (π a)`
    pub analytic_width: f64,
    pub analytic_hwhm: f64,
    pub estimate: WidthEstimate,
    /// Relative error of the fitted first zero against `analytic_width`.
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub seed: u64,
    pub software_version: String,
    pub normalization: String,
}

/// Everything a run produces. Runtime and bulky payloads are not part of the
/// serialized summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub kind: ExperimentKind,
    pub spec: ExperimentSpec,
    pub curves: Vec<CurveResult>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub singles: Vec<SinglesTable>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub widths: Vec<WidthResult>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub widths_strictly_decreasing: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub temporal: Option<TemporalSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub oracle: Option<OracleReport>,
    pub notices: Vec<String>,
    pub metadata: Metadata,
    #[serde(skip)]
    pub histogram: Option<Histogram>,
    #[serde(skip)]
    pub events: Option<(EventStream, EventStream)>,
    #[serde(skip)]
    pub runtime_s: f64,
    /// Wall-clock seconds attributed to each curve, in `curves` order.
    #[serde(skip)]
    pub curve_runtime_s: Vec<f64>,
}

impl RunResult {
    fn new(spec: &ExperimentSpec, normalization: &str) -> Self {
        Self {
            kind: spec.kind,
            spec: spec.clone(),
            curves: Vec::new(),
            singles: Vec::new(),
            widths: Vec::new(),
            widths_strictly_decreasing: None,
            temporal: None,
            oracle: None,
            notices: Vec::new(),
            metadata: Metadata {
                seed: spec.seed,
                software_version: SOFTWARE_VERSION.to_string(),
                normalization: normalization.to_string(),
            },
            histogram: None,
            events: None,
            runtime_s: 0.0,
            curve_runtime_s: Vec::new(),
        }
    }
}

const MC_NORMALIZATION: &str =
    "ensemble intensity correlation <I1 I2> / (<I1> <I2>), detector-averaged over the aperture";
const ANALYTIC_NORMALIZATION: &str = "closed form 1 + [2 J1(v)/v]^2, point detectors";

/// Runs the experiment named by `spec.kind`.
pub fn run(spec: &ExperimentSpec) -> Result<RunResult> {
    let start = Instant::now();
    let mut result = match spec.kind {
        ExperimentKind::TemporalHistogram => run_temporal_histogram(spec),
        ExperimentKind::SpatialScan => run_spatial_scan(spec),
        ExperimentKind::SourceSizeScan => run_source_size_scan(spec),
        ExperimentKind::AnalyticCurve => analytic_curve(spec),
        ExperimentKind::OracleCheck => run_oracle_check(spec),
    }?;
    result.runtime_s = start.elapsed().as_secs_f64();
    Ok(result)
}

fn require_kind(spec: &ExperimentSpec, kind: ExperimentKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::invalid(
            "experiment kind",
            format!("expected {}, got {}", kind.name(), spec.kind.name()),
        ));
    }
    spec.validate()
}

fn mm_label(prefix: &str, x: f64) -> String {
    format!("{prefix}={:.3}mm", x * 1e3)
}

fn limit_visibility(x1: f64, cfg: &OpticalConfig) -> Result<f64> {
    visibility(&spatial_curve(x1, &[x1, x1 + correlation_width(cfg)], cfg))
}

fn curve_result(
    label: String,
    x1: f64,
    cfg: &OpticalConfig,
    curve: G2Curve,
    vis: Option<(MeanWithError, MeanWithError)>,
) -> Result<CurveResult> {
    let analytic = spatial_curve(x1, &curve.abscissa, cfg);
    let max_abs_deviation = curve
        .g2
        .iter()
        .zip(&analytic.g2)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let argmax_position = curve
        .argmax()
        .map(|i| curve.abscissa[i])
        .ok_or_else(|| Error::invalid("g2 curve", "curve is empty"))?;
    Ok(CurveResult {
        label,
        d1_position: x1,
        source_diameter: cfg.source_diameter,
        analytic_visibility: visibility(&analytic)?,
        analytic_visibility_limit: limit_visibility(x1, cfg)?,
        analytic,
        visibility: vis.map(|v| v.0),
        visibility_jackknife: vis.map(|v| v.1),
        argmax_position,
        max_abs_deviation,
        curve,
    })
}

fn singles_table(
    detector: u32,
    positions: &[f64],
    values: &[MeanWithError],
    rate: f64,
) -> SinglesTable {
    let r: Vec<f64> = values.iter().map(|v| v.mean * rate).collect();
    let e: Vec<f64> = values.iter().map(|v| v.stderr * rate).collect();
    let max_deviation_sigma = r
        .iter()
        .zip(&e)
        .map(|(r, e)| if *e > 0.0 { (r - rate).abs() / e } else { 0.0 })
        .fold(0.0, f64::max);
    SinglesTable {
        detector,
        positions: positions.to_vec(),
        rate: r,
        stderr: e,
        expected_rate: rate,
        max_deviation_sigma,
    }
}

fn coverage_notice(result: &mut RunResult, covered: bool, focal_spacing: f64) {
    if !covered {
        result.notices.push(format!(
            "detector aperture smaller than the focal sampling ({focal_spacing:e} m); nearest samples used"
        ));
    }
}

/// Monte Carlo D₂ scans for every D₁ position, with singles tables.
pub fn run_spatial_scan(spec: &ExperimentSpec) -> Result<RunResult> {
    require_kind(spec, ExperimentKind::SpatialScan)?;
    let cfg = spec.optics();
    let grid = spec.grid_for(cfg.source_diameter)?;
    let scan = spec.scan_positions()?;
    let ensemble = SpatialEnsemble::new(
        &cfg,
        &grid,
        &spec.ensemble(spec.seed),
        &spec.d1_positions,
        &scan,
    )?;
    let start = Instant::now();
    let est = ensemble.run()?;
    let mut result = RunResult::new(spec, MC_NORMALIZATION);
    let per_curve = start.elapsed().as_secs_f64() / spec.d1_positions.len() as f64;
    result.curve_runtime_s = vec![per_curve; spec.d1_positions.len()];
    let vis = est.visibility.iter().copied().zip(est.visibility_jackknife.iter().copied());
    for ((x1, curve), vis) in spec.d1_positions.iter().zip(est.curves).zip(vis) {
        result
            .curves
            .push(curve_result(mm_label("d1", *x1), *x1, &cfg, curve, Some(vis))?);
    }
    result.singles.push(singles_table(
        1,
        &spec.d1_positions,
        &est.singles_d1,
        spec.singles_rate_d1,
    ));
    result.singles.push(singles_table(
        2,
        &scan,
        &est.singles_d2,
        spec.singles_rate_d2,
    ));
    coverage_notice(&mut result, est.fully_covered, est.focal_spacing);
    Ok(result)
}

/// One Monte Carlo curve per source diameter, with width estimates.
pub fn run_source_size_scan(spec: &ExperimentSpec) -> Result<RunResult> {
    require_kind(spec, ExperimentKind::SourceSizeScan)?;
    let scan = spec.scan_positions()?;
    let x1 = spec.x1;
    let mut result = RunResult::new(spec, MC_NORMALIZATION);
    let half_power = fit::half_power_argument();
    for (i, &a) in spec.source_sizes.iter().enumerate() {
        let cfg = spec.optics().with_source_diameter(a);
        let grid = spec.grid_for(a)?;
        let settings = spec.ensemble(sub_seed(spec.seed, i as u64));
        let start = Instant::now();
        let est = SpatialEnsemble::new(&cfg, &grid, &settings, &[x1], &scan)?.run()?;
        result.curve_runtime_s.push(start.elapsed().as_secs_f64());
        coverage_notice(&mut result, est.fully_covered, est.focal_spacing);
        let vis = est.visibility.first().copied().zip(est.visibility_jackknife.first().copied());
        let curve = est
            .curves
            .into_iter()
            .next()
            .ok_or_else(|| Error::invalid("ensemble", "no curve produced"))?;
        let label = format!("a={:.1}um", a * 1e6);
        let cr = curve_result(label, x1, &cfg, curve, vis)?;
        let estimate = estimate_width(&cr.curve, x1)
            .ok_or_else(|| Error::invalid("width fit", "too few scan points"))?;
        let analytic_width = correlation_width(&cfg);
        result.widths.push(WidthResult {
            source_diameter: a,
            analytic_width,
            analytic_hwhm: half_power / cfg.bessel_argument_scale(),
            relative_error: estimate.fitted_first_zero / analytic_width - 1.0,
            estimate,
        });
        result.curves.push(cr);
    }
    let mut by_size = result.widths.clone();
    by_size.sort_by(|p, q| p.source_diameter.total_cmp(&q.source_diameter));
    result.widths_strictly_decreasing = Some(by_size.windows(2).all(|w| {
        w[1].source_diameter > w[0].source_diameter
            && w[1].estimate.fitted_first_zero < w[0].estimate.fitted_first_zero
    }));
    Ok(result)
}

/// Closed-form curves for every D₁ position.
pub fn analytic_curve(spec: &ExperimentSpec) -> Result<RunResult> {
    require_kind(spec, ExperimentKind::AnalyticCurve)?;
    let cfg = spec.optics();
    let scan = spec.scan_positions()?;
    let mut result = RunResult::new(spec, ANALYTIC_NORMALIZATION);
    for &x1 in &spec.d1_positions {
        let curve = spatial_curve(x1, &scan, &cfg);
        result
            .curves
            .push(curve_result(mm_label("d1", x1), x1, &cfg, curve, None)?);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_run_has_exact_overlay() {
        let spec = ExperimentSpec::for_kind(ExperimentKind::AnalyticCurve);
        let r = analytic_curve(&spec).unwrap();
        assert_eq!(r.curves.len(), 3);
        for c in &r.curves {
            assert_eq!(c.max_abs_deviation, 0.0);
            assert!((c.argmax_position - c.d1_position).abs() <= 0.05e-3 + 1e-12);
            assert!((c.analytic_visibility_limit - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let spec = ExperimentSpec::for_kind(ExperimentKind::AnalyticCurve);
        assert!(run_spatial_scan(&spec).is_err());
    }

    #[test]
    fn small_spatial_scan_is_deterministic() {
        let mut spec = ExperimentSpec::for_kind(ExperimentKind::SpatialScan);
        spec.realizations = 200;
        spec.scan = Some(vec![-1e-3, 0.0, 1e-3]);
        spec.d1_positions = vec![0.0];
        let a = run(&spec).unwrap();
        let b = run(&spec).unwrap();
        assert_eq!(a.curves, b.curves);
        assert_eq!(a.singles.len(), 2);
        assert_eq!(a.curves[0].argmax_position, 0.0);
    }
}
