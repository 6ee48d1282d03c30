use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytic::{
    OpticalConfig, DEFAULT_COHERENCE_TIME, DEFAULT_FOCAL_LENGTH, DEFAULT_SOURCE_DIAMETER,
    DEFAULT_WAVELENGTH, SOURCE_SIZES,
};
use crate::counting::{CoincidenceConfig, DetectorModel};
use crate::error::{Error, Result};
use crate::montecarlo::ensemble::{DEFAULT_BATCHES, DEFAULT_MAX_FOCAL_SPACING, MIN_REALIZATIONS};
use crate::montecarlo::grid::{DEFAULT_CELLS_ACROSS, DEFAULT_GRID_SIZE};
use crate::montecarlo::{
    EnsembleConfig, Illumination, SourceGrid, TemporalModel, DEFAULT_DETECTOR_APERTURE,
};

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_REALIZATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    TemporalHistogram,
    #[default]
    SpatialScan,
    SourceSizeScan,
    AnalyticCurve,
    OracleCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::TemporalHistogram => "temporal-histogram",
            Self::SpatialScan => "spatial-scan",
            Self::SourceSizeScan => "source-size-scan",
            Self::AnalyticCurve => "analytic-curve",
            Self::OracleCheck => "oracle-check",
        }
    }

    pub fn is_monte_carlo(self) -> bool {
        matches!(self, Self::SpatialScan | Self::SourceSizeScan)
    }

    fn uses_scan(self) -> bool {
        matches!(
            self,
            Self::SpatialScan | Self::SourceSizeScan | Self::AnalyticCurve
        )
    }
}

/// Every knob of a run, as a flat key set.
///
/// Lengths are in metres, times in seconds, rates in counts per second.
/// Scan positions are `scan_start + k·scan_step` up to `scan_stop`, rounded to
/// 1 nm, unless an explicit `scan` list is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub realizations: usize,
    pub batches: usize,

    pub wavelength: f64,
    pub focal_length: f64,
    pub source_diameter: f64,
    pub coherence_time: f64,

    pub grid_size: usize,
    /// Source cells across the aperture diameter.
    pub cells_across: f64,
    pub illumination: Illumination,
    pub detector_aperture: f64,
    pub max_focal_spacing: f64,

    pub efficiency_d1: f64,
    pub singles_rate_d1: f64,
    pub dark_rate_d1: f64,
    pub dead_time_d1: f64,
    pub efficiency_d2: f64,
    pub singles_rate_d2: f64,
    pub dark_rate_d2: f64,
    pub dead_time_d2: f64,

    pub window: f64,
    pub channel_width: f64,
    pub histogram_range: f64,
    pub acquisition_time: f64,

    pub scan_start: f64,
    pub scan_stop: f64,
    pub scan_step: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<Vec<f64>>,
    /// D₁ positions of the spatial scan.
    pub d1_positions: Vec<f64>,
    /// Source diameters of the size scan.
    pub source_sizes: Vec<f64>,
    /// D₁ position for the size scan and the temporal histogram.
    pub x1: f64,
    /// D₂ position for the temporal histogram.
    pub x2: f64,
    pub temporal_model: TemporalModel,
    /// Also write both event streams of a temporal run.
    pub write_events: bool,

    pub oracle_means: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_n_max: Option<usize>,
    pub oracle_tolerance: f64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let det = DetectorModel::default();
        let co = CoincidenceConfig::default();
        Self {
            kind: ExperimentKind::default(),
            seed: DEFAULT_SEED,
            realizations: DEFAULT_REALIZATIONS,
            batches: DEFAULT_BATCHES,
            wavelength: DEFAULT_WAVELENGTH,
            focal_length: DEFAULT_FOCAL_LENGTH,
            source_diameter: DEFAULT_SOURCE_DIAMETER,
            coherence_time: DEFAULT_COHERENCE_TIME,
            grid_size: DEFAULT_GRID_SIZE,
            cells_across: DEFAULT_CELLS_ACROSS,
            illumination: Illumination::default(),
            detector_aperture: DEFAULT_DETECTOR_APERTURE,
            max_focal_spacing: DEFAULT_MAX_FOCAL_SPACING,
            efficiency_d1: det.efficiency,
            singles_rate_d1: det.mean_singles_rate,
            dark_rate_d1: det.dark_rate,
            dead_time_d1: det.dead_time,
            efficiency_d2: det.efficiency,
            singles_rate_d2: det.mean_singles_rate,
            dark_rate_d2: det.dark_rate,
            dead_time_d2: det.dead_time,
            window: co.window,
            channel_width: co.channel_width,
            histogram_range: co.histogram_range,
            acquisition_time: co.acquisition_time,
            scan_start: -4e-3,
            scan_stop: 4e-3,
            scan_step: 0.1e-3,
            scan: None,
            d1_positions: vec![-1.75e-3, 0.0, 1.75e-3],
            source_sizes: SOURCE_SIZES.to_vec(),
            x1: 0.0,
            x2: 0.0,
            temporal_model: TemporalModel::default(),
            write_events: false,
            oracle_means: vec![1.0, 0.5, 0.1],
            oracle_n_max: None,
            oracle_tolerance: 1e-6,
        }
    }
}

const MAX_SCAN_POINTS: f64 = 1e6;

impl ExperimentSpec {
    pub fn for_kind(kind: ExperimentKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            context: "experiment config".into(),
            reason: e.to_string(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            context: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    pub fn optics(&self) -> OpticalConfig {
        OpticalConfig {
            wavelength: self.wavelength,
            source_diameter: self.source_diameter,
            focal_length: self.focal_length,
            coherence_time: self.coherence_time,
        }
    }

    pub fn grid_for(&self, source_diameter: f64) -> Result<SourceGrid> {
        SourceGrid::new(
            self.grid_size,
            source_diameter / self.cells_across,
            source_diameter,
        )
    }

    pub fn detector(&self, which: usize) -> DetectorModel {
        if which == 1 {
            DetectorModel {
                efficiency: self.efficiency_d1,
                mean_singles_rate: self.singles_rate_d1,
                dark_rate: self.dark_rate_d1,
                dead_time: self.dead_time_d1,
            }
        } else {
            DetectorModel {
                efficiency: self.efficiency_d2,
                mean_singles_rate: self.singles_rate_d2,
                dark_rate: self.dark_rate_d2,
                dead_time: self.dead_time_d2,
            }
        }
    }

    pub fn coincidence(&self) -> CoincidenceConfig {
        CoincidenceConfig {
            window: self.window,
            channel_width: self.channel_width,
            histogram_range: self.histogram_range,
            acquisition_time: self.acquisition_time,
        }
    }

    pub fn ensemble(&self, seed: u64) -> EnsembleConfig {
        EnsembleConfig {
            realizations: self.realizations,
            batches: self.batches,
            seed,
            detector_aperture: self.detector_aperture,
            max_focal_spacing: self.max_focal_spacing,
            illumination: self.illumination,
        }
    }

    /// D₂ positions.
    pub fn scan_positions(&self) -> Result<Vec<f64>> {
        if let Some(list) = &self.scan {
            return Ok(list.clone());
        }
        let (a, b, h) = (self.scan_start, self.scan_stop, self.scan_step);
        if !(a.is_finite() && b.is_finite() && h > 0.0 && b >= a) {
            return Err(Error::invalid(
                "scan",
                "need finite scan_start <= scan_stop and scan_step > 0",
            ));
        }
        let steps = ((b - a) / h + 1e-9).floor();
        if steps + 1.0 > MAX_SCAN_POINTS {
            return Err(Error::invalid("scan", "too many scan points"));
        }
        Ok((0..=steps as usize)
            .map(|k| ((a + k as f64 * h) * 1e9).round() / 1e9)
            .collect())
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = self.optics();
        cfg.validate()?;
        match self.kind {
            ExperimentKind::OracleCheck => {
                if self.oracle_means.is_empty() {
                    return Err(Error::invalid("oracle_means", "at least one mode is required"));
                }
                if !(self.oracle_tolerance > 0.0) {
                    return Err(Error::invalid("oracle_tolerance", "must be positive"));
                }
                return Ok(());
            }
            ExperimentKind::AnalyticCurve => {}
            ExperimentKind::TemporalHistogram => {
                self.coincidence().validate()?;
                self.detector(1).validate()?;
                self.detector(2).validate()?;
                self.grid_for(self.source_diameter)?;
            }
            ExperimentKind::SpatialScan | ExperimentKind::SourceSizeScan => {
                if self.realizations < MIN_REALIZATIONS {
                    return Err(Error::invalid(
                        "realizations",
                        format!("at least {MIN_REALIZATIONS} required for Monte Carlo runs"),
                    ));
                }
                self.ensemble(self.seed).validate()?;
                self.detector(1).validate()?;
                self.detector(2).validate()?;
            }
        }
        if self.kind.uses_scan() && self.scan_positions()?.is_empty() {
            return Err(Error::invalid("scan", "scan must not be empty"));
        }
        if let Some(x) = self.scan_positions()?.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid("scan", format!("non-finite position {x}")));
        }
        match self.kind {
            ExperimentKind::SpatialScan | ExperimentKind::AnalyticCurve => {
                if self.d1_positions.is_empty() {
                    return Err(Error::invalid("d1_positions", "must not be empty"));
                }
                self.grid_for(self.source_diameter)?;
            }
            ExperimentKind::SourceSizeScan => {
                if self.source_sizes.is_empty() {
                    return Err(Error::invalid("source_sizes", "must not be empty"));
                }
                for &a in &self.source_sizes {
                    cfg.with_source_diameter(a).validate()?;
                    self.grid_for(a)?;
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scan_has_81_points() {
        let s = ExperimentSpec::default();
        let x = s.scan_positions().unwrap();
        assert_eq!(x.len(), 81);
        assert_eq!(x[0], -4e-3);
        assert_eq!(x[40], 0.0);
        assert_eq!(x[80], 4e-3);
        assert_eq!(x[57], 1.7e-3);
    }

    #[test]
    fn defaults_validate_for_every_kind() {
        for kind in [
            ExperimentKind::TemporalHistogram,
            ExperimentKind::SpatialScan,
            ExperimentKind::SourceSizeScan,
            ExperimentKind::AnalyticCurve,
            ExperimentKind::OracleCheck,
        ] {
            ExperimentSpec::for_kind(kind).validate().unwrap();
        }
    }

    #[test]
    fn toml_overrides_and_rejects_unknown_keys() {
        let s = ExperimentSpec::from_toml_str(
            "kind = \"source-size-scan\"\nrealizations = 500\nsource_sizes = [2e-4]\n",
        )
        .unwrap();
        assert_eq!(s.kind, ExperimentKind::SourceSizeScan);
        assert_eq!(s.realizations, 500);
        assert_eq!(s.wavelength, DEFAULT_WAVELENGTH);
        assert!(ExperimentSpec::from_toml_str("wavelenght = 1e-6\n").is_err());
    }

    #[test]
    fn invalid_specs() {
        let mut s = ExperimentSpec::for_kind(ExperimentKind::SpatialScan);
        s.realizations = 50;
        assert!(s.validate().is_err());
        let mut s = ExperimentSpec::for_kind(ExperimentKind::SpatialScan);
        s.scan = Some(vec![]);
        assert!(s.validate().is_err());
        let mut s = ExperimentSpec::for_kind(ExperimentKind::TemporalHistogram);
        s.histogram_range = 1e-7;
        assert!(s.validate().is_err());
        let mut s = ExperimentSpec::for_kind(ExperimentKind::SpatialScan);
        s.scan_step = 0.0;
        assert!(s.validate().is_err());
    }
}
