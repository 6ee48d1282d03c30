//! Closed-form reference curves for thermal-light intensity correlations.
//!
//! For a uniformly bright circular source of diameter `a` imaged through a lens
//! of focal length `f`, the normalized intensity correlation between two
//! focal-plane points separated by `Δx` is
//!
//! ```text
//! g2(Δx) = 1 + μ(Δx)²,   μ(Δx) = 2 J1(v) / v,   v = π a Δx / (λ f)
//! ```
//!
//! The temporal envelope is Gaussian, `g1(τ) = exp(−π τ² / 2τc²)`, normalized so
//! that `∫ |g1|² dτ = τc`. Space and time are assumed to factorize.

mod bessel;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

pub use bessel::{airy_amplitude, bessel_j1, J1_FIRST_ZERO};

use crate::error::{Error, Result};

/// He–Ne line.
pub const DEFAULT_WAVELENGTH: f64 = 632.8e-9;
pub const DEFAULT_FOCAL_LENGTH: f64 = 0.75;
pub const DEFAULT_SOURCE_DIAMETER: f64 = 550e-6;
pub const DEFAULT_COHERENCE_TIME: f64 = 1e-6;
/// Source diameters of the source-size scan.
pub const SOURCE_SIZES: [f64; 4] = [150e-6, 350e-6, 550e-6, 1100e-6];

/// Source and imaging geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalConfig {
    /// [m]
    pub wavelength: f64,
    /// [m]
    pub source_diameter: f64,
    /// [m]
    pub focal_length: f64,
    /// [s]
    pub coherence_time: f64,
}

impl Default for OpticalConfig {
    fn default() -> Self {
        Self {
            wavelength: DEFAULT_WAVELENGTH,
            source_diameter: DEFAULT_SOURCE_DIAMETER,
            focal_length: DEFAULT_FOCAL_LENGTH,
            coherence_time: DEFAULT_COHERENCE_TIME,
        }
    }
}

impl OpticalConfig {
    pub fn with_source_diameter(mut self, a: f64) -> Self {
        self.source_diameter = a;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("wavelength", self.wavelength),
            ("source_diameter", self.source_diameter),
            ("focal_length", self.focal_length),
            ("coherence_time", self.coherence_time),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(
                    "optical config",
                    format!("{name} must be finite and strictly positive, got {value}"),
                ));
            }
        }
        if self.wavelength >= self.source_diameter / 10.0 {
            return Err(Error::invalid(
                "optical config",
                "paraxial regime requires wavelength < source_diameter / 10",
            ));
        }
        Ok(())
    }

    /// `v` per metre of focal-plane separation, `π a / (λ f)`.
    pub fn bessel_argument_scale(&self) -> f64 {
        PI * self.source_diameter / (self.wavelength * self.focal_length)
    }
}

/// A sampled correlation curve with per-point standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G2Curve {
    pub abscissa: Vec<f64>,
    pub g2: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl G2Curve {
    pub fn new(abscissa: Vec<f64>, g2: Vec<f64>, stderr: Vec<f64>) -> Result<Self> {
        let curve = Self {
            abscissa,
            g2,
            stderr,
        };
        curve.validate()?;
        Ok(curve)
    }

    /// Curve with zero error bars.
    pub fn exact(abscissa: Vec<f64>, g2: Vec<f64>) -> Result<Self> {
        let n = g2.len();
        Self::new(abscissa, g2, vec![0.0; n])
    }

    pub fn validate(&self) -> Result<()> {
        if self.abscissa.len() != self.g2.len() || self.g2.len() != self.stderr.len() {
            return Err(Error::invalid(
                "g2 curve",
                format!(
                    "length mismatch: {} abscissa, {} g2, {} stderr",
                    self.abscissa.len(),
                    self.g2.len(),
                    self.stderr.len()
                ),
            ));
        }
        if self.g2.iter().any(|g| g.is_nan() || *g < 0.0) {
            return Err(Error::invalid("g2 curve", "g2 values must be nonnegative"));
        }
        if self.stderr.iter().any(|s| s.is_nan() || *s < 0.0) {
            return Err(Error::invalid("g2 curve", "stderr values must be nonnegative"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.g2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g2.is_empty()
    }

    /// Index of the largest g2 value (first one on ties).
    pub fn argmax(&self) -> Option<usize> {
        self.g2
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (i, &g)| match best {
                Some((_, b)) if b >= g => best,
                _ => Some((i, g)),
            })
            .map(|(i, _)| i)
    }
}

/// Spatial coherence factor `μ(Δx) = 2 J1(v)/v`, `v = π a |Δx| / (λ f)`.
pub fn coherence_factor(dx: f64, cfg: &OpticalConfig) -> f64 {
    airy_amplitude(cfg.bessel_argument_scale() * dx.abs())
}

/// `1 + μ(|x1 − x2|)²`.
pub fn g2_spatial(x1: f64, x2: f64, cfg: &OpticalConfig) -> f64 {
    let mu = coherence_factor(x1 - x2, cfg);
    1.0 + mu * mu
}

/// Gaussian temporal envelope `exp(−π τ² / 2τc²)`.
pub fn g1_temporal(tau: f64, cfg: &OpticalConfig) -> f64 {
    let r = tau / cfg.coherence_time;
    (-0.5 * PI * r * r).exp()
}

/// `1 + μ(Δx)² g1(τ)²`.
pub fn g2_spatiotemporal(dx: f64, tau: f64, cfg: &OpticalConfig) -> f64 {
    let mu = coherence_factor(dx, cfg);
    let g1 = g1_temporal(tau, cfg);
    1.0 + mu * mu * g1 * g1
}

/// Mean of `g1(τ)²` over `[lo, hi]`, via `∫ exp(−πτ²/τc²) dτ = (τc/2) erf(√π τ/τc)`.
pub fn g1_squared_interval_mean(lo: f64, hi: f64, cfg: &OpticalConfig) -> f64 {
    let tc = cfg.coherence_time;
    if hi <= lo {
        let g = g1_temporal(lo, cfg);
        return g * g;
    }
    let s = PI.sqrt() / tc;
    let integral = 0.5 * tc * (erf(s * hi) - erf(s * lo));
    integral / (hi - lo)
}

/// Excess-term reduction `(1/T_w) ∫_{−T_w/2}^{T_w/2} g1(τ)² dτ` for a centred window.
pub fn window_reduction(window: f64, cfg: &OpticalConfig) -> f64 {
    g1_squared_interval_mean(-0.5 * window, 0.5 * window, cfg)
}

/// Expected windowed g2 for detectors `dx` apart and a centred window `T_w`.
pub fn g2_window_averaged(dx: f64, window: f64, cfg: &OpticalConfig) -> f64 {
    let mu = coherence_factor(dx, cfg);
    1.0 + mu * mu * window_reduction(window, cfg)
}

/// `(max − min) / (max + min)` of the curve's g2 values.
pub fn visibility(curve: &G2Curve) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::invalid("visibility", "curve is empty"));
    }
    if curve.g2.iter().any(|g| !g.is_finite()) {
        return Err(Error::invalid("visibility", "curve contains non-finite g2"));
    }
    let max = curve.g2.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = curve.g2.iter().copied().fold(f64::INFINITY, f64::min);
    if max + min == 0.0 {
        return Err(Error::DivisionByZero("visibility (max + min = 0)"));
    }
    Ok((max - min) / (max + min))
}

/// First zero of `μ`: `3.8317 λ f / (π a)`.
pub fn correlation_width(cfg: &OpticalConfig) -> f64 {
    J1_FIRST_ZERO / cfg.bessel_argument_scale()
}

/// Point-detector reference curve `g2_spatial(x1, x2)` over a D₂ scan.
pub fn spatial_curve(x1: f64, scan: &[f64], cfg: &OpticalConfig) -> G2Curve {
    let g2 = scan.iter().map(|&x2| g2_spatial(x1, x2, cfg)).collect();
    G2Curve {
        abscissa: scan.to_vec(),
        g2,
        stderr: vec![0.0; scan.len()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> OpticalConfig {
        OpticalConfig::default()
    }

    #[test]
    fn coherence_factor_examples() {
        let c = cfg();
        assert_eq!(coherence_factor(0.0, &c), 1.0);
        let zero = J1_FIRST_ZERO * c.wavelength * c.focal_length / (PI * c.source_diameter);
        assert!(coherence_factor(zero, &c).abs() < 1e-8);
        assert!((zero - 1.0525e-3).abs() < 1e-7);
        assert!(coherence_factor(zero, &c).abs() < 1e-6);
    }

    #[test]
    fn g2_spatial_examples() {
        let c = cfg();
        assert_eq!(g2_spatial(1e-3, 1e-3, &c), 2.0);
        assert_eq!(g2_spatial(-1.75e-3, -1.75e-3, &c), 2.0);
        let w = correlation_width(&c);
        assert!((g2_spatial(0.0, w, &c) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn temporal_examples() {
        let c = cfg();
        assert_eq!(g1_temporal(0.0, &c), 1.0);
        assert_eq!(g1_temporal(1.0, &c), 0.0);
        assert!((g1_temporal(c.coherence_time, &c) - (-PI / 2.0).exp()).abs() < 1e-15);
        assert!((g1_temporal(c.coherence_time, &c) - 0.2079).abs() < 1e-4);
        assert_eq!(g1_temporal(-3e-7, &c), g1_temporal(3e-7, &c));
    }

    #[test]
    fn spatiotemporal_examples() {
        let c = cfg();
        assert_eq!(g2_spatiotemporal(0.0, 0.0, &c), 2.0);
        let w = correlation_width(&c);
        for tau in [0.0, 3e-7, 5e-6] {
            assert!((g2_spatiotemporal(w, tau, &c) - 1.0).abs() < 1e-12);
        }
        let v = g2_spatiotemporal(0.0, c.coherence_time, &c);
        assert!((v - (1.0 + (-PI).exp())).abs() < 1e-14);
        assert!((v - 1.0432).abs() < 1e-4);
    }

    #[test]
    fn visibility_examples() {
        let flat = G2Curve::exact(vec![0.0, 1.0, 2.0], vec![1.0; 3]).unwrap();
        assert_eq!(visibility(&flat).unwrap(), 0.0);
        let two = G2Curve::exact(vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        assert!((visibility(&two).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let empty = G2Curve::exact(vec![], vec![]).unwrap();
        assert!(visibility(&empty).is_err());
        let zeros = G2Curve::exact(vec![0.0], vec![0.0]).unwrap();
        assert!(matches!(visibility(&zeros), Err(Error::DivisionByZero(_))));
    }

    #[test]
    fn width_examples() {
        let c = cfg().with_source_diameter(1100e-6);
        assert!((correlation_width(&c) / 5.26e-4 - 1.0).abs() < 0.01);
        let c2 = cfg().with_source_diameter(2200e-6);
        assert!((correlation_width(&c) / correlation_width(&c2) - 2.0).abs() < 1e-12);
        assert!((correlation_width(&cfg()) / 1.052e-3 - 1.0).abs() < 0.01);
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        let mut c = cfg();
        c.wavelength = 1e-4;
        assert!(c.validate().is_err());
        c = cfg();
        c.coherence_time = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn curve_validation() {
        assert!(G2Curve::new(vec![0.0], vec![1.0, 2.0], vec![0.0]).is_err());
        assert!(G2Curve::new(vec![0.0], vec![-1.0], vec![0.0]).is_err());
        assert!(G2Curve::new(vec![0.0], vec![1.0], vec![-0.1]).is_err());
    }

    #[test]
    fn window_reduction_limits() {
        let c = cfg();
        assert!((window_reduction(1e-12, &c) - 1.0).abs() < 1e-9);
        assert!(window_reduction(600e-9, &c) < 1.0);
        // window ≫ τc: ∫ g1² = τc
        assert!((window_reduction(1.0, &c) - c.coherence_time).abs() < 1e-15);
    }
}
