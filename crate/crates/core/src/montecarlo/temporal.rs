//! Time-resolved field at a pair of point detectors.
//!
//! Under the translating-track model each source cell reads
//! `U_c(t) = Σ_j k(t − jΔt) g_{c,j}`, so the field at a focal point is
//! `E(x, t) = Σ_j k(t − jΔt) G_j(x)` where `G_j(x) = Σ_c K(x, c) g_{c,j}` is
//! the far field of lattice slice `j`. For two detectors the slice fields
//! `(G_j(x1), G_j(x2))` are jointly circular Gaussian with the covariance of
//! the discrete aperture transform, so they are drawn directly from that 2×2
//! covariance instead of propagating one screen per slice.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{Illumination, SourceGrid};
use super::screen::TRACK_TAPS;
use crate::analytic::OpticalConfig;
use crate::error::{Error, Result};
use crate::rng::GaussianLattice;

/// Trace steps per slice spacing.
pub const STEPS_PER_SLICE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemporalModel {
    /// Gaussian `g1(τ) = exp(−π τ² / 2τc²)`.
    #[default]
    GaussianTrack,
    /// Per-cell Ornstein–Uhlenbeck field, `g1(τ) = exp(−|τ| / τc)`.
    OrnsteinUhlenbeck,
}

/// Normalized field correlation `⟨E(x1) E*(x2)⟩ / ⟨|E|²⟩` of the discrete
/// aperture transform between two on-axis-row points.
pub fn point_pair_correlation(
    grid: &SourceGrid,
    illumination: Illumination,
    cfg: &OpticalConfig,
    x1: f64,
    x2: f64,
) -> Complex64 {
    let k = TAU * (x1 - x2) / (cfg.wavelength * cfg.focal_length);
    let n = grid.n;
    let (mut num, mut den) = (Complex64::new(0.0, 0.0), 0.0);
    for (idx, w) in grid.aperture_cells(illumination) {
        let xi = grid.coordinate(idx % n);
        let p = w * w;
        num += Complex64::from_polar(p, -k * xi);
        den += p;
    }
    num / den
}

/// Slice spacing `Δt = τc / √(2π)` of the Gaussian track.
pub fn slice_spacing(cfg: &OpticalConfig) -> f64 {
    cfg.coherence_time / TAU.sqrt()
}

/// Generator of consecutive intensity samples at two detectors.
///
/// Intensities have unit ensemble mean. Sample `k` is taken at `k · step()`.
#[derive(Debug, Clone)]
pub struct PairFieldProcess {
    model: TemporalModel,
    rho: Complex64,
    orth: f64,
    dt: f64,
    decay: f64,
    /// Per phase: normalized tap weights.
    weights: Vec<[f64; (2 * TRACK_TAPS + 1) as usize]>,
    lattice: GaussianLattice,
    next: u64,
    ou_state: Option<(Complex64, Complex64)>,
    z1: Vec<Complex64>,
    z2: Vec<Complex64>,
}

impl PairFieldProcess {
    pub fn new(
        grid: &SourceGrid,
        illumination: Illumination,
        cfg: &OpticalConfig,
        x1: f64,
        x2: f64,
        model: TemporalModel,
        seed: u64,
    ) -> Result<Self> {
        grid.validate()?;
        cfg.validate()?;
        let rho = point_pair_correlation(grid, illumination, cfg, x1, x2);
        Ok(Self::from_correlation(rho, cfg, model, seed))
    }

    /// Process for a prescribed detector field correlation `rho` (`|rho| ≤ 1`).
    pub fn from_correlation(
        rho: Complex64,
        cfg: &OpticalConfig,
        model: TemporalModel,
        seed: u64,
    ) -> Self {
        let rho = if rho.norm() > 1.0 { rho / rho.norm() } else { rho };
        let dt = slice_spacing(cfg) / STEPS_PER_SLICE as f64;
        let weights = (0..STEPS_PER_SLICE)
            .map(|p| {
                let u = p as f64 / STEPS_PER_SLICE as f64;
                let mut w = [0.0; (2 * TRACK_TAPS + 1) as usize];
                for (m, wm) in w.iter_mut().enumerate() {
                    let d = u - (m as f64 - TRACK_TAPS as f64);
                    *wm = (-0.5 * d * d).exp();
                }
                let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                w.iter_mut().for_each(|x| *x /= norm);
                w
            })
            .collect();
        Self {
            model,
            rho,
            orth: (1.0 - rho.norm_sqr()).max(0.0).sqrt(),
            dt,
            decay: (-dt / cfg.coherence_time).exp(),
            weights,
            lattice: GaussianLattice::new(seed),
            next: 0,
            ou_state: None,
            z1: Vec::new(),
            z2: Vec::new(),
        }
    }

    pub fn step(&self) -> f64 {
        self.dt
    }

    pub fn correlation(&self) -> Complex64 {
        self.rho
    }

    /// Index of the next sample to be produced.
    pub fn position(&self) -> u64 {
        self.next
    }

    /// Moves the Gaussian-track process to sample `position`.
    pub fn seek(&mut self, position: u64) -> Result<()> {
        if self.model != TemporalModel::GaussianTrack && position != self.next {
            return Err(Error::invalid(
                "temporal model",
                "only the Gaussian track supports random access",
            ));
        }
        self.next = position;
        Ok(())
    }

    fn pair(&self, a: Complex64, b: Complex64) -> (Complex64, Complex64) {
        (a, self.rho.conj() * a + b * self.orth)
    }

    /// Next `e1.len()` field samples at both detectors.
    pub fn fill_fields(&mut self, e1: &mut [Complex64], e2: &mut [Complex64]) {
        assert_eq!(e1.len(), e2.len());
        let len = e1.len();
        if len == 0 {
            return;
        }
        let start = self.next;
        match self.model {
            TemporalModel::GaussianTrack => {
                let p = STEPS_PER_SLICE as u64;
                let first_slice = (start / p) as i64 - TRACK_TAPS;
                let last_slice = ((start + len as u64 - 1) / p) as i64 + TRACK_TAPS;
                let count = (last_slice - first_slice + 1) as usize;
                self.z1.resize(count, Complex64::new(0.0, 0.0));
                self.z2.resize(count, Complex64::new(0.0, 0.0));
                self.lattice.fill(0, first_slice, &mut self.z1);
                self.lattice.fill(1, first_slice, &mut self.z2);
                for (z1, z2) in self.z1.iter_mut().zip(self.z2.iter_mut()) {
                    let (a, b) = (*z1, *z2);
                    let (g1, g2) = (a, self.rho.conj() * a + b * self.orth);
                    *z1 = g1;
                    *z2 = g2;
                }
                for (k, (o1, o2)) in e1.iter_mut().zip(e2.iter_mut()).enumerate() {
                    let idx = start + k as u64;
                    let base = (idx / p) as i64 - TRACK_TAPS - first_slice;
                    let w = &self.weights[(idx % p) as usize];
                    let mut a = Complex64::new(0.0, 0.0);
                    let mut b = Complex64::new(0.0, 0.0);
                    for (m, wm) in w.iter().enumerate() {
                        let s = base as usize + m;
                        a += self.z1[s] * *wm;
                        b += self.z2[s] * *wm;
                    }
                    *o1 = a;
                    *o2 = b;
                }
            }
            TemporalModel::OrnsteinUhlenbeck => {
                let mut state = match self.ou_state {
                    Some(s) => s,
                    None => {
                        let a = self.lattice.sample(0, -1);
                        let b = self.lattice.sample(1, -1);
                        self.pair(a, b)
                    }
                };
                let kick = (1.0 - self.decay * self.decay).sqrt();
                self.z1.resize(len, Complex64::new(0.0, 0.0));
                self.z2.resize(len, Complex64::new(0.0, 0.0));
                self.lattice.fill(0, start as i64, &mut self.z1);
                self.lattice.fill(1, start as i64, &mut self.z2);
                for k in 0..len {
                    let (n1, n2) = self.pair(self.z1[k], self.z2[k]);
                    state = (
                        state.0 * self.decay + n1 * kick,
                        state.1 * self.decay + n2 * kick,
                    );
                    e1[k] = state.0;
                    e2[k] = state.1;
                }
                self.ou_state = Some(state);
            }
        }
        self.next += len as u64;
    }

    /// Next `i1.len()` intensity samples at both detectors.
    pub fn fill_intensities(&mut self, i1: &mut [f64], i2: &mut [f64]) {
        let mut e1 = vec![Complex64::new(0.0, 0.0); i1.len()];
        let mut e2 = vec![Complex64::new(0.0, 0.0); i2.len()];
        self.fill_fields(&mut e1, &mut e2);
        for (d, z) in i1.iter_mut().zip(&e1) {
            *d = z.norm_sqr();
        }
        for (d, z) in i2.iter_mut().zip(&e2) {
            *d = z.norm_sqr();
        }
    }
}

/// Field autocorrelation of a model at lag `tau`.
pub fn model_g1(model: TemporalModel, tau: f64, cfg: &OpticalConfig) -> f64 {
    let r = tau.abs() / cfg.coherence_time;
    match model {
        TemporalModel::GaussianTrack => (-0.5 * PI * r * r).exp(),
        TemporalModel::OrnsteinUhlenbeck => (-r).exp(),
    }
}

/// Checks the trace step against the `τc / 50` bound.
pub fn check_step(dt: f64, cfg: &OpticalConfig) -> Result<()> {
    if dt > cfg.coherence_time / 50.0 * (1.0 + 1e-12) {
        return Err(Error::invalid(
            "trace step",
            format!("step {dt:e} s exceeds coherence_time / 50"),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{coherence_factor, correlation_width};

    fn cfg() -> OpticalConfig {
        OpticalConfig::default()
    }

    #[test]
    fn step_is_fine_enough() {
        let p = PairFieldProcess::from_correlation(Complex64::new(1.0, 0.0), &cfg(), Default::default(), 1);
        check_step(p.step(), &cfg()).unwrap();
        assert!(check_step(cfg().coherence_time / 10.0, &cfg()).is_err());
    }

    #[test]
    fn discrete_correlation_tracks_airy() {
        let c = cfg();
        let g = SourceGrid::for_aperture(c.source_diameter).unwrap();
        let w = correlation_width(&c);
        for dx in [0.0, 0.25 * w, 0.5 * w, w, 1.5 * w] {
            let rho = point_pair_correlation(&g, Illumination::UniformDisc, &c, dx, 0.0);
            assert!((rho.norm() - coherence_factor(dx, &c).abs()).abs() < 0.01, "dx={dx}");
        }
    }

    #[test]
    fn chunking_does_not_change_the_trace() {
        let c = cfg();
        for model in [TemporalModel::GaussianTrack, TemporalModel::OrnsteinUhlenbeck] {
            let rho = Complex64::new(0.6, 0.2);
            let mut a = PairFieldProcess::from_correlation(rho, &c, model, 7);
            let mut b = a.clone();
            let (mut x1, mut x2) = (vec![0.0; 300], vec![0.0; 300]);
            a.fill_intensities(&mut x1, &mut x2);
            let (mut y1, mut y2) = (vec![0.0; 300], vec![0.0; 300]);
            let (h1, t1) = y1.split_at_mut(113);
            let (h2, t2) = y2.split_at_mut(113);
            b.fill_intensities(h1, h2);
            b.fill_intensities(t1, t2);
            assert_eq!(x1, y1);
            assert_eq!(x2, y2);
        }
    }

    #[test]
    fn autocorrelation_matches_model() {
        let c = cfg();
        for model in [TemporalModel::GaussianTrack, TemporalModel::OrnsteinUhlenbeck] {
            let mut p = PairFieldProcess::from_correlation(Complex64::new(1.0, 0.0), &c, model, 21);
            let len = 400_000;
            let mut e1 = vec![Complex64::new(0.0, 0.0); len];
            let mut e2 = vec![Complex64::new(0.0, 0.0); len];
            p.fill_fields(&mut e1, &mut e2);
            let lag = (c.coherence_time / p.step()).round() as usize;
            let tau = lag as f64 * p.step();
            let n = (len - lag) as f64;
            let acf: f64 = (0..len - lag).map(|k| (e1[k] * e1[k + lag].conj()).re).sum::<f64>() / n;
            let power: f64 = e1.iter().map(|z| z.norm_sqr()).sum::<f64>() / len as f64;
            let expect = model_g1(model, tau, &c);
            // about 8000 coherence times: statistical spread near 1%
            assert!((acf - expect).abs() < 0.05, "{model:?}: {acf} vs {expect}");
            assert!((power - 1.0).abs() < 0.05);
            // identical detectors see identical fields
            assert_eq!(e1, e2);
        }
    }
}
