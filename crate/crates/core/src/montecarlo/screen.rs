use std::f64::consts::PI;

use num_complex::Complex64;

use super::grid::{Illumination, SourceGrid};
use crate::analytic::OpticalConfig;
use crate::error::{Error, Result};
use crate::rng::GaussianLattice;

/// Lattice taps on each side of the evaluation point, in kernel widths.
pub(crate) const TRACK_TAPS: i64 = 4;

/// Gaussian interpolation kernel along a translating diffuser track.
///
/// The diffuser texture seen by each source cell is `Σ_j k(s − jΔ) g_j` with
/// i.i.d. complex Gaussians `g_j` on a lattice of spacing `Δ` and
/// `k(u) = exp(−u² / 2σ²)`, `Δ = σ`. The autocorrelation of the normalized
/// texture is `exp(−d² / 4σ²)` up to a lattice ripple below 1e-4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackKernel {
    pub sigma: f64,
}

impl TrackKernel {
    /// Kernel for an illuminated spot of diameter `spot`: `σ = spot / 2`.
    pub fn for_spot(spot: f64) -> Self {
        Self { sigma: 0.5 * spot }
    }

    pub fn spacing(&self) -> f64 {
        self.sigma
    }

    /// First lattice index and the normalized tap weights at track position `s`.
    pub fn taps(&self, s: f64) -> (i64, [f64; (2 * TRACK_TAPS + 1) as usize]) {
        let u = s / self.spacing();
        let centre = u.round() as i64;
        let first = centre - TRACK_TAPS;
        let mut w = [0.0; (2 * TRACK_TAPS + 1) as usize];
        let mut norm = 0.0;
        for (m, wm) in w.iter_mut().enumerate() {
            let d = u - (first + m as i64) as f64;
            *wm = (-0.5 * d * d).exp();
            norm += *wm * *wm;
        }
        let inv = 1.0 / norm.sqrt();
        w.iter_mut().for_each(|x| *x *= inv);
        (first, w)
    }
}

/// Track speed `v = spot · √(π/2) / τc`, giving `g1(τ) = exp(−π τ² / 2τc²)`.
pub fn track_speed(spot: f64, cfg: &OpticalConfig) -> f64 {
    spot * (0.5 * PI).sqrt() / cfg.coherence_time
}

/// Random complex field on the source plane.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeckleScreen {
    pub grid: SourceGrid,
    pub illumination: Illumination,
    /// Row-major `n × n`, row index along y.
    pub amplitudes: Vec<Complex64>,
    pub seed: u64,
    /// Track position of the diffuser [m].
    pub screen_offset: f64,
}

impl SpeckleScreen {
    pub fn amplitude(&self, i: usize, j: usize) -> Complex64 {
        self.amplitudes[j * self.grid.n + i]
    }

    pub fn power(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Multiplies every amplitude by `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.amplitudes.iter_mut().for_each(|z| *z *= c);
        out
    }

    /// Screen with given amplitudes on `grid` (used for deterministic test fields).
    pub fn from_amplitudes(grid: SourceGrid, amplitudes: Vec<Complex64>) -> Result<Self> {
        grid.validate()?;
        if amplitudes.len() != grid.n * grid.n {
            return Err(Error::invalid(
                "speckle screen",
                format!("expected {} amplitudes, got {}", grid.n * grid.n, amplitudes.len()),
            ));
        }
        Ok(Self {
            grid,
            illumination: Illumination::UniformDisc,
            amplitudes,
            seed: 0,
            screen_offset: 0.0,
        })
    }
}

/// Writes the aperture field at track position `offset` into `out`.
pub(crate) fn fill_screen(
    grid: &SourceGrid,
    cells: &[(usize, f64)],
    offset: f64,
    lattice: &mut GaussianLattice,
    out: &mut [Complex64],
) {
    let kernel = TrackKernel::for_spot(grid.aperture_diameter);
    let (first, w) = kernel.taps(offset);
    let mut g = [Complex64::new(0.0, 0.0); (2 * TRACK_TAPS + 1) as usize];
    debug_assert_eq!(out.len(), grid.n * grid.n);
    for &(idx, weight) in cells {
        lattice.fill(idx as u64, first, &mut g);
        let mut acc = Complex64::new(0.0, 0.0);
        for (z, wm) in g.iter().zip(w.iter()) {
            acc += z * *wm;
        }
        out[idx] = acc * weight;
    }
}

/// Circular-Gaussian screen at track position 0 with the uniform disc profile.
pub fn generate_screen(grid: &SourceGrid, seed: u64) -> Result<SpeckleScreen> {
    generate_screen_with(grid, Illumination::UniformDisc, seed)
}

pub fn generate_screen_with(
    grid: &SourceGrid,
    illumination: Illumination,
    seed: u64,
) -> Result<SpeckleScreen> {
    grid.validate()?;
    screen_at(grid, illumination, seed, 0.0)
}

fn screen_at(
    grid: &SourceGrid,
    illumination: Illumination,
    seed: u64,
    offset: f64,
) -> Result<SpeckleScreen> {
    let cells = grid.aperture_cells(illumination);
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); grid.n * grid.n];
    let mut lattice = GaussianLattice::new(seed);
    fill_screen(grid, &cells, offset, &mut lattice, &mut amplitudes);
    Ok(SpeckleScreen {
        grid: *grid,
        illumination,
        amplitudes,
        seed,
        screen_offset: offset,
    })
}

/// Translates the diffuser by `v·dt` and re-reads the aperture field.
///
/// Lattice values entering the kernel support are drawn from the same
/// `(seed, cell, lattice index)` addresses every time, so the result depends
/// only on the seed and the final offset.
pub fn evolve_screen(screen: &SpeckleScreen, dt: f64, cfg: &OpticalConfig) -> Result<SpeckleScreen> {
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(Error::invalid("evolve_screen", format!("dt = {dt} must be nonnegative")));
    }
    cfg.validate()?;
    if dt == 0.0 {
        return Ok(screen.clone());
    }
    let offset = screen.screen_offset + track_speed(screen.grid.aperture_diameter, cfg) * dt;
    screen_at(&screen.grid, screen.illumination, screen.seed, offset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::g1_temporal;

    fn grid() -> SourceGrid {
        SourceGrid::for_aperture(550e-6).unwrap()
    }

    #[test]
    fn deterministic_and_masked() {
        let g = grid();
        let a = generate_screen(&g, 42).unwrap();
        let b = generate_screen(&g, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_screen(&g, 43).unwrap());
        // corner is far outside the disc
        assert_eq!(a.amplitude(0, 0), Complex64::new(0.0, 0.0));
        assert_eq!(a.amplitude(g.n - 1, g.n / 2), Complex64::new(0.0, 0.0));
        assert_ne!(a.amplitude(g.n / 2, g.n / 2), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn tap_weights_unit_norm() {
        let k = TrackKernel::for_spot(1.0);
        for s in [0.0, 0.13, 0.5, -2.7] {
            let (_, w) = k.taps(s);
            let n: f64 = w.iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn kernel_autocorrelation_is_gaussian() {
        // exact lag correlation of the deterministic weights
        let k = TrackKernel::for_spot(1.0);
        for s0 in [0.0, 0.21, 0.37] {
            for d in [0.1, 0.5, 1.0, 1.5] {
                let (f0, w0) = k.taps(s0);
                let (f1, w1) = k.taps(s0 + d);
                let c: f64 = w0
                    .iter()
                    .enumerate()
                    .filter_map(|(m, a)| {
                        let idx = f0 + m as i64 - f1;
                        (0..w1.len() as i64).contains(&idx).then(|| a * w1[idx as usize])
                    })
                    .sum();
                let expect = (-d * d / (4.0 * k.sigma * k.sigma)).exp();
                assert!((c - expect).abs() < 2e-4, "s0={s0} d={d}: {c} vs {expect}");
            }
        }
    }

    #[test]
    fn evolve_zero_is_identity_and_negative_rejected() {
        let cfg = OpticalConfig::default();
        let s = generate_screen(&grid(), 5).unwrap();
        assert_eq!(evolve_screen(&s, 0.0, &cfg).unwrap(), s);
        assert!(evolve_screen(&s, -1e-9, &cfg).is_err());
    }

    #[test]
    fn evolve_composes() {
        let cfg = OpticalConfig::default();
        let s = generate_screen(&grid(), 9).unwrap();
        let two = evolve_screen(&evolve_screen(&s, 3e-7, &cfg).unwrap(), 4.5e-7, &cfg).unwrap();
        let one = evolve_screen(&s, 7.5e-7, &cfg).unwrap();
        assert!((two.screen_offset - one.screen_offset).abs() < 1e-18);
        let diff: f64 = two
            .amplitudes
            .iter()
            .zip(&one.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn field_autocorrelation_at_coherence_time() {
        let cfg = OpticalConfig::default();
        let g = grid();
        let tau = cfg.coherence_time;
        let (mut sum, mut sum2, mut count) = (0.0, 0.0, 0usize);
        for seed in 0..16u64 {
            let a = generate_screen(&g, seed).unwrap();
            let b = evolve_screen(&a, tau, &cfg).unwrap();
            for (x, y) in a.amplitudes.iter().zip(&b.amplitudes) {
                if x.norm_sqr() > 0.0 {
                    let c = (x * y.conj()).re;
                    sum += c;
                    sum2 += c * c;
                    count += 1;
                }
            }
        }
        let n = count as f64;
        let mean = sum / n;
        let sigma = ((sum2 / n - mean * mean) / n).sqrt();
        let expect = g1_temporal(tau, &cfg);
        assert!((expect - 0.2079).abs() < 1e-4);
        assert!((mean - expect).abs() < 3.0 * sigma, "{mean} vs {expect} ± {sigma}");
    }
}
