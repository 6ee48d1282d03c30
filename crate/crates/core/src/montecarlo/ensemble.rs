//! Ensemble estimation of spatial intensity correlations.
//!
//! Realization `r` draws its screen from `sub_seed(seed, r)` alone, and
//! realizations are grouped into contiguous batches. Batches run in parallel;
//! each one accumulates sequentially with compensated sums, and batch totals
//! are merged in index order, so the estimate is a pure function of
//! `(seed, realizations, config)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::detector::{footprint, Footprint, DEFAULT_DETECTOR_APERTURE};
use super::grid::{Illumination, SourceGrid};
use super::propagate::StripProjector;
use super::screen::{fill_screen, SpeckleScreen};
use crate::analytic::{visibility, G2Curve, OpticalConfig};
use crate::error::{Error, Result};
use crate::rng::{sub_seed, GaussianLattice};

pub const MIN_REALIZATIONS: usize = 100;
pub const MIN_BATCHES: usize = 10;
pub const DEFAULT_BATCHES: usize = 20;
/// Upper bound on the focal-plane sample spacing.
pub const DEFAULT_MAX_FOCAL_SPACING: f64 = 10e-6;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.carry);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Per-batch sums of singles and products.
#[derive(Debug, Clone, PartialEq)]
pub struct PairAccumulator {
    pub count: usize,
    pub d1: Vec<CompensatedSum>,
    pub d2: Vec<CompensatedSum>,
    /// Row-major over `(d1 position, scan point)`.
    pub products: Vec<CompensatedSum>,
}

impl PairAccumulator {
    pub fn new(d1_len: usize, scan_len: usize) -> Self {
        Self {
            count: 0,
            d1: vec![CompensatedSum::default(); d1_len],
            d2: vec![CompensatedSum::default(); scan_len],
            products: vec![CompensatedSum::default(); d1_len * scan_len],
        }
    }

    pub fn record(&mut self, i1: &[f64], i2: &[f64]) {
        self.count += 1;
        for (s, &v) in self.d1.iter_mut().zip(i1) {
            s.add(v);
        }
        for (s, &v) in self.d2.iter_mut().zip(i2) {
            s.add(v);
        }
        let m = i2.len();
        for (a, &v1) in i1.iter().enumerate() {
            for (b, &v2) in i2.iter().enumerate() {
                self.products[a * m + b].add(v1 * v2);
            }
        }
    }

    pub fn merge(&mut self, other: &PairAccumulator) {
        self.count += other.count;
        for (a, b) in self.d1.iter_mut().zip(&other.d1) {
            a.merge(b);
        }
        for (a, b) in self.d2.iter_mut().zip(&other.d2) {
            a.merge(b);
        }
        for (a, b) in self.products.iter_mut().zip(&other.products) {
            a.merge(b);
        }
    }

    /// `⟨I1 I2⟩ / (⟨I1⟩⟨I2⟩)` for D₁ position `a`.
    pub fn g2_row(&self, a: usize) -> Vec<f64> {
        let n = self.count as f64;
        let m1 = self.d1[a].value() / n;
        let m = self.d2.len();
        (0..m)
            .map(|b| {
                let m2 = self.d2[b].value() / n;
                (self.products[a * m + b].value() / n) / (m1 * m2)
            })
            .collect()
    }
}

/// Mean with its batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanWithError {
    pub mean: f64,
    pub stderr: f64,
}

fn batch_stats(total: f64, per_batch: &[f64]) -> MeanWithError {
    let b = per_batch.len() as f64;
    let mean_b = per_batch.iter().sum::<f64>() / b;
    let var = per_batch.iter().map(|x| (x - mean_b).powi(2)).sum::<f64>() / (b - 1.0);
    MeanWithError {
        mean: total,
        stderr: (var / b).sqrt(),
    }
}

/// Bias-corrected estimate `B·θ − (B−1)·mean(θ_(−b))` and jackknife error.
fn jackknife(full: f64, leave_one_out: &[f64]) -> MeanWithError {
    let b = leave_one_out.len() as f64;
    let mean = leave_one_out.iter().sum::<f64>() / b;
    let ss = leave_one_out.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    MeanWithError {
        mean: b * full - (b - 1.0) * mean,
        stderr: ((b - 1.0) / b * ss).sqrt(),
    }
}

/// Knobs of a spatial ensemble run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub realizations: usize,
    pub batches: usize,
    pub seed: u64,
    /// Detector (fibre) diameter [m].
    pub detector_aperture: f64,
    /// [m]
    pub max_focal_spacing: f64,
    pub illumination: Illumination,
}

impl EnsembleConfig {
    pub fn new(realizations: usize, seed: u64) -> Self {
        Self {
            realizations,
            batches: DEFAULT_BATCHES,
            seed,
            detector_aperture: DEFAULT_DETECTOR_APERTURE,
            max_focal_spacing: DEFAULT_MAX_FOCAL_SPACING,
            illumination: Illumination::UniformDisc,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations < MIN_REALIZATIONS {
            return Err(Error::invalid(
                "ensemble",
                format!(
                    "{} realizations requested, at least {MIN_REALIZATIONS} required",
                    self.realizations
                ),
            ));
        }
        if self.batches < MIN_BATCHES || self.batches > self.realizations {
            return Err(Error::invalid(
                "ensemble",
                format!(
                    "batch count {} must lie in [{MIN_BATCHES}, realizations]",
                    self.batches
                ),
            ));
        }
        if !(self.detector_aperture >= 0.0) || !(self.max_focal_spacing > 0.0) {
            return Err(Error::invalid("ensemble", "detector aperture and spacing must be positive"));
        }
        Ok(())
    }
}

/// Result of a D₂ scan for one or more fixed D₁ positions.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialEstimate {
    pub d1_positions: Vec<f64>,
    pub scan: Vec<f64>,
    /// One curve per D₁ position, abscissa = D₂ position.
    pub curves: Vec<G2Curve>,
    pub visibility: Vec<MeanWithError>,
    /// Leave-one-batch-out jackknife: bias-corrected visibility and its error.
    pub visibility_jackknife: Vec<MeanWithError>,
    /// D₁ singles in units of the expected mean intensity.
    pub singles_d1: Vec<MeanWithError>,
    /// D₂ singles per scan point in units of the expected mean intensity.
    pub singles_d2: Vec<MeanWithError>,
    pub focal_spacing: f64,
    /// False if any detector covered no focal-plane sample.
    pub fully_covered: bool,
}

/// Ensemble engine bound to one geometry.
pub struct SpatialEnsemble {
    grid: SourceGrid,
    cfg: OpticalConfig,
    settings: EnsembleConfig,
    projector: StripProjector,
    cells: Vec<(usize, f64)>,
    fp1: Vec<Footprint>,
    fp2: Vec<Footprint>,
    d1_positions: Vec<f64>,
    scan: Vec<f64>,
}

impl SpatialEnsemble {
    pub fn new(
        cfg: &OpticalConfig,
        grid: &SourceGrid,
        settings: &EnsembleConfig,
        d1_positions: &[f64],
        scan: &[f64],
    ) -> Result<Self> {
        cfg.validate()?;
        grid.validate()?;
        settings.validate()?;
        if d1_positions.is_empty() || scan.is_empty() {
            return Err(Error::invalid("ensemble", "detector position lists must be non-empty"));
        }
        let reach = d1_positions
            .iter()
            .chain(scan)
            .fold(0.0f64, |m, x| m.max(x.abs()));
        let half_width = reach + settings.detector_aperture + 4.0 * settings.max_focal_spacing;
        let projector = StripProjector::with_max_spacing(
            grid,
            cfg,
            settings.max_focal_spacing,
            half_width,
            0.5 * settings.detector_aperture,
        )?;
        let layout = projector.layout().clone();
        let fp = |xs: &[f64]| {
            xs.iter()
                .map(|&x| footprint(&layout, x, settings.detector_aperture))
                .collect::<Result<Vec<_>>>()
        };
        Ok(Self {
            grid: *grid,
            cfg: *cfg,
            settings: *settings,
            cells: grid.aperture_cells(settings.illumination),
            fp1: fp(d1_positions)?,
            fp2: fp(scan)?,
            projector,
            d1_positions: d1_positions.to_vec(),
            scan: scan.to_vec(),
        })
    }

    pub fn focal_spacing(&self) -> f64 {
        self.projector.layout().spacing
    }

    /// Expected `⟨|E|²⟩` at any focal-plane point: `Σ_c |A_c|² / n²`.
    pub fn expected_intensity(&self) -> f64 {
        let n = self.grid.n as f64;
        self.cells.iter().map(|(_, w)| w * w).sum::<f64>() / (n * n)
    }

    fn batch_range(&self, b: usize) -> std::ops::Range<usize> {
        let n = self.settings.realizations;
        let nb = self.settings.batches;
        (b * n / nb)..((b + 1) * n / nb)
    }

    /// Runs batch `b` sequentially.
    pub fn run_batch(&self, b: usize) -> Result<PairAccumulator> {
        let mut projector = self.projector.clone();
        let n = self.grid.n;
        let mut screen = SpeckleScreen {
            grid: self.grid,
            illumination: self.settings.illumination,
            amplitudes: vec![Complex64::new(0.0, 0.0); n * n],
            seed: 0,
            screen_offset: 0.0,
        };
        let mut field = vec![Complex64::new(0.0, 0.0); projector.layout().len()];
        let mut intensity = vec![0.0; field.len()];
        let mut i1 = vec![0.0; self.fp1.len()];
        let mut i2 = vec![0.0; self.fp2.len()];
        let mut acc = PairAccumulator::new(self.fp1.len(), self.fp2.len());
        for r in self.batch_range(b) {
            let seed = sub_seed(self.settings.seed, r as u64);
            let mut lattice = GaussianLattice::new(seed);
            screen.seed = seed;
            fill_screen(&self.grid, &self.cells, 0.0, &mut lattice, &mut screen.amplitudes);
            projector.project_into(&screen, &mut field)?;
            for (d, z) in intensity.iter_mut().zip(&field) {
                *d = z.norm_sqr();
            }
            for (v, fp) in i1.iter_mut().zip(&self.fp1) {
                *v = fp.mean(&intensity);
            }
            for (v, fp) in i2.iter_mut().zip(&self.fp2) {
                *v = fp.mean(&intensity);
            }
            acc.record(&i1, &i2);
        }
        Ok(acc)
    }

    /// All batches, in parallel, returned in batch order.
    pub fn run_batches(&self) -> Result<Vec<PairAccumulator>> {
        (0..self.settings.batches)
            .into_par_iter()
            .map(|b| self.run_batch(b))
            .collect()
    }

    pub fn run(&self) -> Result<SpatialEstimate> {
        let batches = self.run_batches()?;
        self.summarize(&batches)
    }

    /// Merges batch accumulators in order and derives curves and errors.
    pub fn summarize(&self, batches: &[PairAccumulator]) -> Result<SpatialEstimate> {
        let mut total = PairAccumulator::new(self.fp1.len(), self.fp2.len());
        for b in batches {
            total.merge(b);
        }
        let norm = self.expected_intensity();
        let leave_one_out: Vec<PairAccumulator> = (0..batches.len())
            .map(|skip| {
                let mut acc = PairAccumulator::new(self.fp1.len(), self.fp2.len());
                for (_, b) in batches.iter().enumerate().filter(|(i, _)| *i != skip) {
                    acc.merge(b);
                }
                acc
            })
            .collect();
        let mut curves = Vec::with_capacity(self.fp1.len());
        let mut vis = Vec::with_capacity(self.fp1.len());
        let mut jack = Vec::with_capacity(self.fp1.len());
        for a in 0..self.fp1.len() {
            let g2 = total.g2_row(a);
            let per_batch: Vec<Vec<f64>> = batches.iter().map(|b| b.g2_row(a)).collect();
            let stderr = (0..g2.len())
                .map(|k| {
                    let col: Vec<f64> = per_batch.iter().map(|row| row[k]).collect();
                    batch_stats(g2[k], &col).stderr
                })
                .collect();
            let curve = G2Curve::new(self.scan.clone(), g2, stderr)?;
            let vb: Vec<f64> = per_batch
                .iter()
                .map(|row| visibility(&G2Curve::exact(self.scan.clone(), row.clone())?))
                .collect::<Result<_>>()?;
            let full = visibility(&curve)?;
            vis.push(batch_stats(full, &vb));
            let loo: Vec<f64> = leave_one_out
                .iter()
                .map(|acc| visibility(&G2Curve::exact(self.scan.clone(), acc.g2_row(a))?))
                .collect::<Result<_>>()?;
            jack.push(jackknife(full, &loo));
            curves.push(curve);
        }
        let singles = |sel: &dyn Fn(&PairAccumulator) -> &Vec<CompensatedSum>, len: usize| {
            (0..len)
                .map(|k| {
                    let whole = sel(&total)[k].value() / total.count as f64 / norm;
                    let per: Vec<f64> = batches
                        .iter()
                        .map(|b| sel(b)[k].value() / b.count as f64 / norm)
                        .collect();
                    batch_stats(whole, &per)
                })
                .collect::<Vec<_>>()
        };
        Ok(SpatialEstimate {
            d1_positions: self.d1_positions.clone(),
            scan: self.scan.clone(),
            curves,
            visibility: vis,
            visibility_jackknife: jack,
            singles_d1: singles(&|a| &a.d1, self.fp1.len()),
            singles_d2: singles(&|a| &a.d2, self.fp2.len()),
            focal_spacing: self.focal_spacing(),
            fully_covered: self.fp1.iter().chain(&self.fp2).all(|f| f.covered),
        })
    }

    pub fn optical_config(&self) -> &OpticalConfig {
        &self.cfg
    }
}

/// Estimated `g2(x1, x2)` over a D₂ scan from `realizations` independent screens.
pub fn estimate_g2_spatial(
    x1: f64,
    x2_scan: &[f64],
    cfg: &OpticalConfig,
    grid: &SourceGrid,
    realizations: usize,
    seed: u64,
) -> Result<G2Curve> {
    let settings = EnsembleConfig::new(realizations, seed);
    let est = SpatialEnsemble::new(cfg, grid, &settings, &[x1], x2_scan)?.run()?;
    Ok(est.curves.into_iter().next().expect("one D1 position"))
}
