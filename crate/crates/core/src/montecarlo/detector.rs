use super::propagate::{FarField, FocalLayout};
use crate::error::{Error, Result};

/// Fibre core diameter.
pub const DEFAULT_DETECTOR_APERTURE: f64 = 60e-6;

/// Focal-plane samples seen by a detector centred at `(x, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Footprint {
    /// Row-major sample indices into the far-field array.
    pub indices: Vec<usize>,
    /// `false` when the aperture covered no sample and the nearest one is used.
    pub covered: bool,
}

/// Intensity averaged over a detector aperture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorReading {
    pub intensity: f64,
    pub samples: usize,
    pub covered: bool,
}

pub fn footprint(layout: &FocalLayout, x: f64, aperture_d: f64) -> Result<Footprint> {
    let (lo, hi) = layout.x_range();
    if !(x >= lo && x <= hi) {
        return Err(Error::OutsideWindow { x, lo, hi });
    }
    if !(aperture_d >= 0.0) {
        return Err(Error::invalid("detector", "aperture diameter must be nonnegative"));
    }
    let cols = layout.x.len();
    let r2 = 0.25 * aperture_d * aperture_d;
    let mut indices = Vec::new();
    for (row, y) in layout.y.iter().enumerate() {
        for (col, xs) in layout.x.iter().enumerate() {
            let dx = xs - x;
            if dx * dx + y * y <= r2 {
                indices.push(row * cols + col);
            }
        }
    }
    if !indices.is_empty() {
        return Ok(Footprint {
            indices,
            covered: true,
        });
    }
    let nearest = |v: &[f64], target: f64| {
        v.iter()
            .enumerate()
            .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    };
    let row = nearest(&layout.y, 0.0);
    let col = nearest(&layout.x, x);
    Ok(Footprint {
        indices: vec![row * cols + col],
        covered: false,
    })
}

impl Footprint {
    pub fn mean(&self, intensities: &[f64]) -> f64 {
        self.indices.iter().map(|&i| intensities[i]).sum::<f64>() / self.indices.len() as f64
    }
}

/// Mean `|E|²` over the aperture disc centred at `(x, 0)`.
pub fn detector_intensity(farfield: &FarField, x: f64, aperture_d: f64) -> Result<DetectorReading> {
    let fp = footprint(&farfield.layout, x, aperture_d)?;
    let sum: f64 = fp
        .indices
        .iter()
        .map(|&i| farfield.amplitudes[i].norm_sqr())
        .sum();
    Ok(DetectorReading {
        intensity: sum / fp.indices.len() as f64,
        samples: fp.indices.len(),
        covered: fp.covered,
    })
}
