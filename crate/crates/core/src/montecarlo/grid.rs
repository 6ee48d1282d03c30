use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples across the aperture diameter in the default grid.
pub const DEFAULT_CELLS_ACROSS: f64 = 64.0;
pub const DEFAULT_GRID_SIZE: usize = 128;

/// Sampling of the source plane.
///
/// Cell `(i, j)` sits at `((i − n/2)·pitch, (j − n/2)·pitch)`; the aperture is
/// the disc of diameter `aperture_diameter` centred on the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceGrid {
    pub n: usize,
    /// [m]
    pub pitch: f64,
    /// [m]
    pub aperture_diameter: f64,
}

/// Amplitude profile of the illuminated spot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Illumination {
    /// Hard disc, uniform amplitude.
    #[default]
    UniformDisc,
    /// Gaussian amplitude `exp(−r²/(a/2)²)` inside the disc.
    Gaussian,
}

impl SourceGrid {
    pub fn new(n: usize, pitch: f64, aperture_diameter: f64) -> Result<Self> {
        let grid = Self {
            n,
            pitch,
            aperture_diameter,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// 128 samples per side with 64 cells across the aperture.
    pub fn for_aperture(aperture_diameter: f64) -> Result<Self> {
        Self::new(
            DEFAULT_GRID_SIZE,
            aperture_diameter / DEFAULT_CELLS_ACROSS,
            aperture_diameter,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n.is_power_of_two() || self.n < 2 {
            return Err(Error::invalid(
                "source grid",
                format!("n = {} must be a power of two", self.n),
            ));
        }
        if !(self.pitch.is_finite() && self.pitch > 0.0)
            || !(self.aperture_diameter.is_finite() && self.aperture_diameter > 0.0)
        {
            return Err(Error::invalid(
                "source grid",
                "pitch and aperture diameter must be finite and positive",
            ));
        }
        // small slack so a/64 pitches built by division still pass
        let tol = 1e-9;
        if self.aperture_diameter / self.pitch < DEFAULT_CELLS_ACROSS * (1.0 - tol) {
            return Err(Error::invalid(
                "source grid",
                format!(
                    "resolution floor a/pitch >= 64 violated ({:.3})",
                    self.aperture_diameter / self.pitch
                ),
            ));
        }
        if self.n as f64 * self.pitch < 2.0 * self.aperture_diameter * (1.0 - tol) {
            return Err(Error::invalid(
                "source grid",
                "guard band requires n * pitch >= 2 * aperture diameter",
            ));
        }
        Ok(())
    }

    pub fn coordinate(&self, index: usize) -> f64 {
        (index as f64 - (self.n / 2) as f64) * self.pitch
    }

    /// Amplitude weight of cell `(i, j)`; zero outside the aperture.
    pub fn weight(&self, i: usize, j: usize, illumination: Illumination) -> f64 {
        let (x, y) = (self.coordinate(i), self.coordinate(j));
        let r2 = x * x + y * y;
        let radius = 0.5 * self.aperture_diameter;
        if r2 > radius * radius {
            return 0.0;
        }
        match illumination {
            Illumination::UniformDisc => 1.0,
            Illumination::Gaussian => (-r2 / (radius * radius)).exp(),
        }
    }

    /// Nonzero cells as `(row-major index, weight)`.
    pub fn aperture_cells(&self, illumination: Illumination) -> Vec<(usize, f64)> {
        let mut cells = Vec::new();
        for j in 0..self.n {
            for i in 0..self.n {
                let w = self.weight(i, j, illumination);
                if w > 0.0 {
                    cells.push((j * self.n + i, w));
                }
            }
        }
        cells
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_is_valid() {
        let g = SourceGrid::for_aperture(550e-6).unwrap();
        assert_eq!(g.n, 128);
        assert!((g.aperture_diameter / g.pitch - 64.0).abs() < 1e-9);
    }

    #[test]
    fn invariants_enforced() {
        assert!(SourceGrid::new(100, 1e-6, 64e-6).is_err()); // not a power of two
        assert!(SourceGrid::new(128, 2e-6, 64e-6).is_err()); // a/pitch = 32
        assert!(SourceGrid::new(64, 1e-6, 64e-6).is_err()); // no guard band
        assert!(SourceGrid::new(128, 1e-6, 64e-6).is_ok());
    }

    #[test]
    fn aperture_area_close_to_disc() {
        let g = SourceGrid::for_aperture(1e-3).unwrap();
        let cells = g.aperture_cells(Illumination::UniformDisc).len() as f64;
        let disc = std::f64::consts::PI * 32.0 * 32.0;
        assert!((cells / disc - 1.0).abs() < 0.01);
    }
}
