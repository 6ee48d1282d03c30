use std::f64::consts::TAU;
use std::ops::Range;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::SourceGrid;
use super::screen::SpeckleScreen;
use crate::analytic::OpticalConfig;
use crate::error::{Error, Result};

/// Sample positions of a focal-plane field.
#[derive(Debug, Clone, PartialEq)]
pub struct FocalLayout {
    /// Column coordinates [m], ascending.
    pub x: Vec<f64>,
    /// Row coordinates [m], ascending.
    pub y: Vec<f64>,
    /// Sample spacing `λ f / (M · pitch)` [m].
    pub spacing: f64,
}

impl FocalLayout {
    pub fn x_range(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    pub fn len(&self) -> usize {
        self.x.len() * self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Complex field on (part of) the lens focal plane.
///
/// `E(x, y) = (1/n) Σ U(ξ, η) exp(−i 2π (x ξ + y η) / λ f)`; the full-plane
/// transform is unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct FarField {
    pub layout: FocalLayout,
    /// Row-major over `(y, x)`.
    pub amplitudes: Vec<Complex64>,
    /// The `1/n` prefactor.
    pub normalization: f64,
}

impl FarField {
    pub fn intensity(&self, row: usize, col: usize) -> f64 {
        self.amplitudes[row * self.layout.x.len() + col].norm_sqr()
    }

    pub fn power(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn intensities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Focal-plane spacing for a transform of length `len` on `grid`.
pub fn focal_spacing(grid: &SourceGrid, cfg: &OpticalConfig, len: usize) -> f64 {
    cfg.wavelength * cfg.focal_length / (len as f64 * grid.pitch)
}

fn check_inputs(screen: &SpeckleScreen, cfg: &OpticalConfig) -> Result<()> {
    screen.grid.validate()?;
    cfg.validate()?;
    if screen.amplitudes.len() != screen.grid.n * screen.grid.n {
        return Err(Error::invalid("speckle screen", "amplitude array does not match grid"));
    }
    Ok(())
}

/// Full `n × n` focal plane by 2-D FFT, centred on the optical axis.
pub fn propagate_to_focal_plane(screen: &SpeckleScreen, cfg: &OpticalConfig) -> Result<FarField> {
    check_inputs(screen, cfg)?;
    let n = screen.grid.n;
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut data = screen.amplitudes.clone();
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    // rows (along x), then columns via transpose
    for row in data.chunks_exact_mut(n) {
        fft.process_with_scratch(row, &mut scratch);
    }
    let mut t = transpose(&data, n);
    for col in t.chunks_exact_mut(n) {
        fft.process_with_scratch(col, &mut scratch);
    }
    let spectrum = transpose(&t, n);

    let half = (n / 2) as isize;
    let inv = 1.0 / n as f64;
    let mut amplitudes = Vec::with_capacity(n * n);
    for l in -half..half {
        for k in -half..half {
            let src = l.rem_euclid(n as isize) as usize * n + k.rem_euclid(n as isize) as usize;
            // exp(iπ(k + l)) from the centred source coordinates
            let sign = if (k + l).rem_euclid(2) == 0 { inv } else { -inv };
            amplitudes.push(spectrum[src] * sign);
        }
    }
    let spacing = focal_spacing(&screen.grid, cfg, n);
    let coords: Vec<f64> = (-half..half).map(|k| k as f64 * spacing).collect();
    Ok(FarField {
        layout: FocalLayout {
            x: coords.clone(),
            y: coords,
            spacing,
        },
        amplitudes,
        normalization: inv,
    })
}

fn transpose(data: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        for i in 0..n {
            out[i * n + j] = data[j * n + i];
        }
    }
    out
}

/// Rows and columns spanned by the nonzero samples of an `n × n` array.
fn support(a: &[Complex64], n: usize) -> (Range<usize>, Range<usize>) {
    let (mut r0, mut r1, mut c0, mut c1) = (n, 0, n, 0);
    for (j, row) in a.chunks_exact(n).enumerate() {
        if let Some(first) = row.iter().position(|z| *z != Complex64::new(0.0, 0.0)) {
            let last = row.iter().rposition(|z| *z != Complex64::new(0.0, 0.0)).unwrap_or(first);
            r0 = r0.min(j);
            r1 = j + 1;
            c0 = c0.min(first);
            c1 = c1.max(last + 1);
        }
    }
    if r1 == 0 {
        return (0..0, 0..0);
    }
    (r0..r1, c0..c1)
}

/// Evaluates a horizontal strip of the focal plane on a finer grid.
///
/// The x direction is a zero-padded DFT of length `M`, computed by FFT or,
/// when few output columns are kept, by direct sums; the few rows needed
/// near `y = 0` are direct sums over the aperture. Sample spacing is
/// `λ f / (M · pitch)` in both directions, and with `M = n` the samples equal
/// the corresponding rows of [`propagate_to_focal_plane`].
#[derive(Clone)]
pub struct StripProjector {
    grid: SourceGrid,
    padded_len: usize,
    layout: FocalLayout,
    /// Column `k` offsets kept, as FFT bin indices.
    bins: Vec<usize>,
    /// `exp(iπ k n / M) / n` for each kept column.
    column_phase: Vec<Complex64>,
    /// Per row: `exp(−i 2π l (j − n/2) / M)` for every source row `j`.
    row_phase: Vec<Vec<Complex64>>,
    fft: Arc<dyn Fft<f64>>,
    /// Row-major `(kept column, source column)` DFT kernel when summing directly.
    direct: Option<Vec<Complex64>>,
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for StripProjector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StripProjector")
            .field("grid", &self.grid)
            .field("padded_len", &self.padded_len)
            .field("layout", &self.layout)
            .finish()
    }
}

impl StripProjector {
    /// Strip covering `|x| ≤ half_width`, `|y| ≤ half_height` with transform length `padded_len`.
    pub fn new(
        grid: &SourceGrid,
        cfg: &OpticalConfig,
        padded_len: usize,
        half_width: f64,
        half_height: f64,
    ) -> Result<Self> {
        grid.validate()?;
        cfg.validate()?;
        if !padded_len.is_power_of_two() || padded_len < grid.n {
            return Err(Error::invalid(
                "strip projector",
                format!("padded length {padded_len} must be a power of two >= n = {}", grid.n),
            ));
        }
        let spacing = focal_spacing(grid, cfg, padded_len);
        let half_window = 0.5 * padded_len as f64 * spacing;
        if !(half_width >= 0.0 && half_width < half_window) || !(half_height >= 0.0) {
            return Err(Error::invalid(
                "strip projector",
                format!("half width {half_width:e} m outside the alias-free window ±{half_window:e} m"),
            ));
        }
        let kmax = (half_width / spacing).ceil() as isize;
        let kmax = kmax.min(padded_len as isize / 2 - 1);
        let lmax = (half_height / spacing).floor() as isize;
        let n = grid.n;
        let m = padded_len as f64;

        let ks: Vec<isize> = (-kmax..=kmax).collect();
        let ls: Vec<isize> = (-lmax..=lmax).collect();
        let bins = ks
            .iter()
            .map(|&k| k.rem_euclid(padded_len as isize) as usize)
            .collect();
        let column_phase = ks
            .iter()
            .map(|&k| Complex64::from_polar(1.0 / n as f64, TAU * 0.5 * k as f64 * n as f64 / m))
            .collect();
        let half = (n / 2) as f64;
        let row_phase = ls
            .iter()
            .map(|&l| {
                (0..n)
                    .map(|j| Complex64::from_polar(1.0, -TAU * l as f64 * (j as f64 - half) / m))
                    .collect()
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(padded_len);
        let fft_cost = padded_len as f64 * (padded_len as f64).log2();
        let direct_cost = (ks.len() * n / 2) as f64;
        let direct = (direct_cost < fft_cost).then(|| {
            ks.iter()
                .flat_map(|&k| {
                    (0..n).map(move |i| {
                        let turns = ((k * i as isize).rem_euclid(padded_len as isize)) as f64 / m;
                        Complex64::from_polar(1.0, -TAU * turns)
                    })
                })
                .collect()
        });
        let scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        Ok(Self {
            grid: *grid,
            padded_len,
            layout: FocalLayout {
                x: ks.iter().map(|&k| k as f64 * spacing).collect(),
                y: ls.iter().map(|&l| l as f64 * spacing).collect(),
                spacing,
            },
            bins,
            column_phase,
            row_phase,
            fft,
            direct,
            buffer: vec![Complex64::new(0.0, 0.0); padded_len],
            scratch,
        })
    }

    /// Smallest power-of-two transform (at least `n`) whose spacing is `≤ max_spacing`.
    pub fn with_max_spacing(
        grid: &SourceGrid,
        cfg: &OpticalConfig,
        max_spacing: f64,
        half_width: f64,
        half_height: f64,
    ) -> Result<Self> {
        if !(max_spacing.is_finite() && max_spacing > 0.0) {
            return Err(Error::invalid("strip projector", "max spacing must be positive"));
        }
        let needed = cfg.wavelength * cfg.focal_length / (grid.pitch * max_spacing);
        let len = (needed.ceil() as usize).max(grid.n).next_power_of_two();
        Self::new(grid, cfg, len, half_width, half_height)
    }

    pub fn layout(&self) -> &FocalLayout {
        &self.layout
    }

    pub fn padded_len(&self) -> usize {
        self.padded_len
    }

    /// Writes the strip field, row-major over `(y, x)`, into `out`.
    pub fn project_into(&mut self, screen: &SpeckleScreen, out: &mut [Complex64]) -> Result<()> {
        if screen.grid != self.grid {
            return Err(Error::invalid("strip projector", "screen grid differs from projector grid"));
        }
        let n = self.grid.n;
        let cols = self.layout.x.len();
        if out.len() != cols * self.layout.y.len() {
            return Err(Error::invalid("strip projector", "output buffer has the wrong size"));
        }
        let (rows, span) = support(&screen.amplitudes, n);
        for (r, phase) in self.row_phase.iter().enumerate() {
            self.buffer.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for j in rows.clone() {
                let p = phase[j];
                let row = &screen.amplitudes[j * n..(j + 1) * n];
                for (b, u) in self.buffer[span.clone()].iter_mut().zip(&row[span.clone()]) {
                    *b += u * p;
                }
            }
            let dst = &mut out[r * cols..(r + 1) * cols];
            match &self.direct {
                Some(kernel) => {
                    let src = &self.buffer[span.clone()];
                    for ((d, tw), ph) in dst.iter_mut().zip(kernel.chunks_exact(n)).zip(&self.column_phase) {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for (b, t) in src.iter().zip(&tw[span.clone()]) {
                            acc += b * t;
                        }
                        *d = acc * ph;
                    }
                }
                None => {
                    self.fft.process_with_scratch(&mut self.buffer, &mut self.scratch);
                    for ((d, &bin), ph) in dst.iter_mut().zip(&self.bins).zip(&self.column_phase) {
                        *d = self.buffer[bin] * ph;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn project(&mut self, screen: &SpeckleScreen) -> Result<FarField> {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); self.layout.len()];
        self.project_into(screen, &mut amplitudes)?;
        Ok(FarField {
            layout: self.layout.clone(),
            amplitudes,
            normalization: 1.0 / self.grid.n as f64,
        })
    }
}
