//! Correlation-width estimators for a measured g2 curve.

use serde::{Deserialize, Serialize};

use crate::analytic::{airy_amplitude, G2Curve, J1_FIRST_ZERO};

/// Width estimates of one curve around its D₁ position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthEstimate {
    /// First zero of the best-fit `b + A·[2J₁(v)/v]²` profile.
    pub fitted_first_zero: f64,
    pub fit_baseline: f64,
    pub fit_amplitude: f64,
    pub fit_chi2_per_dof: f64,
    /// First sign change of `g2 − 1`, linearly interpolated.
    pub crossing: Option<f64>,
    /// Half width at half maximum of `g2 − 1`.
    pub hwhm: Option<f64>,
}

/// Argument `v` with `[2J₁(v)/v]² = 1/2`.
pub fn half_power_argument() -> f64 {
    let (mut lo, mut hi) = (0.0, J1_FIRST_ZERO);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if airy_amplitude(mid).powi(2) > 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn weights(curve: &G2Curve) -> Vec<f64> {
    if curve.stderr.iter().all(|s| *s > 0.0) {
        curve.stderr.iter().map(|s| 1.0 / (s * s)).collect()
    } else {
        vec![1.0; curve.len()]
    }
}

/// Weighted least-squares `(b, A, χ²)` for a fixed first-zero width.
fn linear_fit(curve: &G2Curve, w: &[f64], x0: f64, width: f64) -> (f64, f64, f64) {
    let s: Vec<f64> = curve
        .abscissa
        .iter()
        .map(|x| airy_amplitude(J1_FIRST_ZERO * (x - x0) / width).powi(2))
        .collect();
    let (mut sw, mut ss, mut sss, mut sy, mut ssy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((si, yi), wi) in s.iter().zip(&curve.g2).zip(w) {
        sw += wi;
        ss += wi * si;
        sss += wi * si * si;
        sy += wi * yi;
        ssy += wi * si * yi;
    }
    let det = sw * sss - ss * ss;
    let (b, a) = if det.abs() > 1e-300 {
        ((sss * sy - ss * ssy) / det, (sw * ssy - ss * sy) / det)
    } else {
        (sy / sw, 0.0)
    };
    let chi2 = s
        .iter()
        .zip(&curve.g2)
        .zip(w)
        .map(|((si, yi), wi)| wi * (yi - b - a * si).powi(2))
        .sum();
    (b, a, chi2)
}

/// Best-fit first-zero width of an Airy-squared profile centred at `x0`.
pub fn fit_first_zero(curve: &G2Curve, x0: f64) -> Option<(f64, f64, f64, f64)> {
    if curve.len() < 4 {
        return None;
    }
    let w = weights(curve);
    let xs = &curve.abscissa;
    let span = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - xs.iter().copied().fold(f64::INFINITY, f64::min);
    let min_gap = xs
        .windows(2)
        .map(|p| (p[1] - p[0]).abs())
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !(span > 0.0 && min_gap.is_finite()) {
        return None;
    }
    let (lo, hi) = (0.5 * min_gap, 2.0 * span);
    let cost = |width: f64| linear_fit(curve, &w, x0, width).2;
    let n = 800;
    let grid: Vec<f64> = (0..=n)
        .map(|i| lo * (hi / lo).powf(i as f64 / n as f64))
        .collect();
    let best = (0..=n)
        .min_by(|&i, &j| cost(grid[i]).total_cmp(&cost(grid[j])))
        .unwrap_or(0);
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(n)]);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if cost(c) < cost(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let width = 0.5 * (a + b);
    let (base, amp, chi2) = linear_fit(curve, &w, x0, width);
    let dof = (curve.len() as f64 - 3.0).max(1.0);
    Some((width, base, amp, chi2 / dof))
}

fn nearest_index(xs: &[f64], x0: f64) -> Option<usize> {
    xs.iter()
        .enumerate()
        .min_by(|a, b| (a.1 - x0).abs().total_cmp(&(b.1 - x0).abs()))
        .map(|(i, _)| i)
}

/// Mean distance from `x0` at which `y` first drops to `level` on each side.
fn first_drop(xs: &[f64], y: &[f64], x0: f64, level: f64) -> Option<f64> {
    let i0 = nearest_index(xs, x0)?;
    let mut found = Vec::new();
    for dir in [1isize, -1] {
        let mut i = i0 as isize;
        loop {
            let j = i + dir;
            if j < 0 || j as usize >= xs.len() {
                break;
            }
            let (a, b) = (i as usize, j as usize);
            if y[b] <= level {
                let t = if y[a] > y[b] {
                    (y[a] - level) / (y[a] - y[b])
                } else {
                    1.0
                };
                let x = xs[a] + t * (xs[b] - xs[a]);
                found.push((x - x0).abs());
                break;
            }
            i = j;
        }
    }
    (!found.is_empty()).then(|| found.iter().sum::<f64>() / found.len() as f64)
}

pub fn estimate_width(curve: &G2Curve, x0: f64) -> Option<WidthEstimate> {
    let (fitted_first_zero, fit_baseline, fit_amplitude, fit_chi2_per_dof) =
        fit_first_zero(curve, x0)?;
    let excess: Vec<f64> = curve.g2.iter().map(|g| g - 1.0).collect();
    let crossing = first_drop(&curve.abscissa, &excess, x0, 0.0);
    let hwhm = nearest_index(&curve.abscissa, x0)
        .and_then(|i| first_drop(&curve.abscissa, &excess, x0, 0.5 * excess[i]));
    Some(WidthEstimate {
        fitted_first_zero,
        fit_baseline,
        fit_amplitude,
        fit_chi2_per_dof,
        crossing,
        hwhm,
    })
}
