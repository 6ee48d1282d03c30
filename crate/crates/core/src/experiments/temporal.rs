use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::spec::{ExperimentKind, ExperimentSpec};
use super::{require_kind, RunResult};
use crate::analytic::{
    coherence_factor, g1_squared_interval_mean, g2_window_averaged, OpticalConfig,
};
use crate::counting::{
    apply_dead_time, coincidences_in_window, g2_from_counts, time_difference_histogram,
    CoxSampler, EventStream, Histogram,
};
use crate::error::Result;
use crate::montecarlo::temporal::check_step;
use crate::montecarlo::{PairFieldProcess, TemporalModel};
use crate::rng::sub_seed;

/// Trace samples generated per work unit.
const CHUNK_SAMPLES: u64 = 1 << 18;

/// Baseline region starts at this many coherence times.
pub const BASELINE_START: f64 = 5.0;

/// Half width of the pooled central region, in coherence times.
pub const CENTRAL_HALF_WIDTH: f64 = 0.01;

/// Channel groupings used to show the approach of the peak ratio to 2.
pub const REBIN_FACTORS: [usize; 4] = [1, 11, 101, 1001];

/// Measured and predicted peak-to-baseline ratio of a central channel group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    /// Full width of the central group [s].
    pub width: f64,
    pub measured: f64,
    pub stderr: f64,
    pub analytic: f64,
}

impl RatioEstimate {
    /// `|measured − analytic|` in units of `stderr`.
    pub fn deviation_sigma(&self) -> f64 {
        if self.stderr > 0.0 {
            (self.measured - self.analytic).abs() / self.stderr
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalSummary {
    pub x1: f64,
    pub x2: f64,
    /// Analytic `μ(x1 − x2)`.
    pub coherence_factor: f64,
    /// Field correlation of the simulated detector pair.
    pub simulated_correlation: f64,
    pub trace_step: f64,
    pub trace_samples: u64,
    pub singles_d1: u64,
    pub singles_d2: u64,
    pub coincidences: u64,
    pub g2_from_counts: f64,
    pub g2_from_counts_stderr: f64,
    pub g2_window_analytic: f64,
    /// Expected accidental counts per channel, `N1 N2 w / T`.
    pub accidental_baseline: f64,
    /// Centre of the tallest channel after grouping by the largest rebin factor.
    pub peak_center: f64,
    pub ratios: Vec<RatioEstimate>,
    pub central: RatioEstimate,
    pub baseline_channels: usize,
    pub baseline_chi2: f64,
    pub baseline_chi2_critical: f64,
    pub baseline_flat: bool,
}

/// `base · (1 + μ² ⟨g1²⟩_channel)` for every channel.
pub fn histogram_prediction(h: &Histogram, base: f64, mu: f64, cfg: &OpticalConfig) -> Vec<f64> {
    let w = h.channel_width;
    (0..h.counts.len())
        .map(|i| {
            let c = h.channel_center(i);
            base * (1.0 + mu * mu * g1_squared_interval_mean(c - 0.5 * w, c + 0.5 * w, cfg))
        })
        .collect()
}

/// Peak ratio of the `2m + 1` central channels, pooled.
fn central_ratio(h: &Histogram, m: usize, base: f64, mu: f64, cfg: &OpticalConfig) -> RatioEstimate {
    let k = h.half_channels;
    let m = m.min(k);
    let sum: u64 = h.counts[k - m..=k + m].iter().sum();
    let n = (2 * m + 1) as f64;
    let half = 0.5 * n * h.channel_width;
    RatioEstimate {
        width: 2.0 * half,
        measured: sum as f64 / (n * base),
        stderr: (sum as f64).max(1.0).sqrt() / (n * base),
        analytic: 1.0 + mu * mu * g1_squared_interval_mean(-half, half, cfg),
    }
}

fn baseline_test(h: &Histogram, cfg: &OpticalConfig) -> (usize, f64, f64) {
    let cut = BASELINE_START * cfg.coherence_time;
    let region: Vec<f64> = (0..h.counts.len())
        .filter(|&i| h.channel_center(i).abs() > cut)
        .map(|i| h.counts[i] as f64)
        .collect();
    if region.len() < 2 {
        return (region.len(), 0.0, f64::INFINITY);
    }
    let mean = region.iter().sum::<f64>() / region.len() as f64;
    let chi2 = if mean > 0.0 {
        region.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / mean
    } else {
        0.0
    };
    let dof = (region.len() - 1) as f64;
    let critical = ChiSquared::new(dof)
        .map(|d| d.inverse_cdf(0.95))
        .unwrap_or(f64::INFINITY);
    (region.len(), chi2, critical)
}

fn grouped_peak(h: &Histogram, m: usize) -> f64 {
    let k = h.half_channels as isize;
    let g = m as isize;
    let groups = k / g;
    let mut best = (0u64, 0.0);
    for j in -groups..=groups {
        let lo = k + j * g - g / 2;
        let hi = lo + g - 1;
        if lo < 0 || hi >= h.counts.len() as isize {
            continue;
        }
        let s: u64 = h.counts[lo as usize..=hi as usize].iter().sum();
        if s > best.0 {
            best = (s, (j * g) as f64 * h.channel_width);
        }
    }
    best.1
}

/// Both detectors' events over one acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct PairStreams {
    pub d1: EventStream,
    pub d2: EventStream,
    pub trace_step: f64,
    pub trace_samples: u64,
    /// `|ρ|` of the simulated detector pair.
    pub correlation: f64,
}

/// Event streams at both detectors over the acquisition time.
pub fn simulate_pair_streams(spec: &ExperimentSpec) -> Result<PairStreams> {
    let cfg = spec.optics();
    let grid = spec.grid_for(cfg.source_diameter)?;
    let process = PairFieldProcess::new(
        &grid,
        spec.illumination,
        &cfg,
        spec.x1,
        spec.x2,
        spec.temporal_model,
        sub_seed(spec.seed, 0),
    )?;
    let dt = process.step();
    check_step(dt, &cfg)?;
    let duration = spec.acquisition_time;
    let samples = (duration / dt).ceil() as u64;
    let chunks = samples.div_ceil(CHUNK_SAMPLES);
    let (d1, d2) = (spec.detector(1), spec.detector(2));
    // the process has unit ensemble mean intensity
    let (scale1, scale2) = (d1.incident_scale(1.0), d2.incident_scale(1.0));
    let (seed1, seed2) = (sub_seed(spec.seed, 1), sub_seed(spec.seed, 2));
    let chunk_events = |p: &mut PairFieldProcess, c: u64| {
        let first = c * CHUNK_SAMPLES;
        let len = CHUNK_SAMPLES.min(samples - first) as usize;
        let mut i1 = vec![0.0; len];
        let mut i2 = vec![0.0; len];
        p.fill_intensities(&mut i1, &mut i2);
        let t0 = first as f64 * dt;
        let mut s1 = CoxSampler::new(t0, scale1, &d1, sub_seed(seed1, c));
        let mut s2 = CoxSampler::new(t0, scale2, &d2, sub_seed(seed2, c));
        s1.push_trace(&i1, dt);
        s2.push_trace(&i2, dt);
        (s1.finish(), s2.finish())
    };
    let parts: Vec<(Vec<f64>, Vec<f64>)> = match spec.temporal_model {
        TemporalModel::GaussianTrack => (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut p = process.clone();
                p.seek(c * CHUNK_SAMPLES)?;
                Ok(chunk_events(&mut p, c))
            })
            .collect::<Result<_>>()?,
        TemporalModel::OrnsteinUhlenbeck => {
            let mut p = process.clone();
            (0..chunks).map(|c| chunk_events(&mut p, c)).collect()
        }
    };
    let (parts1, parts2): (Vec<Vec<f64>>, Vec<Vec<f64>>) = parts.into_iter().unzip();
    let join = |parts: Vec<Vec<f64>>, dead: f64, id: u32| {
        let mut ts: Vec<f64> = Vec::with_capacity(parts.iter().map(Vec::len).sum());
        for t in parts.into_iter().flatten() {
            if t <= duration && ts.last().is_none_or(|&l| t > l) {
                ts.push(t);
            }
        }
        apply_dead_time(&mut ts, dead);
        EventStream::new(ts, duration, id)
    };
    let s1 = join(parts1, d1.dead_time, 1)?;
    let s2 = join(parts2, d2.dead_time, 2)?;
    Ok(PairStreams {
        d1: s1,
        d2: s2,
        trace_step: dt,
        trace_samples: samples,
        correlation: process.correlation().norm(),
    })
}

/// Simulated two-detector time-difference histogram with analytic overlay.
pub fn run_temporal_histogram(spec: &ExperimentSpec) -> Result<RunResult> {
    require_kind(spec, ExperimentKind::TemporalHistogram)?;
    let cfg = spec.optics();
    let co = spec.coincidence();
    let PairStreams {
        d1: s1,
        d2: s2,
        trace_step: dt,
        trace_samples: samples,
        correlation: rho,
    } = simulate_pair_streams(spec)?;
    let hist = time_difference_histogram(&s1, &s2, &co)?;
    let nc = coincidences_in_window(&s1, &s2, co.window);
    let (n1, n2) = (s1.len() as u64, s2.len() as u64);
    let t = co.acquisition_time;
    let g2c = g2_from_counts(nc, n1, n2, t, co.window)?;
    let base = n1 as f64 * n2 as f64 * co.channel_width / t;
    let mu = coherence_factor(spec.x1 - spec.x2, &cfg);
    let ratios: Vec<RatioEstimate> = REBIN_FACTORS
        .iter()
        .map(|&f| central_ratio(&hist, f / 2, base, mu, &cfg))
        .collect();
    let m = (CENTRAL_HALF_WIDTH * cfg.coherence_time / co.channel_width).round() as usize;
    let central = central_ratio(&hist, m, base, mu, &cfg);
    let (channels, chi2, critical) = baseline_test(&hist, &cfg);
    let peak_center = grouped_peak(&hist, *REBIN_FACTORS.last().unwrap_or(&1));
    let summary = TemporalSummary {
        x1: spec.x1,
        x2: spec.x2,
        coherence_factor: mu,
        simulated_correlation: rho,
        trace_step: dt,
        trace_samples: samples,
        singles_d1: n1,
        singles_d2: n2,
        coincidences: nc,
        g2_from_counts: g2c,
        g2_from_counts_stderr: g2c / (nc.max(1) as f64).sqrt(),
        g2_window_analytic: g2_window_averaged(spec.x1 - spec.x2, co.window, &cfg),
        accidental_baseline: base,
        peak_center,
        ratios,
        central,
        baseline_channels: channels,
        baseline_chi2: chi2,
        baseline_chi2_critical: critical,
        baseline_flat: chi2 <= critical,
    };
    let mut result = RunResult::new(
        spec,
        "coincidences divided by accidentals N1 N2 w / T (g2 = Nc T / (N1 N2 T_w))",
    );
    result.temporal = Some(summary);
    result.histogram = Some(hist);
    if spec.write_events {
        result.events = Some((s1, s2));
    }
    Ok(result)
}
