//! Photon detection events, coincidence logic and time-difference histograms.

mod io;

use serde::{Deserialize, Serialize};

pub use io::{read_events, read_histogram_csv, write_events, write_histogram_csv};

use crate::analytic::DEFAULT_COHERENCE_TIME;
use crate::error::{Error, Result};
use crate::rng::{exponential, open_unit, seeded};

pub const DEFAULT_WINDOW: f64 = 600e-9;
pub const DEFAULT_CHANNEL_WIDTH: f64 = 0.3e-9;
pub const DEFAULT_HISTOGRAM_RANGE: f64 = 10e-6;
pub const DEFAULT_ACQUISITION_TIME: f64 = 10.0;
pub const DEFAULT_SINGLES_RATE: f64 = 60_000.0;

/// Time-ordered detection timestamps of one detector.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    timestamps: Vec<f64>,
    duration: f64,
    detector_id: u32,
}

impl EventStream {
    pub fn new(timestamps: Vec<f64>, duration: f64, detector_id: u32) -> Result<Self> {
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(Error::invalid("event stream", "duration must be finite and nonnegative"));
        }
        if let Some(i) = timestamps.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(
                "event stream",
                format!("timestamps not strictly increasing at index {}", i + 1),
            ));
        }
        if let (Some(&first), Some(&last)) = (timestamps.first(), timestamps.last()) {
            if !(first >= 0.0 && last <= duration) {
                return Err(Error::invalid(
                    "event stream",
                    format!("timestamps must lie in [0, {duration}]"),
                ));
            }
        }
        Ok(Self {
            timestamps,
            duration,
            detector_id,
        })
    }

    pub fn empty(duration: f64, detector_id: u32) -> Self {
        Self {
            timestamps: Vec::new(),
            duration,
            detector_id,
        }
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn detector_id(&self) -> u32 {
        self.detector_id
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Events per second.
    pub fn rate(&self) -> f64 {
        if self.duration > 0.0 {
            self.len() as f64 / self.duration
        } else {
            0.0
        }
    }

    /// Stream delayed by `delta`; events pushed outside `[0, duration]` are dropped.
    pub fn shifted(&self, delta: f64) -> Self {
        let timestamps = self
            .timestamps
            .iter()
            .map(|t| t + delta)
            .filter(|t| *t >= 0.0 && *t <= self.duration)
            .collect();
        Self {
            timestamps,
            duration: self.duration,
            detector_id: self.detector_id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoincidenceConfig {
    /// Full coincidence window `T_w`, centred on zero delay.
    pub window: f64,
    pub channel_width: f64,
    /// Largest `|t1 − t2|` entered in the histogram.
    pub histogram_range: f64,
    pub acquisition_time: f64,
}

impl Default for CoincidenceConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            channel_width: DEFAULT_CHANNEL_WIDTH,
            histogram_range: DEFAULT_HISTOGRAM_RANGE,
            acquisition_time: DEFAULT_ACQUISITION_TIME,
        }
    }
}

impl CoincidenceConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.window,
            self.channel_width,
            self.histogram_range,
            self.acquisition_time,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0);
        if !finite {
            return Err(Error::invalid("coincidence config", "all times must be positive"));
        }
        if self.channel_width > self.window {
            return Err(Error::invalid(
                "coincidence config",
                "channel width exceeds the coincidence window",
            ));
        }
        if self.histogram_range < self.window {
            return Err(Error::invalid(
                "coincidence config",
                "histogram range is shorter than the coincidence window",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorModel {
    pub efficiency: f64,
    /// Time-averaged detected rate including dark counts.
    pub mean_singles_rate: f64,
    pub dark_rate: f64,
    /// Non-paralyzable dead time.
    pub dead_time: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            efficiency: 1.0,
            mean_singles_rate: DEFAULT_SINGLES_RATE,
            dark_rate: 0.0,
            dead_time: 0.0,
        }
    }
}

impl DetectorModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::invalid("detector", "efficiency must lie in (0, 1]"));
        }
        for (name, v) in [
            ("mean_singles_rate", self.mean_singles_rate),
            ("dark_rate", self.dark_rate),
            ("dead_time", self.dead_time),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid("detector", format!("{name} must be nonnegative")));
            }
        }
        if self.dark_rate > self.mean_singles_rate {
            return Err(Error::invalid("detector", "dark rate exceeds the singles rate"));
        }
        Ok(())
    }

    /// Incident photon rate per unit intensity for a trace whose mean is `reference_mean`.
    pub fn incident_scale(&self, reference_mean: f64) -> f64 {
        if reference_mean > 0.0 {
            (self.mean_singles_rate - self.dark_rate) / (self.efficiency * reference_mean)
        } else {
            0.0
        }
    }
}

/// Piecewise-constant intensity samples `values[k]` on `[k·dt, (k+1)·dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityTrace {
    pub values: Vec<f64>,
    pub dt: f64,
    pub coherence_time: f64,
    /// Intensity that maps to `mean_singles_rate`; the time average when `None`.
    pub reference_mean: Option<f64>,
}

impl IntensityTrace {
    pub fn new(values: Vec<f64>, dt: f64, coherence_time: f64) -> Result<Self> {
        let trace = Self {
            values,
            dt,
            coherence_time,
            reference_mean: None,
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn with_reference_mean(mut self, mean: f64) -> Self {
        self.reference_mean = Some(mean);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("intensity trace", "time step must be positive"));
        }
        if !(self.coherence_time > 0.0) {
            return Err(Error::invalid("intensity trace", "coherence time must be positive"));
        }
        if self.dt > self.coherence_time / 50.0 * (1.0 + 1e-12) {
            return Err(Error::invalid(
                "intensity trace",
                format!(
                    "step {:e} s is coarser than coherence_time / 50 = {:e} s",
                    self.dt,
                    self.coherence_time / 50.0
                ),
            ));
        }
        if let Some(k) = self.values.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid(
                "intensity trace",
                format!("sample {k} is negative or not finite"),
            ));
        }
        if let Some(m) = self.reference_mean {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(Error::invalid("intensity trace", "reference mean must be nonnegative"));
            }
        }
        Ok(())
    }

    pub fn span(&self) -> f64 {
        self.values.len() as f64 * self.dt
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

impl Default for IntensityTrace {
    fn default() -> Self {
        Self {
            values: Vec::new(),
            dt: DEFAULT_COHERENCE_TIME / 50.0,
            coherence_time: DEFAULT_COHERENCE_TIME,
            reference_mean: None,
        }
    }
}

/// Streaming doubly stochastic Poisson sampler over piecewise-constant rates.
///
/// Signal events are drawn at the incident rate and kept with probability
/// `efficiency`; dark counts are added at `dark_rate`. Dead time is not applied.
#[derive(Debug, Clone)]
pub struct CoxSampler {
    rng: rand_chacha::ChaCha8Rng,
    time: f64,
    budget: f64,
    scale: f64,
    efficiency: f64,
    dark_rate: f64,
    events: Vec<f64>,
}

impl CoxSampler {
    /// `scale` converts intensity to incident photons per second.
    pub fn new(start: f64, scale: f64, det: &DetectorModel, seed: u64) -> Self {
        let mut rng = seeded(seed);
        let budget = exponential(&mut rng);
        Self {
            rng,
            time: start,
            budget,
            scale,
            efficiency: det.efficiency,
            dark_rate: det.dark_rate,
            events: Vec::new(),
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Advances by `dt` at constant intensity `level`.
    pub fn push_segment(&mut self, level: f64, dt: f64) {
        let start = self.time;
        self.segment(start, level, dt);
        self.time = start + dt;
    }

    /// Advances over consecutive samples of width `dt`.
    pub fn push_trace(&mut self, values: &[f64], dt: f64) {
        let start = self.time;
        for (k, &level) in values.iter().enumerate() {
            self.segment(start + k as f64 * dt, level, dt);
        }
        self.time = start + values.len() as f64 * dt;
    }

    fn segment(&mut self, t0: f64, level: f64, dt: f64) {
        let signal = self.scale * level;
        let rate = signal + self.dark_rate;
        let mut remaining = rate * dt;
        if remaining < self.budget {
            self.budget -= remaining;
            return;
        }
        let detected = self.efficiency * signal + self.dark_rate;
        let mut offset = 0.0;
        while self.budget <= remaining {
            offset += self.budget / rate;
            remaining -= self.budget;
            self.budget = exponential(&mut self.rng);
            if open_unit(&mut self.rng) * rate < detected {
                let t = t0 + offset.min(dt);
                if self.events.last().is_none_or(|&last| t > last) {
                    self.events.push(t);
                }
            }
        }
        self.budget -= remaining;
    }

    pub fn finish(self) -> Vec<f64> {
        self.events
    }
}

/// Drops events closer than `dead_time` to the previous registered event.
pub fn apply_dead_time(timestamps: &mut Vec<f64>, dead_time: f64) {
    if dead_time <= 0.0 {
        return;
    }
    let mut last = f64::NEG_INFINITY;
    timestamps.retain(|&t| {
        if t - last >= dead_time {
            last = t;
            true
        } else {
            false
        }
    });
}

/// Detection events for an intensity trace, calibrated to the detector's singles rate.
pub fn sample_events(
    trace: &IntensityTrace,
    det: &DetectorModel,
    duration: f64,
    detector_id: u32,
    seed: u64,
) -> Result<EventStream> {
    trace.validate()?;
    det.validate()?;
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(Error::invalid("duration", "must be finite and nonnegative"));
    }
    if trace.span() < duration * (1.0 - 1e-12) {
        return Err(Error::invalid(
            "intensity trace",
            format!("trace covers {:e} s, duration is {duration:e} s", trace.span()),
        ));
    }
    let reference = trace.reference_mean.unwrap_or_else(|| trace.mean());
    let scale = det.incident_scale(reference);
    let steps = ((duration / trace.dt).ceil() as usize).min(trace.values.len());
    let mut sampler = CoxSampler::new(0.0, scale, det, seed);
    sampler.push_trace(&trace.values[..steps], trace.dt);
    let mut ts = sampler.finish();
    ts.retain(|&t| t <= duration);
    apply_dead_time(&mut ts, det.dead_time);
    EventStream::new(ts, duration, detector_id)
}

/// Time-difference histogram over channels `−K..=K`, channel `c` centred at `c · width`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub channel_width: f64,
    pub half_channels: usize,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(channel_width: f64, range: f64) -> Result<Self> {
        if !(channel_width > 0.0 && range >= 0.0 && channel_width.is_finite()) {
            return Err(Error::invalid("histogram", "channel width must be positive"));
        }
        let k = (range / channel_width).round();
        if k > 1e9 {
            return Err(Error::invalid("histogram", "too many channels"));
        }
        let k = k as usize;
        Ok(Self {
            channel_width,
            half_channels: k,
            counts: vec![0; 2 * k + 1],
        })
    }

    pub fn channel_center(&self, i: usize) -> f64 {
        (i as f64 - self.half_channels as f64) * self.channel_width
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.counts.len()).map(|i| self.channel_center(i)).collect()
    }

    /// Array index of the channel holding a time difference `delta`.
    pub fn index_of(&self, delta: f64) -> Option<usize> {
        let c = (delta / self.channel_width).round();
        let k = self.half_channels as f64;
        (c.abs() <= k).then_some((c + k) as usize)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.counts.len() != other.counts.len() || self.channel_width != other.channel_width {
            return Err(Error::invalid("histogram", "incompatible channel layouts"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }
}

/// Calls `f(t1 − t2)` for every pair with `|t1 − t2| ≤ half`.
fn for_each_pair(a: &[f64], b: &[f64], half: f64, mut f: impl FnMut(f64)) {
    let mut lo = 0;
    for &t1 in a {
        while lo < b.len() && b[lo] < t1 - half {
            lo += 1;
        }
        let mut j = lo;
        while j < b.len() && b[j] <= t1 + half {
            f(t1 - b[j]);
            j += 1;
        }
    }
}

/// Histogram of `t1 − t2` over all pairs within the configured range.
pub fn time_difference_histogram(
    s1: &EventStream,
    s2: &EventStream,
    cfg: &CoincidenceConfig,
) -> Result<Histogram> {
    cfg.validate()?;
    if s1.duration != s2.duration {
        return Err(Error::invalid(
            "event streams",
            format!("durations differ: {} s vs {} s", s1.duration, s2.duration),
        ));
    }
    let mut h = Histogram::new(cfg.channel_width, cfg.histogram_range)?;
    let range = cfg.histogram_range;
    for_each_pair(&s1.timestamps, &s2.timestamps, range, |d| {
        if let Some(i) = h.index_of(d) {
            h.counts[i] += 1;
        }
    });
    Ok(h)
}

/// Number of pairs with `|t1 − t2| ≤ window / 2`.
pub fn coincidences_in_window(s1: &EventStream, s2: &EventStream, window: f64) -> u64 {
    let mut n = 0;
    for_each_pair(&s1.timestamps, &s2.timestamps, 0.5 * window, |_| n += 1);
    n
}

/// Windowed coincidence rate normalized by the accidental rate.
pub fn g2_from_counts(nc: u64, n1: u64, n2: u64, duration: f64, window: f64) -> Result<f64> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::DivisionByZero("g2_from_counts: zero singles"));
    }
    if !(duration > 0.0) {
        return Err(Error::DivisionByZero("g2_from_counts: zero duration"));
    }
    if !(window > 0.0) {
        return Err(Error::DivisionByZero("g2_from_counts: zero window"));
    }
    Ok(nc as f64 * duration / (n1 as f64 * n2 as f64 * window))
}
