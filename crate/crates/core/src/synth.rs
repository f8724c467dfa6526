//! Seeded synthetic appliance signatures.
//!
//! Every archetype describes an appliance-level trace: the meter reads
//! exactly 0 W while the device is idle and `base_watts` plus Gaussian noise
//! while it runs. Timing (start offset, phase, period jitter) is randomized
//! per signature, so signatures of one class share texture but are not
//! aligned in time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::signal::{Dataset, PowerSignal, DEFAULT_SAMPLE_RATE_HZ};

pub const MIN_SIGNAL_LENGTH: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// One constant-power run covering `duty` of the trace (the whole trace when `duty == 1`).
    Flat,
    /// Compressor-style on/off square wave with the given period and on-fraction.
    PeriodicCycle,
    /// Short peaks every `period` samples that decay back to idle.
    SpikeTrain,
    /// Linear warm-up over `duty` of the trace followed by a plateau, then idle.
    RampPlateau,
    /// Heat, agitate (alternating levels every `period / 2` samples), spin, idle.
    MultiState,
}

impl Shape {
    pub fn name(self) -> &'static str {
        match self {
            Shape::Flat => "flat",
            Shape::PeriodicCycle => "periodic-cycle",
            Shape::SpikeTrain => "spike-train",
            Shape::RampPlateau => "ramp-plateau",
            Shape::MultiState => "multi-state",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "flat" => Shape::Flat,
            "periodic-cycle" => Shape::PeriodicCycle,
            "spike-train" => Shape::SpikeTrain,
            "ramp-plateau" => Shape::RampPlateau,
            "multi-state" => Shape::MultiState,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Archetype {
    pub name: String,
    pub shape: Shape,
    pub base_watts: f64,
    pub noise_watts: f64,
    /// Fraction of the trace (or of each period) the appliance is active, in (0, 1].
    pub duty: f64,
    /// Cycle length in samples for periodic shapes.
    pub period: usize,
}

impl Archetype {
    /// An always-on archetype with default timing for its shape.
    pub fn new(name: impl Into<String>, shape: Shape, base_watts: f64, noise_watts: f64) -> Self {
        let (duty, period) = match shape {
            Shape::Flat => (1.0, 2),
            Shape::PeriodicCycle => (0.5, 40),
            Shape::SpikeTrain => (0.25, 30),
            Shape::RampPlateau => (0.3, 2),
            Shape::MultiState => (1.0, 8),
        };
        Self {
            name: name.into(),
            shape,
            base_watts,
            noise_watts,
            duty,
            period,
        }
    }

    pub fn with_timing(mut self, duty: f64, period: usize) -> Self {
        self.duty = duty;
        self.period = period;
        self
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(format!("archetype {:?}: {msg}", self.name)));
        if self.name.is_empty() || self.name.contains(',') {
            return bad("name must be non-empty and comma-free".into());
        }
        if !(self.base_watts.is_finite() && self.base_watts >= 0.0) {
            return bad(format!("base power {} must be finite and >= 0", self.base_watts));
        }
        if !(self.noise_watts.is_finite() && self.noise_watts >= 0.0) {
            return bad(format!("noise {} must be finite and >= 0", self.noise_watts));
        }
        if !(self.duty > 0.0 && self.duty <= 1.0) {
            return bad(format!("duty {} must be in (0, 1]", self.duty));
        }
        if self.period < 2 {
            return bad(format!("period {} must be >= 2", self.period));
        }
        Ok(())
    }
}

/// The eight appliance archetypes used by the shipped benchmark.
pub fn benchmark_archetypes() -> Vec<Archetype> {
    vec![
        Archetype::new("kettle", Shape::Flat, 2000.0, 20.0).with_timing(0.2, 2),
        Archetype::new("television", Shape::Flat, 110.0, 4.0).with_timing(0.75, 2),
        Archetype::new("fridge", Shape::PeriodicCycle, 120.0, 3.0).with_timing(0.35, 48),
        Archetype::new("freezer", Shape::PeriodicCycle, 90.0, 2.0).with_timing(0.6, 130),
        Archetype::new("heat_pump", Shape::PeriodicCycle, 900.0, 12.0).with_timing(0.5, 12),
        Archetype::new("microwave", Shape::SpikeTrain, 1200.0, 15.0).with_timing(0.25, 30),
        Archetype::new("oven", Shape::RampPlateau, 2400.0, 10.0).with_timing(0.3, 2),
        Archetype::new("washing_machine", Shape::MultiState, 500.0, 10.0).with_timing(1.0, 8),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub classes: Vec<Archetype>,
    pub signatures_per_class: usize,
    pub signal_length: usize,
}

impl SynthConfig {
    /// 8 classes, 40 signatures each, 400 samples, seed 1.
    pub fn benchmark() -> Self {
        Self {
            seed: 1,
            classes: benchmark_archetypes(),
            signatures_per_class: 40,
            signal_length: 400,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::InvalidConfig("at least one archetype is required".into()));
        }
        if self.signatures_per_class < 1 {
            return Err(Error::InvalidConfig("signatures_per_class must be >= 1".into()));
        }
        if self.signal_length < MIN_SIGNAL_LENGTH {
            return Err(Error::InvalidConfig(format!(
                "signal_length {} is below the minimum of {MIN_SIGNAL_LENGTH}",
                self.signal_length
            )));
        }
        for (i, a) in self.classes.iter().enumerate() {
            a.validate()?;
            if self.classes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::InvalidConfig(format!("duplicate archetype {:?}", a.name)));
            }
        }
        Ok(())
    }
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut signals = Vec::with_capacity(cfg.classes.len() * cfg.signatures_per_class);
    for arch in &cfg.classes {
        for i in 0..cfg.signatures_per_class {
            let samples = render(arch, cfg.signal_length, &mut rng);
            signals.push(PowerSignal::new(
                samples,
                Some(arch.name.clone()),
                format!("{}-{i:03}", arch.name),
                DEFAULT_SAMPLE_RATE_HZ,
            )?);
        }
    }
    Dataset::new(signals, cfg.classes.iter().map(|a| a.name.clone()).collect())
}

fn jitter(rng: &mut ChaCha8Rng, value: f64, spread: f64) -> f64 {
    value * rng.random_range(1.0 - spread..=1.0 + spread)
}

/// Noise-free activity profile in units of `base_watts`; 0 marks idle samples.
fn profile(arch: &Archetype, len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut p = vec![0.0; len];
    match arch.shape {
        Shape::Flat => {
            if arch.duty >= 1.0 {
                p.fill(1.0);
            } else {
                let width = (jitter(rng, arch.duty, 0.2) * len as f64).round() as usize;
                let width = width.clamp(1, len);
                let start = rng.random_range(0..=len - width);
                p[start..start + width].fill(1.0);
            }
        }
        Shape::PeriodicCycle => {
            let period = jitter(rng, arch.period as f64, 0.1).max(2.0);
            let phase = rng.random_range(0.0..period);
            for (t, v) in p.iter_mut().enumerate() {
                if ((t as f64 + phase) % period) < arch.duty * period {
                    *v = 1.0;
                }
            }
        }
        Shape::SpikeTrain => {
            let period = jitter(rng, arch.period as f64, 0.1).max(2.0);
            let phase = rng.random_range(0.0..period);
            let width = (arch.duty * period).max(1.0);
            for (t, v) in p.iter_mut().enumerate() {
                let pos = (t as f64 + phase) % period;
                if pos < width {
                    *v = 1.0 - 0.8 * pos / width;
                }
            }
        }
        Shape::RampPlateau => {
            let start = rng.random_range(0..=len / 5);
            let ramp = ((jitter(rng, arch.duty, 0.2) * len as f64).round() as usize).max(1);
            let end = ((rng.random_range(0.75..0.95) * len as f64) as usize).clamp(start + 1, len);
            for (t, v) in p.iter_mut().enumerate().take(end).skip(start) {
                let k = t - start;
                *v = if k < ramp { (k + 1) as f64 / ramp as f64 } else { 1.0 };
            }
        }
        Shape::MultiState => {
            let active = (jitter(rng, arch.duty.min(0.9), 0.05) * len as f64) as usize;
            let start = rng.random_range(0..=len - active.min(len));
            let end = (start + active).min(len);
            let heat = start + (jitter(rng, 0.3, 0.2) * active as f64) as usize;
            let spin = start + (jitter(rng, 0.75, 0.05) * active as f64) as usize;
            let half = (arch.period / 2).max(1);
            for (t, v) in p.iter_mut().enumerate().take(end).skip(start) {
                *v = if t < heat {
                    1.0
                } else if t < spin {
                    if ((t - heat) / half).is_multiple_of(2) {
                        0.4
                    } else {
                        0.1
                    }
                } else {
                    0.7
                };
            }
        }
    }
    p
}

fn render(arch: &Archetype, len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let p = profile(arch, len, rng);
    let noise = (arch.noise_watts > 0.0).then(|| Normal::new(0.0, arch.noise_watts).expect("noise validated"));
    p.into_iter()
        .map(|level| {
            if level == 0.0 {
                return 0.0;
            }
            let clean = level * arch.base_watts;
            match &noise {
                Some(n) => (clean + n.sample(rng)).max(0.0),
                None => clean,
            }
        })
        .collect()
}

/// An aggregate made of `baseline_watts` plus non-overlapping rectangles
/// `(start, end, watts)` covering `start..end`.
pub fn rectangle_aggregate(
    length: usize,
    baseline_watts: f64,
    rectangles: &[(usize, usize, f64)],
) -> Result<PowerSignal> {
    let mut samples = vec![baseline_watts; length];
    for &(start, end, watts) in rectangles {
        if start >= end || end > length {
            return Err(Error::InvalidConfig(format!(
                "rectangle {start}..{end} outside 0..{length}"
            )));
        }
        for v in &mut samples[start..end] {
            *v += watts;
        }
    }
    PowerSignal::new(samples, None, "aggregate", DEFAULT_SAMPLE_RATE_HZ)
}
