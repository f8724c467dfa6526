//! On/off edge detection on an aggregate power signal and extraction of the
//! per-event windows that feed the classifier.

use crate::error::{Error, Result};
use crate::signal::{PowerSignal, DEFAULT_SAMPLE_RATE_HZ};
use crate::transform::MIN_MATRIX_SAMPLES;

pub const DEFAULT_THRESHOLD_WATTS: f64 = 30.0;
pub const DEFAULT_SMOOTH_WINDOW: usize = 3;
const BASELINE_SAMPLES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    On,
    Off,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::On => "ON",
            EdgeKind::Off => "OFF",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeEvent {
    /// First sample at the new power level.
    pub index: usize,
    pub delta_watts: f64,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    /// `aggregate[start..end]` minus the pre-event baseline, floored at 0.
    pub samples: Vec<f64>,
}

impl Segment {
    pub fn to_signal(&self, source: &str) -> Result<PowerSignal> {
        PowerSignal::new(
            self.samples.clone(),
            None,
            format!("{source}:{}-{}", self.start, self.end),
            DEFAULT_SAMPLE_RATE_HZ,
        )
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Centered moving median; the signal is extended at both ends by repeating
/// its edge samples.
pub fn moving_median(samples: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let n = samples.len();
    let mut buf = vec![0.0; window];
    (0..n)
        .map(|t| {
            for (k, slot) in buf.iter_mut().enumerate() {
                let i = (t + k).saturating_sub(half).min(n - 1);
                *slot = samples[i];
            }
            median(&mut buf)
        })
        .collect()
}

pub fn detect_edges(aggregate: &PowerSignal, threshold_watts: f64, smooth_window: usize) -> Result<Vec<EdgeEvent>> {
    if !(threshold_watts > 0.0 && threshold_watts.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "threshold must be positive, got {threshold_watts}"
        )));
    }
    if smooth_window == 0 || smooth_window.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "smooth window must be an odd integer >= 1, got {smooth_window}"
        )));
    }
    if smooth_window >= aggregate.len() {
        return Err(Error::InvalidConfig(format!(
            "smooth window {smooth_window} must be shorter than the signal ({})",
            aggregate.len()
        )));
    }
    let smooth = moving_median(aggregate.samples(), smooth_window);

    let mut events = Vec::new();
    // current run of same-sign super-threshold differences: (peak index, peak diff, sum)
    let mut run: Option<(usize, f64, f64)> = None;
    let flush = |run: &mut Option<(usize, f64, f64)>, events: &mut Vec<EdgeEvent>| {
        if let Some((index, _, delta)) = run.take() {
            let kind = if delta > 0.0 { EdgeKind::On } else { EdgeKind::Off };
            events.push(EdgeEvent {
                index,
                delta_watts: delta,
                kind,
            });
        }
    };
    for t in 1..smooth.len() {
        let d = smooth[t] - smooth[t - 1];
        if d.abs() < threshold_watts {
            flush(&mut run, &mut events);
            continue;
        }
        match &mut run {
            Some((idx, peak, sum)) if (*sum > 0.0) == (d > 0.0) => {
                if d.abs() > peak.abs() {
                    *idx = t;
                    *peak = d;
                }
                *sum += d;
            }
            _ => {
                flush(&mut run, &mut events);
                run = Some((t, d, d));
            }
        }
    }
    flush(&mut run, &mut events);
    Ok(events)
}

/// Pairs each ON event with the next OFF event after it (or the end of the
/// signal) and subtracts the median of the samples just before the ON.
/// Windows shorter than 9 samples are dropped.
pub fn segment_between(aggregate: &PowerSignal, events: &[EdgeEvent]) -> Vec<Segment> {
    let x = aggregate.samples();
    let mut segments = Vec::new();
    for (i, on) in events.iter().enumerate() {
        if on.kind != EdgeKind::On {
            continue;
        }
        let end = events[i + 1..]
            .iter()
            .find(|e| e.kind == EdgeKind::Off && e.index > on.index)
            .map_or(x.len(), |e| e.index)
            .min(x.len());
        let start = on.index;
        if end <= start || end - start < MIN_MATRIX_SAMPLES {
            continue;
        }
        let pre = &x[start.saturating_sub(BASELINE_SAMPLES)..start];
        let baseline = if pre.is_empty() { 0.0 } else { median(&mut pre.to_vec()) };
        let samples = x[start..end].iter().map(|v| (v - baseline).max(0.0)).collect();
        segments.push(Segment { start, end, samples });
    }
    segments
}
