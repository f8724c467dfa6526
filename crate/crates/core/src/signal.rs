//! Power signatures, labeled datasets and their CSV interchange format.
//!
//! One record per line: `label,source_id,s0,s1,...,sn`. An empty label
//! field means the signature is unlabeled.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 1.0;

/// A 1D sequence of power samples in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSignal {
    samples: Vec<f64>,
    label: Option<String>,
    source_id: String,
    sample_rate_hz: f64,
}

impl PowerSignal {
    pub fn new(
        samples: Vec<f64>,
        label: Option<String>,
        source_id: impl Into<String>,
        sample_rate_hz: f64,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidSignal("no samples".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal(format!(
                "sample {i} is not finite ({})",
                samples[i]
            )));
        }
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::InvalidSignal(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        Ok(Self {
            samples,
            label,
            source_id: source_id.into(),
            sample_rate_hz,
        })
    }

    /// Unlabeled signal at the default sample rate.
    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, None, "", DEFAULT_SAMPLE_RATE_HZ)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// An ordered collection of signatures with the list of class names they use.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    signals: Vec<PowerSignal>,
    class_names: Vec<String>,
}

impl Dataset {
    pub fn new(signals: Vec<PowerSignal>, class_names: Vec<String>) -> Result<Self> {
        if signals.is_empty() {
            return Err(Error::NoRecords);
        }
        for (i, name) in class_names.iter().enumerate() {
            if class_names[..i].contains(name) {
                return Err(Error::InvalidConfig(format!("duplicate class name {name:?}")));
            }
        }
        for s in &signals {
            if let Some(l) = s.label() {
                if !class_names.iter().any(|c| c == l) {
                    return Err(Error::UnknownClass(l.to_string()));
                }
            }
        }
        Ok(Self { signals, class_names })
    }

    /// Builds a dataset whose class names are the distinct labels in first-seen order.
    pub fn from_signals(signals: Vec<PowerSignal>) -> Result<Self> {
        let mut class_names: Vec<String> = Vec::new();
        for s in &signals {
            if let Some(l) = s.label() {
                if !class_names.iter().any(|c| c == l) {
                    class_names.push(l.to_string());
                }
            }
        }
        Self::new(signals, class_names)
    }

    pub fn signals(&self) -> &[PowerSignal] {
        &self.signals
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == label)
    }

    /// Class index of every signal, or an error if any signal is unlabeled.
    pub fn label_indices(&self) -> Result<Vec<usize>> {
        self.signals
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let l = s
                    .label()
                    .ok_or_else(|| Error::InvalidSignal(format!("signal {i} has no label")))?;
                self.class_index(l).ok_or_else(|| Error::UnknownClass(l.to_string()))
            })
            .collect()
    }
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(BufReader::new(file))
}

pub fn read_csv<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut signals = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            column: 0,
            message: e.to_string(),
        })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        signals.push(parse_record(line, line_no)?);
    }
    if signals.is_empty() {
        return Err(Error::NoRecords);
    }
    Dataset::from_signals(signals)
}

fn parse_record(line: &str, line_no: usize) -> Result<PowerSignal> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() < 3 {
        return Err(Error::Parse {
            line: line_no,
            column: fields.len() + 1,
            message: "expected label,source_id and at least one sample".into(),
        });
    }
    let label = match fields[0].trim() {
        "" => None,
        l => Some(l.to_string()),
    };
    let samples = parse_floats(&fields[2..], line_no, 3)?;
    PowerSignal::new(samples, label, fields[1].trim(), DEFAULT_SAMPLE_RATE_HZ)
}

/// Parses numeric fields, rejecting non-finite values. `first_column` is the
/// 1-based column of `fields[0]`, used in error messages.
pub(crate) fn parse_floats(fields: &[&str], line_no: usize, first_column: usize) -> Result<Vec<f64>> {
    fields
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let column = first_column + j;
            let v: f64 = f.trim().parse().map_err(|_| Error::Parse {
                line: line_no,
                column,
                message: format!("cannot parse {:?} as a number", f.trim()),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    column,
                    message: format!("non-finite sample {:?}", f.trim()),
                });
            }
            Ok(v)
        })
        .collect()
}

pub fn write_csv<W: Write>(dataset: &Dataset, mut out: W) -> std::io::Result<()> {
    for s in dataset.signals() {
        write!(out, "{},{}", s.label().unwrap_or(""), s.source_id())?;
        for v in s.samples() {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_csv(dataset, &mut buf).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}
