//! Plain-text persistence for histogram tables and trained models.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a model
//! read back predicts bit-identically to the one that was saved.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::descriptors::{BsifBank, Descriptor, DescriptorKind};
use crate::error::{Error, Result};
use crate::iknn::{IknnConfig, IknnModel, TrainingSet};
use crate::signal::parse_floats;
use crate::transform::ShapePolicy;

pub const MODEL_HEADER: &str = "POWERPRINT-MODEL v1";

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramRecord {
    pub label: Option<String>,
    pub source_id: String,
    pub bins: Vec<f64>,
}

pub fn write_histograms<W: Write>(records: &[HistogramRecord], mut out: W) -> std::io::Result<()> {
    let dim = records.first().map_or(0, |r| r.bins.len());
    write!(out, "label,source_id")?;
    for b in 0..dim {
        write!(out, ",b{b}")?;
    }
    writeln!(out)?;
    for r in records {
        write!(out, "{},{}", r.label.as_deref().unwrap_or(""), r.source_id)?;
        for v in &r.bins {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn save_histograms(records: &[HistogramRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_histograms(records, &mut buf).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_histograms<R: BufRead>(reader: R) -> Result<Vec<HistogramRecord>> {
    let mut records: Vec<HistogramRecord> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            column: 0,
            message: e.to_string(),
        })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with("label,source_id") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 3 {
            return Err(Error::Parse {
                line: line_no,
                column: fields.len() + 1,
                message: "expected label,source_id and at least one bin".into(),
            });
        }
        let bins = parse_floats(&fields[2..], line_no, 3)?;
        if let Some(first) = records.first() {
            if first.bins.len() != bins.len() {
                return Err(Error::Parse {
                    line: line_no,
                    column: 3,
                    message: format!("expected {} bins, got {}", first.bins.len(), bins.len()),
                });
            }
        }
        records.push(HistogramRecord {
            label: match fields[0].trim() {
                "" => None,
                l => Some(l.to_string()),
            },
            source_id: fields[1].trim().to_string(),
            bins,
        });
    }
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    Ok(records)
}

pub fn load_histograms(path: impl AsRef<Path>) -> Result<Vec<HistogramRecord>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_histograms(BufReader::new(file))
}

/// Classes are numbered in order of first appearance.
pub fn training_set(records: &[HistogramRecord]) -> Result<TrainingSet> {
    let mut names: Vec<String> = Vec::new();
    let mut labels = Vec::with_capacity(records.len());
    for r in records {
        let label = r
            .label
            .as_deref()
            .ok_or_else(|| Error::InvalidSignal(format!("{} has no label", r.source_id)))?;
        let idx = match names.iter().position(|n| n == label) {
            Some(i) => i,
            None => {
                names.push(label.to_string());
                names.len() - 1
            }
        };
        labels.push(idx);
    }
    TrainingSet::new(names, records.iter().map(|r| r.bins.clone()).collect(), labels)
}

/// A fitted classifier with the descriptor its histograms came from.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub descriptor: Descriptor,
    pub model: IknnModel,
}

fn join<T: std::fmt::Display>(values: &[T]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn model_to_string(trained: &TrainedModel) -> String {
    let d = &trained.descriptor;
    let m = &trained.model;
    let mut s = String::new();
    let _ = writeln!(s, "{MODEL_HEADER}");
    let _ = writeln!(s, "descriptor {}", d.kind().name());
    match d.kind() {
        DescriptorKind::Ltep { threshold } => {
            let _ = writeln!(s, "threshold {threshold}");
        }
        DescriptorKind::Bsif { seed } => {
            let _ = writeln!(s, "bank_seed {seed}");
        }
        _ => {}
    }
    let _ = writeln!(s, "policy {}", d.policy());
    let _ = writeln!(s, "k {}", m.config.k);
    match m.config.m {
        Some(g) => {
            let _ = writeln!(s, "m {g}");
        }
        None => {
            let _ = writeln!(s, "m auto");
        }
    }
    let _ = writeln!(s, "seed {}", m.config.seed);
    let _ = writeln!(s, "dim {}", m.dim());
    let _ = writeln!(s, "entropy {}", m.entropy);
    let _ = writeln!(s, "classes {}", m.class_names.len());
    for c in 0..m.class_names.len() {
        let _ = writeln!(s, "class {} {} {}", m.priors[c], m.class_weights[c], m.class_names[c]);
    }
    let _ = writeln!(s, "train {}", m.histograms.len());
    for (h, l) in m.histograms.iter().zip(&m.labels) {
        let _ = writeln!(s, "row {l} {}", join(h));
    }
    let _ = writeln!(s, "groups {}", m.subgroups.len());
    for (g, c) in m.subgroups.iter().zip(&m.centroids) {
        let _ = writeln!(s, "group {}", join(g));
        let _ = writeln!(s, "centroid {}", join(c));
    }
    if let Some(bank) = d.bank() {
        for f in &bank.filters {
            let _ = writeln!(s, "filter {}", join(f));
        }
    }
    s.push_str("end\n");
    s
}

pub fn save_model(trained: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_string(trained)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    line_no: usize,
}

impl<'a> Lines<'a> {
    /// Next line split into its keyword and the remainder.
    fn next(&mut self, keyword: &str) -> Result<&'a str> {
        let (i, line) = self
            .iter
            .next()
            .ok_or_else(|| Error::Truncated(format!("expected {keyword:?} after line {}", self.line_no)))?;
        self.line_no = i + 1;
        let line = line.trim_end_matches('\r');
        let (kw, rest) = line.split_once(' ').unwrap_or((line, ""));
        if kw != keyword {
            return Err(self.err(format!("expected {keyword:?}, found {kw:?}")));
        }
        Ok(rest)
    }

    fn err(&self, message: String) -> Error {
        Error::Parse {
            line: self.line_no,
            column: 1,
            message,
        }
    }

    fn value<T: std::str::FromStr>(&mut self, keyword: &str) -> Result<T> {
        let rest = self.next(keyword)?;
        rest.trim()
            .parse()
            .map_err(|_| self.err(format!("bad {keyword} value {rest:?}")))
    }

    fn numbers_after<T: std::str::FromStr>(&mut self, keyword: &str) -> Result<Vec<T>> {
        let rest = self.next(keyword)?;
        self.numbers(rest)
    }

    fn numbers<T: std::str::FromStr>(&self, rest: &str) -> Result<Vec<T>> {
        rest.split_whitespace()
            .map(|t| t.parse().map_err(|_| self.err(format!("bad number {t:?}"))))
            .collect()
    }
}

pub fn parse_model(text: &str) -> Result<TrainedModel> {
    let mut lines = Lines {
        iter: text.lines().enumerate(),
        line_no: 0,
    };
    match text.lines().next() {
        Some(h) if h.trim_end() == MODEL_HEADER => {
            lines.iter.next();
            lines.line_no = 1;
        }
        Some(h) => return Err(Error::ModelVersion(format!("unsupported header {:?}", h.trim_end()))),
        None => return Err(Error::Truncated("empty file".into())),
    }

    let name = lines.next("descriptor")?.trim().to_string();
    let mut kind: DescriptorKind = name.parse()?;
    match &mut kind {
        DescriptorKind::Ltep { threshold } => *threshold = lines.value("threshold")?,
        DescriptorKind::Bsif { seed } => *seed = lines.value("bank_seed")?,
        _ => {}
    }
    let policy: ShapePolicy = lines.value("policy")?;
    let k: usize = lines.value("k")?;
    let m = match lines.next("m")?.trim() {
        "auto" => None,
        v => Some(v.parse().map_err(|_| lines.err(format!("bad m value {v:?}")))?),
    };
    let seed: u64 = lines.value("seed")?;
    let dim: usize = lines.value("dim")?;
    let entropy: f64 = lines.value("entropy")?;

    let n_classes: usize = lines.value("classes")?;
    let mut class_names = Vec::with_capacity(n_classes);
    let mut priors = Vec::with_capacity(n_classes);
    let mut class_weights = Vec::with_capacity(n_classes);
    for _ in 0..n_classes {
        let rest = lines.next("class")?;
        let mut parts = rest.splitn(3, ' ');
        let nums: Vec<f64> = lines.numbers(&format!(
            "{} {}",
            parts.next().unwrap_or(""),
            parts.next().unwrap_or("")
        ))?;
        let name = parts.next().unwrap_or("");
        if nums.len() != 2 || name.is_empty() {
            return Err(lines.err("expected prior, weight and name".into()));
        }
        priors.push(nums[0]);
        class_weights.push(nums[1]);
        class_names.push(name.to_string());
    }

    let n_train: usize = lines.value("train")?;
    let mut histograms = Vec::with_capacity(n_train);
    let mut labels = Vec::with_capacity(n_train);
    for _ in 0..n_train {
        let rest = lines.next("row")?;
        let (label, bins) = rest.split_once(' ').unwrap_or((rest, ""));
        let label: usize = label.parse().map_err(|_| lines.err(format!("bad label {label:?}")))?;
        let bins: Vec<f64> = lines.numbers(bins)?;
        if bins.len() != dim || label >= n_classes {
            return Err(lines.err("row does not match dim or class count".into()));
        }
        labels.push(label);
        histograms.push(bins);
    }

    let n_groups: usize = lines.value("groups")?;
    let mut subgroups = Vec::with_capacity(n_groups);
    let mut centroids = Vec::with_capacity(n_groups);
    for _ in 0..n_groups {
        let ids: Vec<usize> = lines.numbers_after("group")?;
        if ids.iter().any(|&i| i >= n_train) {
            return Err(lines.err("group member out of range".into()));
        }
        subgroups.push(ids);
        let c: Vec<f64> = lines.numbers_after("centroid")?;
        if c.len() != dim {
            return Err(lines.err("centroid does not match dim".into()));
        }
        centroids.push(c);
    }

    let descriptor = if let DescriptorKind::Bsif { seed } = kind {
        let mut filters = [[0.0; 9]; 8];
        for f in &mut filters {
            let v: Vec<f64> = lines.numbers_after("filter")?;
            *f = v.try_into().map_err(|_| lines.err("filter needs 9 values".into()))?;
        }
        Descriptor::bsif_with_bank(seed, BsifBank { filters })
    } else {
        Descriptor::new(kind)?
    }
    .with_policy(policy);
    lines.next("end")?;

    Ok(TrainedModel {
        descriptor,
        model: IknnModel {
            config: IknnConfig { k, m, seed },
            class_names,
            histograms,
            labels,
            priors,
            entropy,
            class_weights,
            subgroups,
            centroids,
        },
    })
}
