//! Cross-validation, classification metrics and normalized cross-correlation.

use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::descriptors::Descriptor;
use crate::error::{Error, Result};
use crate::iknn::{fit, knn_predict, IknnConfig, KnnMetric, TrainingSet};
use crate::signal::Dataset;

pub const DEFAULT_FOLDS: usize = 10;

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(class_names: Vec<String>) -> Self {
        let n = class_names.len();
        Self {
            class_names,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn from_predictions(class_names: Vec<String>, truth: &[usize], predicted: &[usize]) -> Self {
        let mut m = Self::new(class_names);
        for (&t, &p) in truth.iter().zip(predicted) {
            m.counts[t][p] += 1;
        }
        m
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for (row, o) in self.counts.iter_mut().zip(&other.counts) {
            for (c, v) in row.iter_mut().zip(o) {
                *c += v;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn is_diagonal(&self) -> bool {
        self.counts
            .iter()
            .enumerate()
            .all(|(i, row)| row.iter().enumerate().all(|(j, &v)| i == j || v == 0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassMetrics>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accuracy plus one-vs-rest precision, recall and F1 per class. Zero
/// denominators yield 0.
pub fn metrics(confusion: &ConfusionMatrix) -> Result<Metrics> {
    let total = confusion.total();
    if total == 0 {
        return Err(Error::InvalidConfig("empty confusion matrix".into()));
    }
    let n = confusion.counts.len();
    let per_class: Vec<ClassMetrics> = (0..n)
        .map(|c| {
            let tp = confusion.counts[c][c];
            let predicted: u64 = (0..n).map(|r| confusion.counts[r][c]).sum();
            let actual: u64 = confusion.counts[c].iter().sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, actual);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                precision,
                recall,
                f1,
                support: actual,
            }
        })
        .collect();
    let macro_f1 = per_class.iter().map(|m| m.f1).sum::<f64>() / n as f64;
    Ok(Metrics {
        accuracy: ratio(confusion.trace(), total),
        macro_f1,
        per_class,
    })
}

/// Cosine of the angle between `x` and `y`.
pub fn ncc(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::ZeroVector);
    }
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok((dot / (nx * ny)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NccMatrix {
    pub values: Vec<Vec<f64>>,
}

impl NccMatrix {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean_off_diagonal(&self) -> f64 {
        let n = self.values.len();
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    sum += self.values[i][j];
                }
            }
        }
        sum / (n * (n - 1)) as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.values {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn ncc_matrix(vectors: &[Vec<f64>]) -> Result<NccMatrix> {
    if vectors.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "ncc matrix needs at least 2 vectors, got {}",
            vectors.len()
        )));
    }
    let n = vectors.len();
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        values[i][i] = ncc(&vectors[i], &vectors[i])?;
        for j in i + 1..n {
            let v = ncc(&vectors[i], &vectors[j])?;
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    Ok(NccMatrix { values })
}

/// Up to `per_class` signal indices drawn without replacement from each
/// class, in class order.
pub fn sample_per_class(labels: &[usize], n_classes: usize, per_class: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_classes)
        .map(|c| {
            let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
            members.shuffle(&mut rng);
            members.truncate(per_class);
            members.sort_unstable();
            members
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Classifier {
    Iknn(IknnConfig),
    Knn { k: usize, metric: KnnMetric },
}

impl Classifier {
    pub fn describe(&self) -> String {
        match self {
            Classifier::Iknn(cfg) => match cfg.m {
                Some(m) => format!("iknn(k={};m={};seed={})", cfg.k, m, cfg.seed),
                None => format!("iknn(k={};m=auto;seed={})", cfg.k, cfg.seed),
            },
            Classifier::Knn { k, metric } => format!("knn(k={k};metric={metric})"),
        }
    }

    fn fit_predict(&self, train: &TrainingSet, queries: &[Vec<f64>]) -> Result<(Vec<usize>, f64, f64)> {
        match self {
            Classifier::Iknn(cfg) => {
                let t0 = Instant::now();
                let model = fit(train, *cfg)?;
                let train_secs = t0.elapsed().as_secs_f64();
                let t1 = Instant::now();
                let pred = queries
                    .iter()
                    .map(|q| model.predict(q).map(|p| p.class))
                    .collect::<Result<Vec<_>>>()?;
                Ok((pred, train_secs, t1.elapsed().as_secs_f64()))
            }
            Classifier::Knn { k, metric } => {
                let t1 = Instant::now();
                let pred = queries
                    .iter()
                    .map(|q| knn_predict(train, q, *k, *metric))
                    .collect::<Result<Vec<_>>>()?;
                Ok((pred, 0.0, t1.elapsed().as_secs_f64()))
            }
        }
    }
}

/// Stratified fold id per sample: each class is shuffled and dealt round-robin,
/// continuing where the previous class stopped so folds stay balanced overall.
pub fn stratified_folds(labels: &[usize], n_classes: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut offset = 0;
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        members.shuffle(&mut rng);
        for (pos, &i) in members.iter().enumerate() {
            assignment[i] = (offset + pos) % folds;
        }
        offset += members.len();
    }
    assignment
}

/// SHA-256 over the fold ids, hex encoded.
pub fn fold_hash(assignment: &[usize]) -> String {
    let mut h = Sha256::new();
    for &f in assignment {
        h.update((f as u64).to_le_bytes());
    }
    h.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldTiming {
    pub train_secs: f64,
    pub test_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub descriptor: String,
    pub histogram_length: usize,
    pub classifier: String,
    pub folds: usize,
    pub seed: u64,
    pub fold_hash: String,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    /// Predicted class per signature, in dataset order.
    pub predictions: Vec<usize>,
    pub warnings: Vec<String>,
    pub extraction_secs: f64,
    pub fold_timings: Vec<FoldTiming>,
}

impl EvalReport {
    pub fn train_secs(&self) -> f64 {
        self.fold_timings.iter().map(|t| t.train_secs).sum()
    }

    pub fn test_secs(&self) -> f64 {
        self.fold_timings.iter().map(|t| t.test_secs).sum()
    }

    /// Everything except wall-clock timings, as `key,value` lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,value\n");
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(out, "{k},{v}");
        };
        kv("descriptor", &self.descriptor);
        kv("histogram_length", &self.histogram_length);
        kv("classifier", &self.classifier);
        kv("folds", &self.folds);
        kv("seed", &self.seed);
        kv("fold_hash", &self.fold_hash);
        kv("signatures", &self.confusion.total());
        kv("accuracy", &self.accuracy);
        kv("macro_f1", &self.macro_f1);
        for (name, m) in self.confusion.class_names.iter().zip(&self.per_class) {
            kv(&format!("precision:{name}"), &m.precision);
            kv(&format!("recall:{name}"), &m.recall);
            kv(&format!("f1:{name}"), &m.f1);
            kv(&format!("support:{name}"), &m.support);
        }
        for (t, row) in self.confusion.class_names.iter().zip(&self.confusion.counts) {
            for (p, count) in self.confusion.class_names.iter().zip(row) {
                kv(&format!("confusion:{t}:{p}"), count);
            }
        }
        for w in &self.warnings {
            kv("warning", &w.replace(',', ";"));
        }
        kv("note", &"zero-denominator precision or recall is reported as 0");
        out
    }

    pub fn timing_summary(&self) -> String {
        format!(
            "{}: extraction {:.3}s, train {:.3}s, test {:.3}s",
            self.descriptor,
            self.extraction_secs,
            self.train_secs(),
            self.test_secs()
        )
    }

    pub fn timings_csv(&self) -> String {
        let mut out = String::from("fold,train_secs,test_secs\n");
        for (i, t) in self.fold_timings.iter().enumerate() {
            let _ = writeln!(out, "{i},{},{}", t.train_secs, t.test_secs);
        }
        let _ = writeln!(out, "extraction,{},", self.extraction_secs);
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "descriptor {} ({} bins), {}, {} folds, seed {}",
            self.descriptor, self.histogram_length, self.classifier, self.folds, self.seed
        );
        let _ = writeln!(out, "fold hash {}", self.fold_hash);
        let _ = writeln!(out, "accuracy {:.4}  macro-F1 {:.4}", self.accuracy, self.macro_f1);
        let width = self
            .confusion
            .class_names
            .iter()
            .map(|n| n.len())
            .max()
            .unwrap_or(5)
            .max(5);
        let _ = writeln!(out, "{:<width$}  precision  recall     f1  support", "class");
        for (name, m) in self.confusion.class_names.iter().zip(&self.per_class) {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.4}  {:>6.4}  {:>6.4}  {:>7}",
                name, m.precision, m.recall, m.f1, m.support
            );
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out.push_str("note: zero-denominator precision or recall is reported as 0\n");
        out
    }
}

/// Histograms of every signature, in dataset order.
pub fn extract_all(dataset: &Dataset, descriptor: &Descriptor) -> Result<Vec<Vec<f64>>> {
    dataset
        .signals()
        .par_iter()
        .map(|s| descriptor.extract(s).map(|h| h.bins))
        .collect()
}

/// Folds actually used and any warning about reducing them.
fn effective_folds(labels: &[usize], n_classes: usize, folds: usize) -> Result<(usize, Vec<String>)> {
    if folds < 2 {
        return Err(Error::InvalidConfig(format!("folds must be >= 2, got {folds}")));
    }
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        counts[l] += 1;
    }
    let present: Vec<usize> = counts.iter().copied().filter(|&c| c > 0).collect();
    if present.len() < 2 {
        return Err(Error::TooFewClasses(present.len()));
    }
    let smallest = *present.iter().min().expect("two classes present");
    if smallest < 2 {
        return Err(Error::InvalidConfig(
            "dataset too small: every class needs at least 2 signatures".into(),
        ));
    }
    if smallest < folds {
        return Ok((
            smallest,
            vec![format!(
                "folds reduced from {folds} to {smallest} (smallest class size)"
            )],
        ));
    }
    Ok((folds, Vec::new()))
}

/// Cross-validates precomputed histograms.
#[allow(clippy::too_many_arguments)]
pub fn kfold_eval_features(
    histograms: &[Vec<f64>],
    labels: &[usize],
    class_names: &[String],
    descriptor_name: &str,
    classifier: Classifier,
    folds: usize,
    seed: u64,
) -> Result<EvalReport> {
    let (folds, warnings) = effective_folds(labels, class_names.len(), folds)?;
    let assignment = stratified_folds(labels, class_names.len(), folds, seed);
    let all = TrainingSet::new(class_names.to_vec(), histograms.to_vec(), labels.to_vec())?;

    let per_fold: Vec<(Vec<usize>, Vec<usize>, FoldTiming)> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let train_idx: Vec<usize> = (0..labels.len()).filter(|&i| assignment[i] != f).collect();
            let test_idx: Vec<usize> = (0..labels.len()).filter(|&i| assignment[i] == f).collect();
            let train = all.subset(&train_idx)?;
            let queries: Vec<Vec<f64>> = test_idx.iter().map(|&i| histograms[i].clone()).collect();
            let (pred, train_secs, test_secs) = classifier.fit_predict(&train, &queries)?;
            Ok((test_idx, pred, FoldTiming { train_secs, test_secs }))
        })
        .collect::<Result<_>>()?;

    let mut predictions = vec![usize::MAX; labels.len()];
    let mut fold_timings = Vec::with_capacity(folds);
    for (test_idx, pred, timing) in per_fold {
        for (&i, &p) in test_idx.iter().zip(&pred) {
            predictions[i] = p;
        }
        fold_timings.push(timing);
    }
    let confusion = ConfusionMatrix::from_predictions(class_names.to_vec(), labels, &predictions);
    let m = metrics(&confusion)?;
    Ok(EvalReport {
        descriptor: descriptor_name.to_string(),
        histogram_length: all.dim(),
        classifier: classifier.describe(),
        folds,
        seed,
        fold_hash: fold_hash(&assignment),
        confusion,
        accuracy: m.accuracy,
        macro_f1: m.macro_f1,
        per_class: m.per_class,
        predictions,
        warnings,
        extraction_secs: 0.0,
        fold_timings,
    })
}

pub fn kfold_eval(
    dataset: &Dataset,
    descriptor: &Descriptor,
    classifier: Classifier,
    folds: usize,
    seed: u64,
) -> Result<EvalReport> {
    let labels = dataset.label_indices()?;
    let t0 = Instant::now();
    let histograms = extract_all(dataset, descriptor)?;
    let extraction_secs = t0.elapsed().as_secs_f64();
    let mut report = kfold_eval_features(
        &histograms,
        &labels,
        dataset.class_names(),
        descriptor.kind().name(),
        classifier,
        folds,
        seed,
    )?;
    report.extraction_secs = extraction_secs;
    Ok(report)
}

/// One [`kfold_eval`] per descriptor over the same fold assignment.
pub fn compare_descriptors(
    dataset: &Dataset,
    descriptors: &[Descriptor],
    classifier: Classifier,
    folds: usize,
    seed: u64,
) -> Result<Vec<EvalReport>> {
    descriptors
        .iter()
        .map(|d| kfold_eval(dataset, d, classifier, folds, seed))
        .collect()
}

pub fn comparison_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("descriptor,histogram_length,accuracy,f1_score,fold_hash\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.descriptor, r.histogram_length, r.accuracy, r.macro_f1, r.fold_hash
        );
    }
    out
}

pub fn comparison_timings_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("descriptor,extraction_secs,train_secs,test_secs\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.descriptor,
            r.extraction_secs,
            r.train_secs(),
            r.test_secs()
        );
    }
    out
}
