//! Python bindings for the `powerprint` crate.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pp::descriptors::{Descriptor, DescriptorKind};
use pp::eval::{self, Classifier};
use pp::eventdetect;
use pp::iknn::{fit, IknnConfig, TrainingSet};
use pp::signal::{Dataset, PowerSignal};
use pp::store::{self, TrainedModel};
use pp::synth::{self, SynthConfig};
use pp::transform::{self, ShapePolicy};

fn to_py(e: pp::Error) -> PyErr {
    match e {
        pp::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn build_descriptor(name: &str, ltep_threshold: f64, bsif_seed: u64, policy: &str) -> PyResult<Descriptor> {
    let kind = match name.parse::<DescriptorKind>().map_err(to_py)? {
        DescriptorKind::Ltep { .. } => DescriptorKind::Ltep {
            threshold: ltep_threshold,
        },
        DescriptorKind::Bsif { .. } => DescriptorKind::Bsif { seed: bsif_seed },
        k => k,
    };
    let policy: ShapePolicy = policy.parse().map_err(to_py)?;
    Ok(Descriptor::new(kind).map_err(to_py)?.with_policy(policy))
}

fn signal(samples: Vec<f64>) -> PyResult<PowerSignal> {
    PowerSignal::from_samples(samples).map_err(to_py)
}

fn labeled_dataset(signals: Vec<Vec<f64>>, labels: Vec<String>) -> PyResult<Dataset> {
    if signals.len() != labels.len() {
        return Err(PyValueError::new_err(format!(
            "{} signals but {} labels",
            signals.len(),
            labels.len()
        )));
    }
    let signals = signals
        .into_iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (s, l))| PowerSignal::new(s, Some(l), format!("s{i}"), 1.0))
        .collect::<pp::Result<Vec<_>>>()
        .map_err(to_py)?;
    Dataset::from_signals(signals).map_err(to_py)
}

/// Min-max normalize to [0, 1]; a constant signal maps to zeros.
#[pyfunction]
fn normalize(samples: Vec<f64>) -> Vec<f64> {
    transform::normalize(&samples)
}

/// Normalize and reshape into a matrix, returned as a list of rows.
#[pyfunction]
#[pyo3(signature = (samples, policy = "square"))]
fn reshape(samples: Vec<f64>, policy: &str) -> PyResult<Vec<Vec<f64>>> {
    let policy: ShapePolicy = policy.parse().map_err(to_py)?;
    let m = transform::signal_to_matrix(&signal(samples)?, policy).map_err(to_py)?;
    Ok(m.values().chunks(m.cols()).map(<[f64]>::to_vec).collect())
}

/// Normalized descriptor histogram of one signature.
#[pyfunction]
#[pyo3(signature = (samples, descriptor = "lph", ltep_threshold = 0.02, bsif_seed = 7, policy = "square"))]
fn extract(
    samples: Vec<f64>,
    descriptor: &str,
    ltep_threshold: f64,
    bsif_seed: u64,
    policy: &str,
) -> PyResult<Vec<f64>> {
    let d = build_descriptor(descriptor, ltep_threshold, bsif_seed, policy)?;
    Ok(d.extract(&signal(samples)?).map_err(to_py)?.bins)
}

/// The synthetic benchmark corpus as `(label, source_id, samples)` tuples.
#[pyfunction]
#[pyo3(signature = (seed = 1, per_class = 40, length = 400))]
fn generate_synthetic(seed: u64, per_class: usize, length: usize) -> PyResult<Vec<(String, String, Vec<f64>)>> {
    let cfg = SynthConfig {
        seed,
        signatures_per_class: per_class,
        signal_length: length,
        ..SynthConfig::benchmark()
    };
    let data = synth::generate_synthetic(&cfg).map_err(to_py)?;
    Ok(data
        .signals()
        .iter()
        .map(|s| {
            (
                s.label().unwrap_or_default().to_string(),
                s.source_id().to_string(),
                s.samples().to_vec(),
            )
        })
        .collect())
}

/// Cosine similarity of two vectors.
#[pyfunction]
fn ncc(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    eval::ncc(&x, &y).map_err(to_py)
}

/// On/off edges as `(index, delta_watts, kind)` with kind "ON" or "OFF".
#[pyfunction]
#[pyo3(signature = (samples, threshold_watts = 30.0, smooth_window = 3))]
fn detect_edges(
    samples: Vec<f64>,
    threshold_watts: f64,
    smooth_window: usize,
) -> PyResult<Vec<(usize, f64, &'static str)>> {
    let events = eventdetect::detect_edges(&signal(samples)?, threshold_watts, smooth_window).map_err(to_py)?;
    Ok(events
        .iter()
        .map(|e| (e.index, e.delta_watts, e.kind.as_str()))
        .collect())
}

/// Baseline-subtracted event windows as `(start, end, samples)`.
#[pyfunction]
#[pyo3(signature = (samples, threshold_watts = 30.0, smooth_window = 3))]
fn segment(samples: Vec<f64>, threshold_watts: f64, smooth_window: usize) -> PyResult<Vec<(usize, usize, Vec<f64>)>> {
    let s = signal(samples)?;
    let events = eventdetect::detect_edges(&s, threshold_watts, smooth_window).map_err(to_py)?;
    Ok(eventdetect::segment_between(&s, &events)
        .into_iter()
        .map(|seg| (seg.start, seg.end, seg.samples))
        .collect())
}

/// Stratified k-fold evaluation with the IKNN classifier.
#[pyfunction]
#[pyo3(signature = (signals, labels, descriptor = "lph", k = 5, m = None, folds = 10, seed = 3))]
#[allow(clippy::too_many_arguments)]
fn kfold_eval<'py>(
    py: Python<'py>,
    signals: Vec<Vec<f64>>,
    labels: Vec<String>,
    descriptor: &str,
    k: usize,
    m: Option<usize>,
    folds: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let data = labeled_dataset(signals, labels)?;
    let d = build_descriptor(descriptor, 0.02, 7, "square")?;
    let cfg = IknnConfig { k, m, seed: 0 };
    let r = eval::kfold_eval(&data, &d, Classifier::Iknn(cfg), folds, seed).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("accuracy", r.accuracy)?;
    out.set_item("macro_f1", r.macro_f1)?;
    out.set_item("folds", r.folds)?;
    out.set_item("fold_hash", r.fold_hash)?;
    out.set_item("class_names", r.confusion.class_names)?;
    out.set_item("confusion", r.confusion.counts)?;
    out.set_item("warnings", r.warnings)?;
    Ok(out)
}

/// A fitted IKNN classifier bundled with its descriptor.
#[pyclass(name = "IknnModel", module = "powerprint")]
struct PyIknnModel {
    inner: TrainedModel,
}

#[pymethods]
impl PyIknnModel {
    /// Extract histograms from `signals` and fit.
    #[staticmethod]
    #[pyo3(signature = (signals, labels, descriptor = "lph", k = 5, m = None, seed = 0))]
    fn fit(
        signals: Vec<Vec<f64>>,
        labels: Vec<String>,
        descriptor: &str,
        k: usize,
        m: Option<usize>,
        seed: u64,
    ) -> PyResult<Self> {
        let data = labeled_dataset(signals, labels)?;
        let d = build_descriptor(descriptor, 0.02, 7, "square")?;
        let hist = eval::extract_all(&data, &d).map_err(to_py)?;
        let set =
            TrainingSet::new(data.class_names().to_vec(), hist, data.label_indices().map_err(to_py)?).map_err(to_py)?;
        let model = fit(&set, IknnConfig { k, m, seed }).map_err(to_py)?;
        Ok(Self {
            inner: TrainedModel { descriptor: d, model },
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: store::load_model(path).map_err(to_py)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        store::save_model(&self.inner, path).map_err(to_py)
    }

    /// Label of one raw signature.
    fn predict(&self, samples: Vec<f64>) -> PyResult<String> {
        let h = self.inner.descriptor.extract(&signal(samples)?).map_err(to_py)?;
        self.predict_histogram(h.bins)
    }

    fn predict_histogram(&self, histogram: Vec<f64>) -> PyResult<String> {
        Ok(self.inner.model.predict(&histogram).map_err(to_py)?.label)
    }

    #[getter]
    fn class_names(&self) -> Vec<String> {
        self.inner.model.class_names.clone()
    }

    #[getter]
    fn class_weights(&self) -> Vec<f64> {
        self.inner.model.class_weights.clone()
    }

    #[getter]
    fn entropy(&self) -> f64 {
        self.inner.model.entropy
    }

    #[getter]
    fn descriptor(&self) -> &'static str {
        self.inner.descriptor.kind().name()
    }

    fn __repr__(&self) -> String {
        format!(
            "IknnModel(descriptor={}, classes={}, k={}, subgroups={})",
            self.descriptor(),
            self.inner.model.class_names.len(),
            self.inner.model.config.k,
            self.inner.model.subgroups.len()
        )
    }
}

#[pymodule]
fn powerprint(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(reshape, m)?)?;
    m.add_function(wrap_pyfunction!(extract, m)?)?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(ncc, m)?)?;
    m.add_function(wrap_pyfunction!(detect_edges, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(kfold_eval, m)?)?;
    m.add_class::<PyIknnModel>()?;
    Ok(())
}
