//! Python bindings for the streaming random forest library: stream
//! construction, the ARF and ESRF learners, prequential evaluation and the
//! config-driven experiment runner.

use std::sync::{Arc, Mutex};

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use esrf::config::RunConfig;
use esrf::ensemble::{ArfConfig, ArfForest, EsrfConfig, EsrfForest};
use esrf::evaluation::{prequential_run, EvalConfig, MetricsTimeline, StreamClassifier};
use esrf::streams::{ArffReader, AttributeKind, Instance, InstanceStream, Schema};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// A source of labeled instances: a synthetic generator (optionally with a
/// drift composition) or an ARFF file.
#[pyclass(name = "Stream")]
struct PyStream {
    inner: Mutex<Box<dyn InstanceStream>>,
}

impl PyStream {
    fn wrap(inner: Box<dyn InstanceStream>) -> Self {
        PyStream {
            inner: Mutex::new(inner),
        }
    }

    fn schema_arc(&self) -> Arc<Schema> {
        self.inner.lock().unwrap().schema().clone()
    }
}

#[pymethods]
impl PyStream {
    /// Builds a stream from flat `key=value` config text, e.g.
    /// `"stream=sea_a\ninstances=100000\nseed=42"`.
    #[staticmethod]
    fn from_config(text: &str) -> PyResult<Self> {
        let mut config = RunConfig::default();
        config.apply_text(text).map_err(value_err)?;
        config.validate().map_err(value_err)?;
        let inner = esrf::runner::build_stream(&config, 0).map_err(value_err)?;
        Ok(PyStream::wrap(inner))
    }

    /// Opens an ARFF file; the class attribute defaults to the last column.
    #[staticmethod]
    #[pyo3(signature = (path, class_index=None))]
    fn arff(path: &str, class_index: Option<usize>) -> PyResult<Self> {
        let reader = ArffReader::open(path, class_index).map_err(value_err)?;
        Ok(PyStream::wrap(Box::new(reader)))
    }

    /// Schema as a dict: attribute (name, kind) pairs and the class labels.
    fn schema<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let guard = self.inner.lock().unwrap();
        let schema = guard.schema();
        let dict = PyDict::new(py);
        let attrs: Vec<(String, String)> = schema
            .attributes()
            .iter()
            .map(|a| {
                let kind = match &a.kind {
                    AttributeKind::Numeric => "numeric".to_string(),
                    AttributeKind::Nominal(values) => format!("nominal({})", values.join("|")),
                };
                (a.name.clone(), kind)
            })
            .collect();
        dict.set_item("attributes", attrs)?;
        dict.set_item("classes", schema.class_labels().to_vec())?;
        Ok(dict)
    }

    /// Next `n` instances as (values, class_index) tuples.
    fn take(&self, n: usize) -> PyResult<Vec<(Vec<f64>, usize)>> {
        let mut inner = self.inner.lock().unwrap();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            match inner.next() {
                None => break,
                Some(Ok(instance)) => out.push((instance.values, instance.class_index)),
                Some(Err(e)) => return Err(runtime_err(e)),
            }
        }
        Ok(out)
    }
}

fn timeline_dict<'py>(py: Python<'py>, timeline: &MetricsTimeline) -> PyResult<Bound<'py, PyDict>> {
    let finals = &timeline.final_metrics;
    let dict = PyDict::new(py);
    dict.set_item("instances", finals.instances)?;
    dict.set_item("accuracy_pct", finals.accuracy_pct)?;
    dict.set_item("time_s", finals.time_seconds)?;
    if let Some(size) = finals.size {
        dict.set_item("size_mean", size.mean)?;
        dict.set_item("size_stdev", size.stdev)?;
        dict.set_item("size_max", size.max)?;
        dict.set_item("size_min", size.min)?;
    }
    let snapshots: Vec<(u64, f64, Option<f64>, f64)> = timeline
        .snapshots
        .iter()
        .map(|s| (s.instance, s.cum_accuracy, s.fs_size, s.elapsed_s))
        .collect();
    dict.set_item("snapshots", snapshots)?;
    Ok(dict)
}

fn run_prequential(
    py: Python<'_>,
    learner: &mut dyn StreamClassifier,
    stream: &PyStream,
    max_instances: Option<u64>,
    report_interval: u64,
) -> PyResult<Py<PyDict>> {
    let config = EvalConfig {
        report_interval,
        max_instances,
        ..EvalConfig::default()
    };
    let mut inner = stream.inner.lock().unwrap();
    let timeline =
        prequential_run(learner, inner.as_mut(), &config).map_err(runtime_err)?;
    Ok(timeline_dict(py, &timeline)?.into())
}

/// Elastic swap random forest classifier.
#[pyclass(name = "Esrf")]
struct PyEsrf {
    forest: EsrfForest,
}

#[pymethods]
impl PyEsrf {
    /// The schema comes from the stream the model will consume.
    #[new]
    #[pyo3(signature = (stream, fs=10, cs=10, r=1, tg=0.01, ts=0.001, window=2000.0,
                        min_fs=10, max_total=100, elastic=true, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        stream: &PyStream,
        fs: usize,
        cs: usize,
        r: usize,
        tg: f64,
        ts: f64,
        window: f64,
        min_fs: usize,
        max_total: usize,
        elastic: bool,
        seed: u64,
    ) -> PyResult<Self> {
        let config = EsrfConfig {
            initial_fs: fs,
            cs_size: cs,
            resize_factor: r,
            t_grow: tg,
            t_shrink: ts,
            ewma_window: window,
            min_fs: min_fs.min(fs),
            max_total,
            elastic,
            seed,
            ..EsrfConfig::default()
        };
        let forest = EsrfForest::new(stream.schema_arc(), config).map_err(value_err)?;
        Ok(PyEsrf { forest })
    }

    fn predict(&self, values: Vec<f64>) -> usize {
        self.forest.predict(&Instance::new(values, 0))
    }

    fn predict_scores(&self, values: Vec<f64>) -> PyResult<(usize, Vec<f64>)> {
        self.forest
            .predict_scores(&Instance::new(values, 0))
            .map_err(runtime_err)
    }

    fn train(&mut self, values: Vec<f64>, label: usize) -> PyResult<()> {
        self.forest
            .train_on_instance(&Instance::new(values, label))
            .map(|_| ())
            .map_err(runtime_err)
    }

    /// Test-then-train over the stream; returns the metrics as a dict.
    #[pyo3(signature = (stream, max_instances=None, report_interval=10_000))]
    fn prequential(
        &mut self,
        py: Python<'_>,
        stream: &PyStream,
        max_instances: Option<u64>,
        report_interval: u64,
    ) -> PyResult<Py<PyDict>> {
        run_prequential(py, &mut self.forest, stream, max_instances, report_interval)
    }

    fn fs_size(&self) -> usize {
        self.forest.fs_size()
    }

    fn total_members(&self) -> usize {
        self.forest.total_members()
    }

    /// Voting weights of the forefront members.
    fn forefront_weights(&self) -> Vec<f64> {
        self.forest.forefront().iter().map(|m| m.weight()).collect()
    }
}

/// Adaptive random forest baseline classifier.
#[pyclass(name = "Arf")]
struct PyArf {
    forest: ArfForest,
}

#[pymethods]
impl PyArf {
    #[new]
    #[pyo3(signature = (stream, n_trees=100, seed=0))]
    fn new(stream: &PyStream, n_trees: usize, seed: u64) -> PyResult<Self> {
        let config = ArfConfig {
            n_trees,
            seed,
            ..ArfConfig::default()
        };
        let forest = ArfForest::new(stream.schema_arc(), config).map_err(value_err)?;
        Ok(PyArf { forest })
    }

    fn predict(&self, values: Vec<f64>) -> usize {
        self.forest.predict(&Instance::new(values, 0))
    }

    fn train(&mut self, values: Vec<f64>, label: usize) -> PyResult<()> {
        self.forest
            .train_on_instance(&Instance::new(values, label))
            .map_err(runtime_err)
    }

    #[pyo3(signature = (stream, max_instances=None, report_interval=10_000))]
    fn prequential(
        &mut self,
        py: Python<'_>,
        stream: &PyStream,
        max_instances: Option<u64>,
        report_interval: u64,
    ) -> PyResult<Py<PyDict>> {
        run_prequential(py, &mut self.forest, stream, max_instances, report_interval)
    }

    fn n_trees(&self) -> usize {
        self.forest.n_trees()
    }

    fn background_count(&self) -> usize {
        self.forest.background_count()
    }
}

/// Runs a full experiment from flat `key=value` config text (same format as
/// the `esrf` CLI) and returns the result row as a dict.
#[pyfunction]
fn run_experiment(py: Python<'_>, config_text: &str) -> PyResult<Py<PyDict>> {
    let config = RunConfig::parse(config_text).map_err(value_err)?;
    let row = esrf::runner::run_experiment(&config).map_err(runtime_err)?;
    let dict = PyDict::new(py);
    dict.set_item("dataset", row.dataset)?;
    dict.set_item("learner", row.learner)?;
    dict.set_item("config", row.config)?;
    dict.set_item("accuracy_pct", row.accuracy_pct)?;
    dict.set_item("delta_pp", row.delta_pp)?;
    dict.set_item("time_s", row.time_s)?;
    dict.set_item("per_sample_us", row.per_sample_us)?;
    dict.set_item("speedup", row.speedup)?;
    dict.set_item("size_mean", row.size_mean)?;
    dict.set_item("size_stdev", row.size_stdev)?;
    dict.set_item("size_max", row.size_max)?;
    dict.set_item("size_min", row.size_min)?;
    dict.set_item("seed", row.seed)?;
    Ok(dict.into())
}

#[pymodule]
fn esrf_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStream>()?;
    m.add_class::<PyEsrf>()?;
    m.add_class::<PyArf>()?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
