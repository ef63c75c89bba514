//! Experiment orchestration: builds streams and learners from a
//! [`RunConfig`], runs the evaluation and writes the results/timeline CSVs.

use std::fs::OpenOptions;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::config::{ConfigError, FileFormat, LearnerKind, RunConfig, StreamKind};
use crate::ensemble::{ArfConfig, ArfForest, EnsembleError, EsrfConfig, EsrfForest};
use crate::evaluation::{
    kfold_cv_run, prequential_run, EvalConfig, EvalError, EvalMode, MetricsTimeline,
    StreamClassifier,
};
use crate::streams::{
    csv_reader::sniff_csv_schema, ArffReader, CsvReader, DriftStream, InstanceStream, StreamError,
};
use crate::util::derive_seed;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("baseline error: {0}")]
    Baseline(String),
    #[error("sweep error: {0}")]
    Sweep(String),
}

/// Exact header of results.csv.
pub const RESULTS_HEADER: &str = "dataset,learner,config,accuracy_pct,delta_pp,time_s,per_sample_us,speedup,size_mean,size_stdev,size_max,size_min,seed";
/// Exact header of timeline.csv.
pub const TIMELINE_HEADER: &str = "instance,cum_accuracy,fs_size,elapsed_s";
/// Sentinel for undefined numeric fields.
pub const NA: &str = "—";

/// One results.csv row.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub dataset: String,
    pub learner: String,
    pub config: String,
    pub accuracy_pct: Option<f64>,
    pub delta_pp: Option<f64>,
    pub time_s: f64,
    pub per_sample_us: Option<f64>,
    pub speedup: Option<f64>,
    pub size_mean: Option<f64>,
    pub size_stdev: Option<f64>,
    pub size_max: Option<usize>,
    pub size_min: Option<usize>,
    pub seed: u64,
}

fn fmt_opt(value: Option<f64>, precision: usize) -> String {
    match value {
        Some(v) => format!("{v:.precision$}"),
        None => NA.to_string(),
    }
}

impl ResultRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{:.2},{},{},{},{},{},{},{}",
            self.dataset,
            self.learner,
            self.config,
            fmt_opt(self.accuracy_pct, 4),
            fmt_opt(self.delta_pp, 2),
            self.time_s,
            fmt_opt(self.per_sample_us, 3),
            fmt_opt(self.speedup, 2),
            fmt_opt(self.size_mean, 2),
            fmt_opt(self.size_stdev, 2),
            self.size_max.map_or(NA.to_string(), |v| format!("{v}.00")),
            self.size_min.map_or(NA.to_string(), |v| format!("{v}.00")),
            self.seed
        )
    }

    /// Everything except the timing fields, for determinism comparisons.
    pub fn timeless_fields(&self) -> String {
        format!(
            "{}|{}|{}|{}|{}|{}|{}|{}|{}|{}",
            self.dataset,
            self.learner,
            self.config,
            fmt_opt(self.accuracy_pct, 4),
            fmt_opt(self.delta_pp, 2),
            fmt_opt(self.size_mean, 2),
            fmt_opt(self.size_stdev, 2),
            self.size_max.map_or(NA.to_string(), |v| v.to_string()),
            self.size_min.map_or(NA.to_string(), |v| v.to_string()),
            self.seed
        )
    }
}

/// Builds the configured instance stream; `replica_salt` derives independent
/// seeds for CV fold replicas and sweep points.
pub fn build_stream(
    config: &RunConfig,
    replica_salt: u64,
) -> Result<Box<dyn InstanceStream>, RunError> {
    use crate::streams::generators::*;

    let seed = derive_seed(config.seed, replica_salt);
    let base_seed = derive_seed(seed, 1);
    let target_seed = derive_seed(seed, 2);
    let mix_seed = derive_seed(seed, 3);

    let position = config.drift_position.unwrap_or(config.instances / 2);
    let gradual = matches!(
        config.stream,
        StreamKind::SeaG | StreamKind::AgrG | StreamKind::LedG
    );
    let width = config
        .drift_width
        .unwrap_or(if gradual { (config.instances / 10).max(1) } else { 1 });

    let stream: Box<dyn InstanceStream> = match config.stream {
        StreamKind::Sea => {
            let f = config.function.unwrap_or(1) as usize;
            Box::new(SeaGenerator::new(f, config.noise.unwrap_or(0.1), base_seed))
        }
        StreamKind::SeaA | StreamKind::SeaG => {
            let f = config.function.unwrap_or(1) as usize;
            let t = config.target_function.unwrap_or(2) as usize;
            let noise = config.noise.unwrap_or(0.1);
            let base = Box::new(SeaGenerator::new(f, noise, base_seed));
            let target = Box::new(SeaGenerator::new(t, noise, target_seed));
            Box::new(DriftStream::new(base, target, position, width, mix_seed)?)
        }
        StreamKind::Agrawal => {
            let f = config.function.unwrap_or(1) as usize;
            Box::new(AgrawalGenerator::new(
                f,
                config.perturbation.unwrap_or(0.05),
                base_seed,
            ))
        }
        StreamKind::AgrA | StreamKind::AgrG => {
            let f = config.function.unwrap_or(1) as usize;
            let t = config.target_function.unwrap_or(2) as usize;
            let perturbation = config.perturbation.unwrap_or(0.05);
            let base = Box::new(AgrawalGenerator::new(f, perturbation, base_seed));
            let target = Box::new(AgrawalGenerator::new(t, perturbation, target_seed));
            Box::new(DriftStream::new(base, target, position, width, mix_seed)?)
        }
        StreamKind::Led => {
            let shift = config.function.unwrap_or(0) as usize;
            Box::new(LedGenerator::new(config.noise.unwrap_or(0.1), shift, base_seed))
        }
        StreamKind::LedA | StreamKind::LedG => {
            let shift = config.function.unwrap_or(0) as usize;
            let target_shift = config.target_function.unwrap_or(4) as usize;
            let noise = config.noise.unwrap_or(0.1);
            let base = Box::new(LedGenerator::new(noise, shift, base_seed));
            let target = Box::new(LedGenerator::new(noise, target_shift, target_seed));
            Box::new(DriftStream::new(base, target, position, width, mix_seed)?)
        }
        StreamKind::Rtg => Box::new(RandomTreeGenerator::new(5, 3, 0.15, base_seed)),
        StreamKind::Rbf | StreamKind::RbfM | StreamKind::RbfF => {
            let default_speed = match config.stream {
                StreamKind::RbfM => 1e-4,
                StreamKind::RbfF => 1e-3,
                _ => 0.0,
            };
            Box::new(RbfGenerator::new(
                config.centroids.unwrap_or(50),
                config.speed.unwrap_or(default_speed),
                base_seed,
            ))
        }
        StreamKind::Hyperplane => Box::new(HyperplaneGenerator::new(
            config.mag_change.unwrap_or(0.001),
            config.noise.unwrap_or(0.05),
            config.drift_attrs.unwrap_or(2),
            base_seed,
        )),
        StreamKind::File => {
            let path = config.data.as_ref().expect("validated");
            match config.format {
                FileFormat::Arff => Box::new(ArffReader::open(path, config.class_index)?),
                FileFormat::Csv => {
                    let schema = sniff_csv_schema(path, config.has_header)?;
                    Box::new(CsvReader::open(
                        path,
                        std::sync::Arc::new(schema),
                        config.has_header,
                    )?)
                }
            }
        }
    };
    Ok(stream)
}

/// Builds the configured learner for one replica.
pub fn build_learner(
    config: &RunConfig,
    schema: std::sync::Arc<crate::streams::Schema>,
    replica_salt: u64,
) -> Result<Box<dyn StreamClassifier>, RunError> {
    let seed = derive_seed(config.seed, 0x10_000 + replica_salt);
    Ok(match config.learner {
        LearnerKind::Arf => Box::new(ArfForest::new(
            schema,
            ArfConfig {
                n_trees: config.n_trees,
                seed,
                ..ArfConfig::default()
            },
        )?),
        LearnerKind::Srf => Box::new(EsrfForest::new(
            schema,
            EsrfConfig {
                initial_fs: config.fs,
                cs_size: config.cs,
                min_fs: config.fs.min(config.min_fs),
                max_total: config.max_total.max(config.fs + config.cs),
                elastic: false,
                seed,
                ..EsrfConfig::default()
            },
        )?),
        LearnerKind::Esrf => Box::new(EsrfForest::new(
            schema,
            EsrfConfig {
                initial_fs: config.fs,
                cs_size: config.cs,
                resize_factor: config.r,
                t_grow: config.tg,
                t_shrink: config.ts,
                ewma_window: config.window,
                min_fs: config.min_fs,
                max_total: config.max_total,
                drift_delta: crate::drift::DEFAULT_DRIFT_DELTA,
                elastic: true,
                seed,
            },
        )?),
    })
}

fn eval_config(config: &RunConfig) -> EvalConfig {
    EvalConfig {
        mode: if config.folds > 1 {
            EvalMode::KFoldCv(config.folds)
        } else {
            EvalMode::Prequential
        },
        report_interval: config.report_interval,
        max_instances: if config.instances > 0 {
            Some(config.instances)
        } else {
            None
        },
    }
}

struct BaselineRow {
    accuracy_pct: f64,
    time_s: f64,
}

/// Finds the matching baseline row: same dataset, and either the requested
/// learner tag or any `arf` row.
fn lookup_baseline(
    path: &Path,
    dataset: &str,
    learner_tag: Option<&str>,
) -> Result<BaselineRow, RunError> {
    let mut text = String::new();
    std::fs::File::open(path)?.read_to_string(&mut text)?;
    for line in text.lines() {
        if line.starts_with('#') || line.starts_with("dataset,") || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 13 || fields[0] != dataset {
            continue;
        }
        let tag_matches = match learner_tag {
            Some(tag) => fields[1] == tag,
            None => fields[1].starts_with("arf"),
        };
        if !tag_matches {
            continue;
        }
        let accuracy_pct: f64 = fields[3]
            .parse()
            .map_err(|_| RunError::Baseline(format!("bad accuracy in baseline row: {line}")))?;
        let time_s: f64 = fields[5]
            .parse()
            .map_err(|_| RunError::Baseline(format!("bad time in baseline row: {line}")))?;
        return Ok(BaselineRow {
            accuracy_pct,
            time_s,
        });
    }
    Err(RunError::Baseline(format!(
        "no row for dataset '{dataset}' in {}",
        path.display()
    )))
}

fn timeline_to_row(config: &RunConfig, timeline: &MetricsTimeline) -> ResultRow {
    let finals = &timeline.final_metrics;
    ResultRow {
        dataset: config.dataset_label(),
        learner: config.learner.token().to_string(),
        config: config.config_summary(),
        accuracy_pct: finals.accuracy_pct,
        delta_pp: None,
        time_s: finals.time_seconds,
        per_sample_us: if finals.instances > 0 {
            Some(finals.time_seconds * 1e6 / finals.instances as f64)
        } else {
            None
        },
        speedup: None,
        size_mean: finals.size.map(|s| s.mean),
        size_stdev: finals.size.map(|s| s.stdev),
        size_max: finals.size.map(|s| s.max),
        size_min: finals.size.map(|s| s.min),
        seed: config.seed,
    }
}

fn write_timeline(path: &Path, timeline: &MetricsTimeline) -> Result<(), RunError> {
    let file = OpenOptions::new()
        .create(true)
        .write(true)
        .truncate(true)
        .open(path)?;
    let mut writer = BufWriter::new(file);
    writeln!(writer, "{TIMELINE_HEADER}")?;
    for snap in &timeline.snapshots {
        let fs_size = snap
            .fs_size
            .map_or(NA.to_string(), |v| format!("{v:.2}"));
        writeln!(
            writer,
            "{},{:.6},{},{:.3}",
            snap.instance, snap.cum_accuracy, fs_size, snap.elapsed_s
        )?;
    }
    writer.flush()?;
    Ok(())
}

/// Appends a row to the results CSV, creating it (hardware comment plus
/// header) when absent or empty. Appends from parallel sweep workers are
/// serialized through one process-wide writer lock.
pub fn append_result(path: &Path, row: &ResultRow) -> Result<(), RunError> {
    static WRITER: Mutex<()> = Mutex::new(());
    let _guard = WRITER.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
    let needs_header = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut writer = BufWriter::new(file);
    if needs_header {
        writeln!(
            writer,
            "# hardware: {} {}",
            std::env::consts::OS,
            std::env::consts::ARCH
        )?;
        writeln!(writer, "{RESULTS_HEADER}")?;
    }
    writeln!(writer, "{}", row.to_csv_line())?;
    writer.flush()?;
    Ok(())
}

/// Runs one experiment end to end: stream x learner x evaluation, results
/// appended to `config.out`, timeline written when requested. The rayon pool
/// honors `config.jobs` (0 = default).
pub fn run_experiment(config: &RunConfig) -> Result<ResultRow, RunError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| RunError::Sweep(e.to_string()))?;
    pool.install(|| run_experiment_in_pool(config))
}

fn run_experiment_in_pool(config: &RunConfig) -> Result<ResultRow, RunError> {
    let eval = eval_config(config);
    let outcome = if config.folds > 1 {
        let mut stream = build_stream(config, 0)?;
        let schema = stream.schema().clone();
        let mut failure: Option<RunError> = None;
        let mut factory = |replica: usize| -> Box<dyn StreamClassifier> {
            match build_learner(config, schema.clone(), replica as u64) {
                Ok(learner) => learner,
                Err(e) => {
                    failure = Some(e);
                    // Placeholder; the failure aborts before it is used.
                    Box::new(NullLearner)
                }
            }
        };
        let result = kfold_cv_run(&mut factory, stream.as_mut(), config.folds, &eval);
        if let Some(e) = failure {
            return Err(e);
        }
        result
    } else {
        let mut stream = build_stream(config, 0)?;
        let schema = stream.schema().clone();
        let mut learner = build_learner(config, schema, 0)?;
        prequential_run(learner.as_mut(), stream.as_mut(), &eval)
    };

    let timeline = match outcome {
        Ok(timeline) => timeline,
        Err(EvalError::Aborted { partial, cause }) => {
            // Flush whatever was gathered before surfacing the error.
            if let Some(path) = &config.timeline_out {
                write_timeline(path, &partial)?;
            }
            return Err(RunError::Eval(*cause));
        }
        Err(e) => return Err(RunError::Eval(e)),
    };

    let mut row = timeline_to_row(config, &timeline);
    if let Some(baseline_path) = &config.baseline {
        let baseline = lookup_baseline(
            baseline_path,
            &row.dataset,
            config.baseline_learner.as_deref(),
        )?;
        if let Some(acc) = row.accuracy_pct {
            row.delta_pp = Some(crate::evaluation::accuracy_delta(acc, baseline.accuracy_pct));
        }
        if row.time_s > 0.0 {
            row.speedup = Some(crate::evaluation::speedup(baseline.time_s, row.time_s)?);
        }
    }

    if let Some(path) = &config.timeline_out {
        write_timeline(path, &timeline)?;
    }
    append_result(&config.out, &row)?;
    Ok(row)
}

struct NullLearner;

impl StreamClassifier for NullLearner {
    fn predict(&self, _instance: &crate::streams::Instance) -> usize {
        0
    }
    fn train(&mut self, _instance: &crate::streams::Instance) -> Result<(), EnsembleError> {
        Ok(())
    }
    fn active_size(&self) -> Option<usize> {
        None
    }
}

/// Stream-parameter fields that must agree across a sweep.
fn stream_fingerprint(config: &RunConfig) -> String {
    format!(
        "{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{}|{}",
        config.stream,
        config.function,
        config.target_function,
        config.noise,
        config.perturbation,
        config.centroids,
        config.speed,
        config.mag_change,
        config.drift_attrs,
        config.drift_position,
        config.drift_width,
        config.data,
        config.instances,
        config.seed
    )
}

/// Runs a grid of configs sharing one stream spec (`config.jobs` grid points
/// in parallel), then writes the `tg x ts -> delta_pp` pivot table. The
/// first failure aborts the sweep; completed rows are already flushed.
pub fn emit_sweep(configs: &[RunConfig], pivot_out: &Path) -> Result<Vec<ResultRow>, RunError> {
    let first = configs
        .first()
        .ok_or_else(|| RunError::Sweep("empty config grid".into()))?;
    let fingerprint = stream_fingerprint(first);
    for config in configs {
        config.validate()?;
        if stream_fingerprint(config) != fingerprint {
            return Err(RunError::Sweep(
                "all sweep configs must share one stream spec".into(),
            ));
        }
    }

    let jobs = if first.jobs == 0 {
        rayon::current_num_threads()
    } else {
        first.jobs
    };
    let aborted = AtomicBool::new(false);
    let results: Mutex<Vec<Option<Result<ResultRow, RunError>>>> =
        Mutex::new((0..configs.len()).map(|_| None).collect());

    let next = std::sync::atomic::AtomicUsize::new(0);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for _ in 0..jobs.max(1).min(configs.len()) {
            handles.push(scope.spawn(|| loop {
                if aborted.load(Ordering::SeqCst) {
                    break;
                }
                let index = next.fetch_add(1, Ordering::SeqCst);
                if index >= configs.len() {
                    break;
                }
                // Grid points run single-threaded internally; the sweep
                // level owns the parallelism.
                let mut config = configs[index].clone();
                config.jobs = 1;
                let result = run_experiment(&config);
                if result.is_err() {
                    aborted.store(true, Ordering::SeqCst);
                }
                results.lock().unwrap()[index] = Some(result);
            }));
        }
        for handle in handles {
            let _ = handle.join();
        }
    });

    let collected = results.into_inner().unwrap();
    let mut rows = Vec::new();
    for result in collected.into_iter().flatten() {
        match result {
            Ok(row) => rows.push(row),
            Err(e) => {
                // Flag the abort in the results file next to the flushed rows.
                let file = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(&first.out)?;
                let mut writer = BufWriter::new(file);
                writeln!(writer, "# sweep aborted: {e}")?;
                writer.flush()?;
                return Err(e);
            }
        }
    }

    write_pivot(configs, &rows, pivot_out)?;
    Ok(rows)
}

/// Pivot CSV: first column `tg`, one column per `ts`, cells = delta_pp.
fn write_pivot(configs: &[RunConfig], rows: &[ResultRow], path: &Path) -> Result<(), RunError> {
    let mut tg_values: Vec<f64> = configs.iter().map(|c| c.tg).collect();
    tg_values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    tg_values.dedup();
    let mut ts_values: Vec<f64> = configs.iter().map(|c| c.ts).collect();
    ts_values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts_values.dedup();

    let cell = |tg: f64, ts: f64| -> String {
        configs
            .iter()
            .zip(rows)
            .find(|(c, _)| c.tg == tg && c.ts == ts)
            .map(|(_, row)| fmt_opt(row.delta_pp, 2))
            .unwrap_or_else(|| NA.to_string())
    };

    let file = OpenOptions::new()
        .create(true)
        .write(true)
        .truncate(true)
        .open(path)?;
    let mut writer = BufWriter::new(file);
    let header: Vec<String> = std::iter::once("tg".to_string())
        .chain(ts_values.iter().map(|ts| ts.to_string()))
        .collect();
    writeln!(writer, "{}", header.join(","))?;
    for &tg in &tg_values {
        let row: Vec<String> = std::iter::once(tg.to_string())
            .chain(ts_values.iter().map(|&ts| cell(tg, ts)))
            .collect();
        writeln!(writer, "{}", row.join(","))?;
    }
    writer.flush()?;
    Ok(())
}
