//! Streaming test-then-train harnesses: plain prequential evaluation and
//! distributed k-fold cross-validation, with the accuracy/time/size
//! statistics the benchmark tables report.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::ensemble::{ArfForest, EnsembleError, EsrfForest};
use crate::streams::{Instance, InstanceStream, StreamError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("empty input")]
    EmptyInput,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    /// A learner or stream error stopped the run; the timeline gathered so
    /// far rides along so callers can flush it.
    #[error("evaluation aborted: {cause}")]
    Aborted {
        partial: Box<MetricsTimeline>,
        cause: Box<EvalError>,
    },
}

/// An incremental classifier the harnesses can drive. Prediction must not
/// mutate training state.
pub trait StreamClassifier: Send {
    fn predict(&self, instance: &Instance) -> usize;
    fn train(&mut self, instance: &Instance) -> Result<(), EnsembleError>;
    /// Size of the actively voting set, for learners where that varies or is
    /// meaningful to report.
    fn active_size(&self) -> Option<usize>;
}

impl StreamClassifier for EsrfForest {
    fn predict(&self, instance: &Instance) -> usize {
        EsrfForest::predict(self, instance)
    }

    fn train(&mut self, instance: &Instance) -> Result<(), EnsembleError> {
        self.train_on_instance(instance).map(|_| ())
    }

    fn active_size(&self) -> Option<usize> {
        Some(self.fs_size())
    }
}

impl StreamClassifier for ArfForest {
    fn predict(&self, instance: &Instance) -> usize {
        ArfForest::predict(self, instance)
    }

    fn train(&mut self, instance: &Instance) -> Result<(), EnsembleError> {
        self.train_on_instance(instance)
    }

    fn active_size(&self) -> Option<usize> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Prequential,
    KFoldCv(usize),
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub mode: EvalMode,
    /// Instances between timeline snapshots.
    pub report_interval: u64,
    pub max_instances: Option<u64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            mode: EvalMode::Prequential,
            report_interval: 10_000,
            max_instances: None,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.report_interval < 1 {
            return Err(EvalError::Config("report interval must be >= 1".into()));
        }
        if let EvalMode::KFoldCv(k) = self.mode {
            if k < 2 {
                return Err(EvalError::Config(format!(
                    "cross-validation needs k >= 2, got {k}"
                )));
            }
        }
        Ok(())
    }
}

/// One timeline row: cumulative accuracy, current voting-set size (mean over
/// replicas under CV) and elapsed predict+train seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub instance: u64,
    pub cum_accuracy: f64,
    pub fs_size: Option<f64>,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeStats {
    pub mean: f64,
    pub stdev: f64,
    pub max: usize,
    pub min: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinalMetrics {
    pub instances: u64,
    /// None when no instance was evaluated (rendered as the "—" sentinel).
    pub accuracy_pct: Option<f64>,
    pub time_seconds: f64,
    pub size: Option<SizeStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsTimeline {
    pub snapshots: Vec<Snapshot>,
    pub final_metrics: FinalMetrics,
}

/// Population mean/stdev plus exact extrema of a size sequence.
pub fn size_stats(sizes: &[usize]) -> Result<SizeStats, EvalError> {
    if sizes.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = sizes.len() as f64;
    let mean = sizes.iter().map(|&s| s as f64).sum::<f64>() / n;
    let var = sizes
        .iter()
        .map(|&s| (s as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    Ok(SizeStats {
        mean,
        stdev: var.sqrt(),
        max: *sizes.iter().max().unwrap(),
        min: *sizes.iter().min().unwrap(),
    })
}

/// `baseline / other`: how many times faster the other run was.
pub fn speedup(time_baseline_s: f64, time_other_s: f64) -> Result<f64, EvalError> {
    if !(time_baseline_s > 0.0 && time_other_s > 0.0) {
        return Err(EvalError::Domain(format!(
            "speedup needs positive times, got {time_baseline_s} and {time_other_s}"
        )));
    }
    Ok(time_baseline_s / time_other_s)
}

/// Accuracy difference in percentage points, variant minus baseline.
pub fn accuracy_delta(acc_variant_pct: f64, acc_baseline_pct: f64) -> f64 {
    acc_variant_pct - acc_baseline_pct
}

struct ReplicaState<'a> {
    learner: &'a mut dyn StreamClassifier,
    correct: u64,
    tested: u64,
}

/// Shared loop: `k = 1` replica with no fold skipping is plain prequential.
fn run_loop(
    replicas: &mut [ReplicaState<'_>],
    stream: &mut dyn InstanceStream,
    config: &EvalConfig,
    skip_folds: bool,
) -> Result<MetricsTimeline, EvalError> {
    let k = replicas.len() as u64;
    let mut snapshots = Vec::new();
    let mut sizes: Vec<usize> = Vec::new();
    let mut elapsed = Duration::ZERO;
    let mut index: u64 = 0;

    let mut abort: Option<EvalError> = None;
    while config.max_instances.is_none_or(|max| index < max) {
        let instance = match stream.next() {
            None => break,
            Some(Ok(instance)) => instance,
            Some(Err(e)) => {
                abort = Some(e.into());
                break;
            }
        };
        let fold = (index % k) as usize;
        let started = Instant::now();
        for (replica, state) in replicas.iter_mut().enumerate() {
            // Test first, on every instance.
            let predicted = state.learner.predict(&instance);
            state.tested += 1;
            if predicted == instance.class_index {
                state.correct += 1;
            }
            // Then train, unless the instance falls in this replica's
            // held-out fold.
            if !(skip_folds && fold == replica) {
                if let Err(e) = state.learner.train(&instance) {
                    abort = Some(e.into());
                    break;
                }
            }
        }
        elapsed += started.elapsed();
        if abort.is_some() {
            break;
        }
        if let Some(size) = mean_active_size(replicas) {
            sizes.push(size.round() as usize);
        }
        index += 1;
        if index % config.report_interval == 0 {
            snapshots.push(Snapshot {
                instance: index,
                cum_accuracy: mean_accuracy(replicas).unwrap_or(0.0),
                fs_size: mean_active_size(replicas),
                elapsed_s: elapsed.as_secs_f64(),
            });
        }
    }

    if index > 0 && index % config.report_interval != 0 {
        snapshots.push(Snapshot {
            instance: index,
            cum_accuracy: mean_accuracy(replicas).unwrap_or(0.0),
            fs_size: mean_active_size(replicas),
            elapsed_s: elapsed.as_secs_f64(),
        });
    }

    let timeline = MetricsTimeline {
        snapshots,
        final_metrics: FinalMetrics {
            instances: index,
            accuracy_pct: mean_accuracy(replicas).map(|a| a * 100.0),
            time_seconds: elapsed.as_secs_f64(),
            size: if sizes.is_empty() {
                None
            } else {
                Some(size_stats(&sizes)?)
            },
        },
    };
    match abort {
        // Partial results stay with the caller through the error.
        Some(e) => Err(EvalError::Aborted {
            partial: Box::new(timeline),
            cause: Box::new(e),
        }),
        None => Ok(timeline),
    }
}

fn mean_accuracy(replicas: &[ReplicaState<'_>]) -> Option<f64> {
    if replicas.iter().any(|r| r.tested == 0) {
        return None;
    }
    let sum: f64 = replicas
        .iter()
        .map(|r| r.correct as f64 / r.tested as f64)
        .sum();
    Some(sum / replicas.len() as f64)
}

fn mean_active_size(replicas: &[ReplicaState<'_>]) -> Option<f64> {
    let sizes: Vec<usize> = replicas
        .iter()
        .filter_map(|r| r.learner.active_size())
        .collect();
    if sizes.len() == replicas.len() {
        Some(sizes.iter().sum::<usize>() as f64 / sizes.len() as f64)
    } else {
        None
    }
}

/// Test-then-train evaluation: every instance is scored before the learner
/// trains on it. Wall-clock covers predict+train only.
pub fn prequential_run(
    learner: &mut dyn StreamClassifier,
    stream: &mut dyn InstanceStream,
    config: &EvalConfig,
) -> Result<MetricsTimeline, EvalError> {
    config.validate()?;
    let mut replicas = vec![ReplicaState {
        learner,
        correct: 0,
        tested: 0,
    }];
    run_loop(&mut replicas, stream, config, false)
}

/// Distributed k-fold cross-validation: instance `i` belongs to fold
/// `i mod k`; every replica tests on every instance and trains on all folds
/// but its own. Reported accuracy is the mean over replicas.
pub fn kfold_cv_run(
    learner_factory: &mut dyn FnMut(usize) -> Box<dyn StreamClassifier>,
    stream: &mut dyn InstanceStream,
    k: usize,
    config: &EvalConfig,
) -> Result<MetricsTimeline, EvalError> {
    if k < 2 {
        return Err(EvalError::Config(format!(
            "cross-validation needs k >= 2, got {k}"
        )));
    }
    config.validate()?;
    let mut learners: Vec<Box<dyn StreamClassifier>> =
        (0..k).map(&mut *learner_factory).collect();
    let mut replicas: Vec<ReplicaState<'_>> = learners
        .iter_mut()
        .map(|learner| ReplicaState {
            learner: learner.as_mut(),
            correct: 0,
            tested: 0,
        })
        .collect();
    run_loop(&mut replicas, stream, config, true)
}
