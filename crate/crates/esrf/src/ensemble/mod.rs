//! Streaming forests: weighted-vote members with per-learner drift monitors
//! and Poisson(6) online bagging, the fixed-size ARF baseline and the
//! elastic swap variant that maintains forefront/candidate/grow sets.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

use crate::drift::{DriftMonitor, DriftSignal};
use crate::hoeffding_tree::{HoeffdingTree, TreeConfig, TreeError};
use crate::streams::{Instance, Schema};
use crate::util::argmax;

pub mod arf;
pub mod esrf;

pub use arf::{ArfConfig, ArfForest};
pub use esrf::{EsrfConfig, EsrfForest, ResizeDecision, SwapOutcome};

/// Bagging weight distribution fixed at lambda = 6.
pub const POISSON_LAMBDA: f64 = 6.0;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("empty ensemble")]
    EmptyEnsemble,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// EWMA weighting factor for an averaging window of `window` observations:
/// `1 - exp(-1/window)`, about `1/window` for large windows.
pub fn alpha_for_window(window: f64) -> f64 {
    assert!(window >= 1.0);
    -(-1.0 / window).exp_m1()
}

/// Exponentially weighted moving average of 0/1 correctness values.
#[derive(Debug, Clone, PartialEq)]
pub struct EwmaAccuracy {
    value: f64,
    alpha: f64,
}

impl EwmaAccuracy {
    pub fn new(alpha: f64) -> Self {
        assert!(alpha > 0.0 && alpha < 1.0, "alpha must be in (0,1)");
        EwmaAccuracy { value: 0.0, alpha }
    }

    pub fn for_window(window: f64) -> Self {
        Self::new(alpha_for_window(window))
    }

    pub fn update(&mut self, hit: bool) {
        let s = if hit { 1.0 } else { 0.0 };
        self.value += self.alpha * (s - self.value);
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[cfg(test)]
    pub(crate) fn set_value(&mut self, value: f64) {
        self.value = value;
    }
}

/// One tree plus its drift monitor, voting-weight counters and private rng
/// for the Poisson draws. Member rng streams derive from the forest seed and
/// the member id, so training is deterministic regardless of thread
/// scheduling.
#[derive(Debug, Clone)]
pub struct EnsembleMember {
    id: u64,
    pub tree: HoeffdingTree,
    pub monitor: DriftMonitor,
    correct_since_reset: u64,
    total_since_reset: u64,
    rng: ChaCha12Rng,
}

impl EnsembleMember {
    pub fn new(
        id: u64,
        schema: Arc<Schema>,
        tree_config: TreeConfig,
        monitor: DriftMonitor,
        master_seed: u64,
    ) -> Self {
        let mut tree_rng = ChaCha12Rng::seed_from_u64(master_seed);
        tree_rng.set_stream(2 * id + 1);
        let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
        rng.set_stream(2 * id + 2);
        EnsembleMember {
            id,
            tree: HoeffdingTree::with_rng(schema, tree_config, tree_rng),
            monitor,
            correct_since_reset: 0,
            total_since_reset: 0,
            rng,
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    /// Voting weight: correct / total since the last reset, 0 before any
    /// update.
    pub fn weight(&self) -> f64 {
        if self.total_since_reset == 0 {
            0.0
        } else {
            self.correct_since_reset as f64 / self.total_since_reset as f64
        }
    }

    pub fn counters(&self) -> (u64, u64) {
        (self.correct_since_reset, self.total_since_reset)
    }

    /// One training step: bag the instance with a Poisson draw from this
    /// member's rng, then score the supplied pre-training prediction against
    /// the label, updating counters and the drift monitor. A drift signal
    /// resets the tree, the counters and (internally) the monitor, leaving
    /// the member empty.
    pub fn absorb(
        &mut self,
        instance: &Instance,
        pre_prediction: usize,
        poisson: &Poisson<f64>,
    ) -> Result<DriftSignal, TreeError> {
        let bag_weight: f64 = poisson.sample(&mut self.rng);
        if bag_weight > 0.0 {
            self.tree.train_weighted(instance, bag_weight)?;
        }
        let correct = pre_prediction == instance.class_index;
        self.total_since_reset += 1;
        if correct {
            self.correct_since_reset += 1;
        }
        let signal = self.monitor.update(correct);
        if signal == DriftSignal::Drift {
            self.tree.reset();
            self.correct_since_reset = 0;
            self.total_since_reset = 0;
        }
        Ok(signal)
    }

    #[cfg(test)]
    pub(crate) fn set_counters(&mut self, correct: u64, total: u64) {
        assert!(correct <= total);
        self.correct_since_reset = correct;
        self.total_since_reset = total;
    }
}

/// Adds `weight * normalize(scores)` into the accumulator; members whose
/// scores sum to zero (or whose weight is zero) contribute nothing.
pub(crate) fn accumulate_vote(acc: &mut [f64], scores: &[f64], weight: f64) {
    if weight <= 0.0 {
        return;
    }
    let sum: f64 = scores.iter().sum();
    if sum <= 0.0 {
        return;
    }
    for (a, s) in acc.iter_mut().zip(scores) {
        *a += weight * s / sum;
    }
}

/// Weighted soft vote over a member set: each member's normalized score
/// vector is scaled by its voting weight and summed; the argmax (ties to the
/// lowest class index) wins. Does not touch any training state.
pub fn predict_label(
    members: &[&EnsembleMember],
    instance: &Instance,
) -> Result<(usize, Vec<f64>), EnsembleError> {
    if members.is_empty() {
        return Err(EnsembleError::EmptyEnsemble);
    }
    let num_classes = members[0].tree.schema().num_classes();
    let mut combined = vec![0.0; num_classes];
    for member in members {
        let scores = member.tree.predict(instance)?;
        accumulate_vote(&mut combined, &scores, member.weight());
    }
    Ok((argmax(&combined), combined))
}

#[cfg(test)]
mod tests;
