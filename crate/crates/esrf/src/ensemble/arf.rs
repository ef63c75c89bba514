//! Adaptive random forest baseline: a fixed-size ensemble where a warning
//! signal starts a background tree for the member and a confirmed drift
//! swaps that background tree in.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::drift::{DriftMonitor, DriftSignal};
use crate::hoeffding_tree::{HoeffdingTree, TreeConfig};
use crate::streams::{Instance, Schema};
use crate::util::argmax;

use super::{predict_label, EnsembleError, EnsembleMember, POISSON_LAMBDA};

#[derive(Debug, Clone, PartialEq)]
pub struct ArfConfig {
    pub n_trees: usize,
    pub warn_delta: f64,
    pub drift_delta: f64,
    pub seed: u64,
}

impl Default for ArfConfig {
    fn default() -> Self {
        ArfConfig {
            n_trees: 100,
            warn_delta: crate::drift::DEFAULT_WARN_DELTA,
            drift_delta: crate::drift::DEFAULT_DRIFT_DELTA,
            seed: 0,
        }
    }
}

impl ArfConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_trees < 1 {
            return Err("ARF needs at least one tree".into());
        }
        if !(self.warn_delta > self.drift_delta) {
            return Err(format!(
                "warning delta {} must exceed drift delta {}",
                self.warn_delta, self.drift_delta
            ));
        }
        if !(self.drift_delta > 0.0 && self.warn_delta < 1.0) {
            return Err("detector deltas must be in (0,1)".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct ArfMember {
    member: EnsembleMember,
    /// Exists while the member is in warning; trains on the same weighted
    /// instances but never votes and carries no monitor of its own.
    background: Option<HoeffdingTree>,
}

/// Fixed-size adaptive random forest with the two-threshold warning/drift
/// scheme.
#[derive(Debug, Clone)]
pub struct ArfForest {
    schema: Arc<Schema>,
    config: ArfConfig,
    members: Vec<ArfMember>,
    poisson: Poisson<f64>,
    instances_trained: u64,
}

impl ArfForest {
    pub fn new(schema: Arc<Schema>, config: ArfConfig) -> Result<Self, EnsembleError> {
        if let Err(msg) = config.validate() {
            return Err(EnsembleError::Config(msg));
        }
        let tree_config = TreeConfig::for_schema(&schema);
        let members = (0..config.n_trees)
            .map(|id| ArfMember {
                member: EnsembleMember::new(
                    id as u64,
                    schema.clone(),
                    tree_config.clone(),
                    DriftMonitor::two_level(config.warn_delta, config.drift_delta),
                    config.seed,
                ),
                background: None,
            })
            .collect();
        Ok(ArfForest {
            schema,
            config,
            members,
            poisson: Poisson::new(POISSON_LAMBDA).expect("lambda is positive"),
            instances_trained: 0,
        })
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn config(&self) -> &ArfConfig {
        &self.config
    }

    pub fn n_trees(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> impl Iterator<Item = &EnsembleMember> {
        self.members.iter().map(|m| &m.member)
    }

    /// Members currently training a background replacement.
    pub fn background_count(&self) -> usize {
        self.members.iter().filter(|m| m.background.is_some()).count()
    }

    pub fn instances_trained(&self) -> u64 {
        self.instances_trained
    }

    pub fn predict_scores(&self, instance: &Instance) -> Result<(usize, Vec<f64>), EnsembleError> {
        let refs: Vec<&EnsembleMember> = self.members.iter().map(|m| &m.member).collect();
        predict_label(&refs, instance)
    }

    pub fn predict(&self, instance: &Instance) -> usize {
        self.predict_scores(instance)
            .expect("member list is never empty")
            .0
    }

    /// Trains every member (and its background tree, if any) with that
    /// member's Poisson(6) bag weight. A warning starts a background tree; a
    /// confirmed drift promotes the background tree (or resets in place) and
    /// clears the counters.
    pub fn train_on_instance(&mut self, instance: &Instance) -> Result<(), EnsembleError> {
        self.schema
            .validate(instance)
            .map_err(|e| EnsembleError::SchemaMismatch(e.to_string()))?;
        self.instances_trained += 1;
        let poisson = self.poisson;
        let schema = &self.schema;
        self.members
            .par_iter_mut()
            .with_min_len(8)
            .try_for_each(|slot| -> Result<(), EnsembleError> {
                let pred = argmax(&slot.member.tree.predict(instance)?);
                let bag_weight: f64 = poisson.sample(&mut slot.member.rng);
                if bag_weight > 0.0 {
                    slot.member.tree.train_weighted(instance, bag_weight)?;
                    if let Some(background) = slot.background.as_mut() {
                        background.train_weighted(instance, bag_weight)?;
                    }
                }
                let correct = pred == instance.class_index;
                slot.member.total_since_reset += 1;
                if correct {
                    slot.member.correct_since_reset += 1;
                }
                match slot.member.monitor.update(correct) {
                    DriftSignal::Warning => {
                        if slot.background.is_none() {
                            // Deterministic background stream derived from
                            // the member's own rng.
                            let seed = slot.member.rng.random::<u64>();
                            slot.background = Some(HoeffdingTree::with_rng(
                                schema.clone(),
                                slot.member.tree.config().clone(),
                                ChaCha12Rng::seed_from_u64(seed),
                            ));
                        }
                    }
                    DriftSignal::Drift => {
                        match slot.background.take() {
                            Some(background) => slot.member.tree = background,
                            None => slot.member.tree.reset(),
                        }
                        slot.member.correct_since_reset = 0;
                        slot.member.total_since_reset = 0;
                    }
                    DriftSignal::None => {}
                }
                Ok(())
            })
    }

    /// Fingerprint of the complete mutable state.
    pub fn state_digest(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        format!("{self:?}").hash(&mut hasher);
        hasher.finish()
    }
}
