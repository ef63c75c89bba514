//! Elastic swap random forest: a forefront set votes, a candidate set trains
//! in the background and swaps in when it outperforms, and a grow set backs
//! the elastic resize decision driven by three shadow-ensemble EWMAs.

use std::sync::Arc;

use rand_distr::Poisson;
use rayon::prelude::*;

use crate::drift::DriftMonitor;
use crate::hoeffding_tree::TreeConfig;
use crate::streams::{Instance, Schema};
use crate::util::argmax;

use super::{
    accumulate_vote, alpha_for_window, predict_label, EnsembleError, EnsembleMember,
    EwmaAccuracy, POISSON_LAMBDA,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResizeDecision {
    Keep,
    Grow,
    Shrink,
}

/// What [`EsrfForest::swap_step`] did, with the weights at decision time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SwapOutcome {
    NoSwap,
    Swapped {
        in_id: u64,
        out_id: u64,
        in_weight: f64,
        out_weight: f64,
    },
}

/// Resize rule: grow when the grown shadow ensemble beats the shrunk one
/// (ties favor growing) and clears the grow threshold; shrink when the
/// shrunk shadow strictly wins and clears the shrink threshold.
pub fn resize_decision(
    delta_grow: f64,
    delta_shrink: f64,
    t_grow: f64,
    t_shrink: f64,
) -> ResizeDecision {
    if delta_grow >= delta_shrink && delta_grow > t_grow {
        ResizeDecision::Grow
    } else if delta_shrink > delta_grow && delta_shrink > t_shrink {
        ResizeDecision::Shrink
    } else {
        ResizeDecision::Keep
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsrfConfig {
    /// Members in the forefront set at start.
    pub initial_fs: usize,
    /// Candidate set size, constant across the run.
    pub cs_size: usize,
    /// Resize factor r = |GS|.
    pub resize_factor: usize,
    pub t_grow: f64,
    pub t_shrink: f64,
    /// EWMA averaging window W.
    pub ewma_window: f64,
    /// Forefront floor for shrink operations.
    pub min_fs: usize,
    /// Ceiling on |FS| + |CS| + |GS|.
    pub max_total: usize,
    /// Single-level drift confidence for member monitors.
    pub drift_delta: f64,
    /// With the elastic component off the forest is a plain swap random
    /// forest (SRF): no grow set, no resizing.
    pub elastic: bool,
    pub seed: u64,
}

impl Default for EsrfConfig {
    fn default() -> Self {
        EsrfConfig {
            initial_fs: 10,
            cs_size: 10,
            resize_factor: 1,
            t_grow: 0.01,
            t_shrink: 0.001,
            ewma_window: 2000.0,
            min_fs: 10,
            max_total: 100,
            drift_delta: crate::drift::DEFAULT_DRIFT_DELTA,
            elastic: true,
            seed: 0,
        }
    }
}

impl EsrfConfig {
    /// Swap-only configuration (fixed forefront of `fs` learners).
    pub fn srf(fs: usize) -> Self {
        EsrfConfig {
            initial_fs: fs,
            min_fs: fs,
            elastic: false,
            ..EsrfConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.min_fs < 1 {
            return Err("min_fs must be at least 1".into());
        }
        if self.initial_fs < self.min_fs {
            return Err(format!(
                "initial |FS| {} below min_fs {}",
                self.initial_fs, self.min_fs
            ));
        }
        if self.elastic && self.resize_factor < 1 {
            return Err("resize factor r must be at least 1".into());
        }
        if !(self.t_grow >= 0.0) {
            return Err(format!("grow threshold must be >= 0, got {}", self.t_grow));
        }
        if !(self.t_shrink >= 0.0) {
            return Err(format!(
                "shrink threshold must be >= 0, got {}",
                self.t_shrink
            ));
        }
        if self.ewma_window < 1.0 {
            return Err("EWMA window must be at least 1".into());
        }
        let gs = if self.elastic { self.resize_factor } else { 0 };
        if self.initial_fs + self.cs_size + gs > self.max_total {
            return Err(format!(
                "initial sizes {}+{}+{gs} exceed max_total {}",
                self.initial_fs, self.cs_size, self.max_total
            ));
        }
        if !(self.drift_delta > 0.0 && self.drift_delta < 1.0) {
            return Err("drift delta must be in (0,1)".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EsrfForest {
    schema: Arc<Schema>,
    config: EsrfConfig,
    tree_config: TreeConfig,
    fs: Vec<EnsembleMember>,
    cs: Vec<EnsembleMember>,
    gs: Vec<EnsembleMember>,
    ewma_shrunk: EwmaAccuracy,
    ewma_default: EwmaAccuracy,
    ewma_grown: EwmaAccuracy,
    next_member_id: u64,
    poisson: Poisson<f64>,
    instances_trained: u64,
}

impl EsrfForest {
    pub fn new(schema: Arc<Schema>, config: EsrfConfig) -> Result<Self, EnsembleError> {
        if let Err(msg) = config.validate() {
            return Err(EnsembleError::Config(msg));
        }
        let tree_config = TreeConfig::for_schema(&schema);
        let alpha = alpha_for_window(config.ewma_window);
        let mut forest = EsrfForest {
            schema,
            tree_config,
            fs: Vec::new(),
            cs: Vec::new(),
            gs: Vec::new(),
            ewma_shrunk: EwmaAccuracy::new(alpha),
            ewma_default: EwmaAccuracy::new(alpha),
            ewma_grown: EwmaAccuracy::new(alpha),
            next_member_id: 0,
            poisson: Poisson::new(POISSON_LAMBDA).expect("lambda is positive"),
            instances_trained: 0,
            config,
        };
        for _ in 0..forest.config.initial_fs {
            let member = forest.spawn_member();
            forest.fs.push(member);
        }
        for _ in 0..forest.config.cs_size {
            let member = forest.spawn_member();
            forest.cs.push(member);
        }
        if forest.config.elastic {
            for _ in 0..forest.config.resize_factor {
                let member = forest.spawn_member();
                forest.gs.push(member);
            }
        }
        Ok(forest)
    }

    fn spawn_member(&mut self) -> EnsembleMember {
        let id = self.next_member_id;
        self.next_member_id += 1;
        EnsembleMember::new(
            id,
            self.schema.clone(),
            self.tree_config.clone(),
            DriftMonitor::single_level(self.config.drift_delta),
            self.config.seed,
        )
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn config(&self) -> &EsrfConfig {
        &self.config
    }

    pub fn forefront(&self) -> &[EnsembleMember] {
        &self.fs
    }

    pub fn candidates(&self) -> &[EnsembleMember] {
        &self.cs
    }

    pub fn grow_set(&self) -> &[EnsembleMember] {
        &self.gs
    }

    pub fn fs_size(&self) -> usize {
        self.fs.len()
    }

    pub fn total_members(&self) -> usize {
        self.fs.len() + self.cs.len() + self.gs.len()
    }

    pub fn ewma_values(&self) -> (f64, f64, f64) {
        (
            self.ewma_shrunk.value(),
            self.ewma_default.value(),
            self.ewma_grown.value(),
        )
    }

    pub fn instances_trained(&self) -> u64 {
        self.instances_trained
    }

    /// Prediction over the forefront set only; candidates and the grow set
    /// never vote.
    pub fn predict_scores(&self, instance: &Instance) -> Result<(usize, Vec<f64>), EnsembleError> {
        let refs: Vec<&EnsembleMember> = self.fs.iter().collect();
        predict_label(&refs, instance)
    }

    /// Convenience argmax of [`predict_scores`](Self::predict_scores);
    /// construction keeps the forefront non-empty.
    pub fn predict(&self, instance: &Instance) -> usize {
        self.predict_scores(instance)
            .expect("forefront set is never empty")
            .0
    }

    /// Indices of the `r` lowest-weight forefront members (ties to the lower
    /// member id), capped so the shrunk shadow keeps at least one member.
    fn fs_min_indices(&self) -> Vec<usize> {
        let take = self
            .config
            .resize_factor
            .min(self.fs.len().saturating_sub(1));
        let mut order: Vec<usize> = (0..self.fs.len()).collect();
        order.sort_by(|&a, &b| {
            self.fs[a]
                .weight()
                .partial_cmp(&self.fs[b].weight())
                .unwrap()
                .then(self.fs[a].id().cmp(&self.fs[b].id()))
        });
        let mut indices: Vec<usize> = order.into_iter().take(take).collect();
        indices.sort_unstable();
        indices
    }

    /// Updates the three shadow EWMAs with the correctness of the shrunk,
    /// default and grown predictions, then applies the resize rule.
    pub fn check_if_resize(
        &mut self,
        label: usize,
        shrunk_pred: usize,
        default_pred: usize,
        grown_pred: usize,
    ) -> ResizeDecision {
        self.ewma_shrunk.update(shrunk_pred == label);
        self.ewma_default.update(default_pred == label);
        self.ewma_grown.update(grown_pred == label);
        let delta_shrink = self.ewma_shrunk.value() - self.ewma_default.value();
        let delta_grow = self.ewma_grown.value() - self.ewma_default.value();
        resize_decision(
            delta_grow,
            delta_shrink,
            self.config.t_grow,
            self.config.t_shrink,
        )
    }

    /// Applies a resize decision, suppressing operations that would cross
    /// the ceiling or the forefront floor (the EWMAs have already been
    /// updated by the decision step). Returns what actually happened.
    fn apply_resize(
        &mut self,
        decision: ResizeDecision,
        mut fs_preds: Option<&mut Vec<usize>>,
        mut gs_preds: Option<&mut Vec<usize>>,
    ) -> ResizeDecision {
        let r = self.config.resize_factor;
        match decision {
            ResizeDecision::Keep => ResizeDecision::Keep,
            ResizeDecision::Grow => {
                // After growing, a fresh grow set of r members exists too.
                let total_after = self.fs.len() + self.gs.len() + self.cs.len() + r;
                if total_after > self.config.max_total {
                    return ResizeDecision::Keep;
                }
                self.fs.append(&mut self.gs);
                if let (Some(fs_preds), Some(gs_preds)) = (fs_preds.as_mut(), gs_preds.as_mut()) {
                    fs_preds.append(gs_preds);
                }
                self.restart_grow_set(gs_preds);
                ResizeDecision::Grow
            }
            ResizeDecision::Shrink => {
                if self.fs.len() < self.config.min_fs + r {
                    return ResizeDecision::Keep;
                }
                let doomed = self.fs_min_indices();
                for &idx in doomed.iter().rev() {
                    self.fs.remove(idx);
                    if let Some(fs_preds) = fs_preds.as_mut() {
                        fs_preds.remove(idx);
                    }
                }
                self.restart_grow_set(gs_preds);
                ResizeDecision::Shrink
            }
        }
    }

    fn restart_grow_set(&mut self, gs_preds: Option<&mut Vec<usize>>) {
        self.gs.clear();
        for _ in 0..self.config.resize_factor {
            let member = self.spawn_member();
            self.gs.push(member);
        }
        if let Some(gs_preds) = gs_preds {
            // Fresh trees have all-zero scores; their argmax is class 0.
            gs_preds.clear();
            gs_preds.resize(self.config.resize_factor, 0);
        }
    }

    /// Shadow predictions and resize, recomputing member scores. Part of the
    /// documented per-instance order: resize, train, swap.
    pub fn resize_ensemble(&mut self, instance: &Instance) -> Result<ResizeDecision, EnsembleError> {
        if !self.config.elastic {
            return Ok(ResizeDecision::Keep);
        }
        let fs_scores: Vec<Vec<f64>> = self
            .fs
            .iter()
            .map(|m| m.tree.predict(instance))
            .collect::<Result<_, _>>()?;
        let gs_scores: Vec<Vec<f64>> = self
            .gs
            .iter()
            .map(|m| m.tree.predict(instance))
            .collect::<Result<_, _>>()?;
        let (shrunk, default, grown) = self.shadow_predictions(&fs_scores, &gs_scores);
        let decision = self.check_if_resize(instance.class_index, shrunk, default, grown);
        Ok(self.apply_resize(decision, None, None))
    }

    /// Aggregates cached per-member scores into the shrunk (FS minus its r
    /// weakest), default (FS) and grown (FS plus GS) shadow predictions.
    fn shadow_predictions(
        &self,
        fs_scores: &[Vec<f64>],
        gs_scores: &[Vec<f64>],
    ) -> (usize, usize, usize) {
        let k = self.schema.num_classes();
        let skip = self.fs_min_indices();
        let mut shrunk = vec![0.0; k];
        let mut default = vec![0.0; k];
        let mut grown = vec![0.0; k];
        for (i, (member, scores)) in self.fs.iter().zip(fs_scores).enumerate() {
            let w = member.weight();
            if !skip.contains(&i) {
                accumulate_vote(&mut shrunk, scores, w);
            }
            accumulate_vote(&mut default, scores, w);
        }
        // The grown shadow repeats the default accumulation before adding
        // the grow set, mirroring a direct vote over FS followed by GS.
        for (member, scores) in self.fs.iter().zip(fs_scores) {
            accumulate_vote(&mut grown, scores, member.weight());
        }
        for (member, scores) in self.gs.iter().zip(gs_scores) {
            accumulate_vote(&mut grown, scores, member.weight());
        }
        (argmax(&shrunk), argmax(&default), argmax(&grown))
    }

    /// Trains every member of FS, CS and GS on the instance with its own
    /// Poisson(6) bag weight, scoring each member's pre-training prediction
    /// to update its counters and drift monitor. Drifted members reset.
    pub fn train_all_classifiers(&mut self, instance: &Instance) -> Result<(), EnsembleError> {
        let poisson = self.poisson;
        self.fs
            .par_iter_mut()
            .chain(self.cs.par_iter_mut())
            .chain(self.gs.par_iter_mut())
            .with_min_len(8)
            .try_for_each(|member| -> Result<(), EnsembleError> {
                let pred = argmax(&member.tree.predict(instance)?);
                member.absorb(instance, pred, &poisson)?;
                Ok(())
            })
    }

    /// At most one exchange per instance: the weakest forefront member and
    /// the strongest candidate trade places iff the candidate is strictly
    /// more accurate. Ties break toward the lower member id.
    pub fn swap_step(&mut self) -> SwapOutcome {
        if self.cs.is_empty() || self.fs.is_empty() {
            return SwapOutcome::NoSwap;
        }
        let mut f_min = 0;
        for i in 1..self.fs.len() {
            let better = (self.fs[i].weight(), self.fs[i].id());
            let current = (self.fs[f_min].weight(), self.fs[f_min].id());
            if better < current {
                f_min = i;
            }
        }
        let mut c_max = 0;
        for i in 1..self.cs.len() {
            if self.cs[i].weight() > self.cs[c_max].weight()
                || (self.cs[i].weight() == self.cs[c_max].weight()
                    && self.cs[i].id() < self.cs[c_max].id())
            {
                c_max = i;
            }
        }
        let in_weight = self.cs[c_max].weight();
        let out_weight = self.fs[f_min].weight();
        if in_weight > out_weight {
            std::mem::swap(&mut self.fs[f_min], &mut self.cs[c_max]);
            SwapOutcome::Swapped {
                in_id: self.fs[f_min].id(),
                out_id: self.cs[c_max].id(),
                in_weight,
                out_weight,
            }
        } else {
            SwapOutcome::NoSwap
        }
    }

    /// One full training step in the documented order: resize, train all
    /// classifiers, swap. Equivalent to calling the three operations in
    /// sequence, but computes each member's pre-training prediction exactly
    /// once. Returns what the swap step did.
    pub fn train_on_instance(&mut self, instance: &Instance) -> Result<SwapOutcome, EnsembleError> {
        self.schema
            .validate(instance)
            .map_err(|e| EnsembleError::SchemaMismatch(e.to_string()))?;
        self.instances_trained += 1;

        // Pre-training scores for every member (parallel; trees are frozen
        // during this pass).
        let poisson = self.poisson;
        let fs_scores: Vec<Vec<f64>> = self
            .fs
            .par_iter()
            .with_min_len(8)
            .map(|m| m.tree.predict(instance))
            .collect::<Result<_, _>>()?;
        let gs_scores: Vec<Vec<f64>> = self
            .gs
            .iter()
            .map(|m| m.tree.predict(instance))
            .collect::<Result<_, _>>()?;
        let cs_preds: Vec<usize> = self
            .cs
            .iter()
            .map(|m| m.tree.predict(instance).map(|s| argmax(&s)))
            .collect::<Result<_, _>>()?;
        let mut fs_preds: Vec<usize> = fs_scores.iter().map(|s| argmax(s)).collect();
        let mut gs_preds: Vec<usize> = gs_scores.iter().map(|s| argmax(s)).collect();

        if self.config.elastic {
            let (shrunk, default, grown) = self.shadow_predictions(&fs_scores, &gs_scores);
            let decision = self.check_if_resize(instance.class_index, shrunk, default, grown);
            self.apply_resize(decision, Some(&mut fs_preds), Some(&mut gs_preds));
        }

        // Train phase, reusing the cached predictions.
        self.fs
            .par_iter_mut()
            .zip(fs_preds.par_iter())
            .chain(self.cs.par_iter_mut().zip(cs_preds.par_iter()))
            .chain(self.gs.par_iter_mut().zip(gs_preds.par_iter()))
            .with_min_len(8)
            .try_for_each(|(member, &pred)| -> Result<(), EnsembleError> {
                member.absorb(instance, pred, &poisson)?;
                Ok(())
            })?;

        Ok(self.swap_step())
    }

    /// Fingerprint of the complete mutable state, for purity and determinism
    /// checks.
    pub fn state_digest(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        format!("{self:?}").hash(&mut hasher);
        hasher.finish()
    }

    #[cfg(test)]
    pub(crate) fn forefront_mut(&mut self) -> &mut Vec<EnsembleMember> {
        &mut self.fs
    }

    #[cfg(test)]
    pub(crate) fn candidates_mut(&mut self) -> &mut Vec<EnsembleMember> {
        &mut self.cs
    }

    #[cfg(test)]
    pub(crate) fn apply_resize_for_test(&mut self, decision: ResizeDecision) -> ResizeDecision {
        self.apply_resize(decision, None, None)
    }

    #[cfg(test)]
    pub(crate) fn copy_instance_counter(&mut self, other: &EsrfForest) {
        self.instances_trained = other.instances_trained;
    }
}
