//! Incremental random Hoeffding decision tree: per-leaf sufficient
//! statistics, a random feature subspace per node and Hoeffding-bound split
//! decisions. The base learner for the forests in [`crate::ensemble`].

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::streams::{AttributeKind, Instance, Schema};
use crate::util::argmax;

pub mod observers;

use observers::{AttributeObserver, NominalObserver, NumericObserver};

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
}

/// Hoeffding bound `sqrt(R^2 ln(1/delta) / (2n))`: with probability
/// `1 - delta` the true mean of a range-`R` variable lies within the bound of
/// its `n`-sample mean.
pub fn hoeffding_bound(range: f64, confidence: f64, n: f64) -> Result<f64, TreeError> {
    if !(range > 0.0) {
        return Err(TreeError::Domain(format!("range must be positive, got {range}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(TreeError::Domain(format!(
            "confidence must be in (0,1), got {confidence}"
        )));
    }
    if !(n > 0.0) {
        return Err(TreeError::Domain(format!("n must be positive, got {n}")));
    }
    Ok((range * range * (1.0 / confidence).ln() / (2.0 * n)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafPrediction {
    MajorityClass,
    NaiveBayesAdaptive,
}

#[derive(Debug, Clone)]
pub struct TreeConfig {
    /// Split confidence delta.
    pub split_confidence: f64,
    /// Tie threshold tau: split regardless of merit gap once the bound is
    /// this tight.
    pub tie_threshold: f64,
    /// Weight a leaf must accumulate between split checks.
    pub grace_period: f64,
    /// Attributes sampled per node.
    pub subspace_size: usize,
    pub leaf_prediction: LeafPrediction,
    pub max_depth: Option<usize>,
}

impl TreeConfig {
    /// ARF-style defaults with subspace size `floor(sqrt(M)) + 1`.
    pub fn for_schema(schema: &Schema) -> Self {
        let m = (schema.num_attributes() as f64).sqrt().floor() as usize + 1;
        TreeConfig {
            split_confidence: 0.01,
            tie_threshold: 0.05,
            grace_period: 50.0,
            subspace_size: m.min(schema.num_attributes()),
            leaf_prediction: LeafPrediction::NaiveBayesAdaptive,
            max_depth: None,
        }
    }
}

/// Entropy of a (possibly unnormalized) class distribution, in bits.
pub fn entropy(dist: &[f64]) -> f64 {
    let total: f64 = dist.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    dist.iter()
        .filter(|&&d| d > 0.0)
        .map(|&d| {
            let p = d / total;
            -p * p.log2()
        })
        .sum()
}

/// Information gain of splitting `pre` into `children`.
pub fn information_gain(pre: &[f64], children: &[Vec<f64>]) -> f64 {
    let total: f64 = pre.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut post = 0.0;
    for child in children {
        let w: f64 = child.iter().sum();
        if w > 0.0 {
            post += w / total * entropy(child);
        }
    }
    entropy(pre) - post
}

/// Split rule shared by the tree and its tests: requires positive merit and
/// either a gap larger than the bound or a bound below the tie threshold.
pub fn split_decision(best: f64, second: f64, epsilon: f64, tie_threshold: f64) -> bool {
    best > 0.0 && (best - second > epsilon || epsilon < tie_threshold)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplitTest {
    /// One child per category of `attr`.
    Nominal { attr: usize },
    /// Two children; `value <= threshold` goes left.
    NumericBinary { attr: usize, threshold: f64 },
}

impl SplitTest {
    pub fn attribute(&self) -> usize {
        match self {
            SplitTest::Nominal { attr } => *attr,
            SplitTest::NumericBinary { attr, .. } => *attr,
        }
    }

    fn route(&self, instance: &Instance) -> usize {
        match self {
            SplitTest::Nominal { attr } => instance.values[*attr] as usize,
            SplitTest::NumericBinary { attr, threshold } => {
                if instance.values[*attr] <= *threshold {
                    0
                } else {
                    1
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct LeafNode {
    pub class_counts: Vec<f64>,
    observers: Vec<Option<AttributeObserver>>,
    subspace: Vec<usize>,
    weight_at_last_check: f64,
    /// Total instance weight ever routed here; equals the class count sum.
    routed_weight: f64,
    mc_correct: f64,
    nb_correct: f64,
}

impl LeafNode {
    fn new(schema: &Schema, subspace: Vec<usize>) -> Self {
        let num_classes = schema.num_classes();
        let mut observers: Vec<Option<AttributeObserver>> =
            (0..schema.num_attributes()).map(|_| None).collect();
        for &attr in &subspace {
            observers[attr] = Some(match &schema.attributes()[attr].kind {
                AttributeKind::Numeric => {
                    AttributeObserver::Numeric(NumericObserver::new(num_classes))
                }
                AttributeKind::Nominal(values) => {
                    AttributeObserver::Nominal(NominalObserver::new(num_classes, values.len()))
                }
            });
        }
        LeafNode {
            class_counts: vec![0.0; num_classes],
            observers,
            subspace,
            weight_at_last_check: 0.0,
            routed_weight: 0.0,
            mc_correct: 0.0,
            nb_correct: 0.0,
        }
    }

    pub fn subspace(&self) -> &[usize] {
        &self.subspace
    }

    pub fn total_weight(&self) -> f64 {
        self.class_counts.iter().sum()
    }

    pub fn routed_weight(&self) -> f64 {
        self.routed_weight
    }

    fn naive_bayes_scores(&self, instance: &Instance) -> Vec<f64> {
        let total = self.total_weight();
        if total <= 0.0 {
            return self.class_counts.clone();
        }
        let mut votes = Vec::with_capacity(self.class_counts.len());
        for (class, &count) in self.class_counts.iter().enumerate() {
            let mut vote = count / total;
            if vote > 0.0 {
                for &attr in &self.subspace {
                    let value = instance.values[attr];
                    match self.observers[attr].as_ref() {
                        Some(AttributeObserver::Numeric(obs)) => {
                            vote *= obs.pdf(value, class);
                        }
                        Some(AttributeObserver::Nominal(obs)) => {
                            vote *= obs.probability(value as usize, class);
                        }
                        None => {}
                    }
                }
            }
            votes.push(vote);
        }
        // Degenerate estimators (single observation, or an underflowed
        // outlier) can zero every vote; the class counts are the only usable
        // signal then.
        if votes.iter().all(|&v| v == 0.0) {
            return self.class_counts.clone();
        }
        votes
    }

    fn scores(&self, instance: &Instance, prediction: LeafPrediction) -> Vec<f64> {
        match prediction {
            LeafPrediction::MajorityClass => self.class_counts.clone(),
            LeafPrediction::NaiveBayesAdaptive => {
                if self.mc_correct > self.nb_correct {
                    self.class_counts.clone()
                } else {
                    self.naive_bayes_scores(instance)
                }
            }
        }
    }

    fn learn(&mut self, instance: &Instance, weight: f64, prediction: LeafPrediction) {
        if prediction == LeafPrediction::NaiveBayesAdaptive {
            // Track which of the two predictors would have been right,
            // before absorbing the instance.
            if argmax(&self.class_counts) == instance.class_index {
                self.mc_correct += weight;
            }
            if argmax(&self.naive_bayes_scores(instance)) == instance.class_index {
                self.nb_correct += weight;
            }
        }
        self.class_counts[instance.class_index] += weight;
        self.routed_weight += weight;
        for &attr in &self.subspace {
            let value = instance.values[attr];
            match self.observers[attr].as_mut() {
                Some(AttributeObserver::Numeric(obs)) => {
                    obs.observe(value, instance.class_index, weight);
                }
                Some(AttributeObserver::Nominal(obs)) => {
                    obs.observe(value as usize, instance.class_index, weight);
                }
                None => {}
            }
        }
    }

    fn is_pure(&self) -> bool {
        self.class_counts.iter().filter(|&&c| c > 0.0).count() <= 1
    }
}

#[derive(Debug, Clone)]
pub struct InternalNode {
    pub split: SplitTest,
    pub children: Vec<Node>,
    /// Subspace the originating leaf had sampled; the split attribute is
    /// always a member.
    pub subspace: Vec<usize>,
}

#[derive(Debug, Clone)]
pub enum Node {
    Leaf(LeafNode),
    Internal(InternalNode),
}

/// Outcome of a split attempt on a leaf.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitOutcome {
    NoSplit,
    Split(SplitTest),
}

#[derive(Debug, Clone)]
struct SplitCandidate {
    merit: f64,
    test: Option<SplitTest>,
}

fn best_candidate_for_attribute(leaf: &LeafNode, attr: usize) -> Option<SplitCandidate> {
    match leaf.observers[attr].as_ref()? {
        AttributeObserver::Nominal(obs) => {
            let dists = obs.split_distributions();
            Some(SplitCandidate {
                merit: information_gain(&leaf.class_counts, &dists),
                test: Some(SplitTest::Nominal { attr }),
            })
        }
        AttributeObserver::Numeric(obs) => {
            let mut best: Option<SplitCandidate> = None;
            for threshold in obs.split_point_candidates() {
                let (lhs, rhs) = obs.split_distributions(threshold);
                let merit = information_gain(&leaf.class_counts, &[lhs, rhs]);
                if best.as_ref().map_or(true, |b| merit > b.merit) {
                    best = Some(SplitCandidate {
                        merit,
                        test: Some(SplitTest::NumericBinary { attr, threshold }),
                    });
                }
            }
            best
        }
    }
}

/// Incremental decision tree over a fixed schema. Trees own a deterministic
/// rng used only for subspace sampling, so identical seeds and instance
/// sequences rebuild identical trees.
#[derive(Debug, Clone)]
pub struct HoeffdingTree {
    schema: Arc<Schema>,
    config: TreeConfig,
    rng: ChaCha12Rng,
    root: Node,
    instances_seen: u64,
    weight_seen: f64,
}

fn sample_subspace(rng: &mut ChaCha12Rng, size: usize, num_attributes: usize) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..num_attributes).collect();
    let take = size.min(num_attributes);
    for i in 0..take {
        let j = rng.random_range(i..num_attributes);
        indices.swap(i, j);
    }
    let mut subspace = indices[..take].to_vec();
    subspace.sort_unstable();
    subspace
}

impl HoeffdingTree {
    pub fn with_rng(schema: Arc<Schema>, config: TreeConfig, mut rng: ChaCha12Rng) -> Self {
        let subspace = sample_subspace(&mut rng, config.subspace_size, schema.num_attributes());
        let root = Node::Leaf(LeafNode::new(&schema, subspace));
        HoeffdingTree {
            schema,
            config,
            rng,
            root,
            instances_seen: 0,
            weight_seen: 0.0,
        }
    }

    pub fn with_seed(schema: Arc<Schema>, config: TreeConfig, seed: u64) -> Self {
        use rand::SeedableRng;
        Self::with_rng(schema, config, ChaCha12Rng::seed_from_u64(seed))
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn config(&self) -> &TreeConfig {
        &self.config
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn instances_seen(&self) -> u64 {
        self.instances_seen
    }

    pub fn weight_seen(&self) -> f64 {
        self.weight_seen
    }

    /// Snapshot of the internal rng; lets tests rebuild a tree that continues
    /// this tree's random stream.
    pub fn rng_snapshot(&self) -> ChaCha12Rng {
        self.rng.clone()
    }

    fn check_instance(&self, instance: &Instance) -> Result<(), TreeError> {
        if instance.values.len() != self.schema.num_attributes() {
            return Err(TreeError::SchemaMismatch(format!(
                "instance has {} values, schema declares {}",
                instance.values.len(),
                self.schema.num_attributes()
            )));
        }
        if instance.class_index >= self.schema.num_classes() {
            return Err(TreeError::SchemaMismatch(format!(
                "class index {} out of range",
                instance.class_index
            )));
        }
        Ok(())
    }

    /// Routes the instance to a leaf, updates that leaf's statistics with the
    /// instance weight and attempts a split once enough weight accumulated.
    /// Zero-weight instances leave the tree untouched.
    pub fn train(&mut self, instance: &Instance) -> Result<(), TreeError> {
        self.train_weighted(instance, instance.weight)
    }

    /// [`train`](Self::train) with the instance weight overridden, so bagging
    /// layers can reweight without cloning the instance.
    pub fn train_weighted(&mut self, instance: &Instance, weight: f64) -> Result<(), TreeError> {
        self.check_instance(instance)?;
        if !(weight >= 0.0) {
            return Err(TreeError::SchemaMismatch(format!(
                "negative or NaN weight {weight}"
            )));
        }
        if weight == 0.0 {
            return Ok(());
        }
        self.instances_seen += 1;
        self.weight_seen += weight;

        // Descend to the leaf, tracking depth for the optional bound.
        let mut node = &mut self.root;
        let mut depth = 0usize;
        loop {
            match node {
                Node::Internal(internal) => {
                    let child = internal.split.route(instance);
                    node = &mut internal.children[child];
                    depth += 1;
                }
                Node::Leaf(_) => break,
            }
        }
        let leaf_prediction = self.config.leaf_prediction;
        let Node::Leaf(leaf) = node else { unreachable!() };
        leaf.learn(instance, weight, leaf_prediction);

        let depth_allows = self.config.max_depth.is_none_or(|max| depth < max);
        if depth_allows
            && leaf.total_weight() - leaf.weight_at_last_check >= self.config.grace_period
        {
            let outcome = Self::attempt_split_impl(
                leaf,
                &self.schema,
                &self.config,
            );
            if let SplitOutcome::Split(test) = outcome {
                let subspace = leaf.subspace.clone();
                let arity = match &test {
                    SplitTest::Nominal { attr } => self.schema.attributes()[*attr]
                        .kind
                        .arity()
                        .expect("nominal split on nominal attribute"),
                    SplitTest::NumericBinary { .. } => 2,
                };
                let children: Vec<Node> = (0..arity)
                    .map(|_| {
                        let child_subspace = sample_subspace(
                            &mut self.rng,
                            self.config.subspace_size,
                            self.schema.num_attributes(),
                        );
                        Node::Leaf(LeafNode::new(&self.schema, child_subspace))
                    })
                    .collect();
                *node = Node::Internal(InternalNode {
                    split: test,
                    children,
                    subspace,
                });
            }
        }
        Ok(())
    }

    /// Split check: best information gain per subspace attribute must beat
    /// the runner-up by the Hoeffding bound, or the bound must already be
    /// below the tie threshold. Pure leaves never split.
    fn attempt_split_impl(
        leaf: &mut LeafNode,
        schema: &Schema,
        config: &TreeConfig,
    ) -> SplitOutcome {
        leaf.weight_at_last_check = leaf.total_weight();
        if leaf.is_pure() {
            return SplitOutcome::NoSplit;
        }
        let mut candidates: Vec<SplitCandidate> = leaf
            .subspace
            .iter()
            .filter_map(|&attr| best_candidate_for_attribute(leaf, attr))
            .collect();
        // The "do not split" option competes with merit 0.
        candidates.push(SplitCandidate {
            merit: 0.0,
            test: None,
        });
        candidates.sort_by(|a, b| b.merit.partial_cmp(&a.merit).unwrap());
        if candidates.len() < 2 {
            return SplitOutcome::NoSplit;
        }
        let range = (schema.num_classes() as f64).log2();
        let epsilon = hoeffding_bound(range, config.split_confidence, leaf.total_weight())
            .expect("config ranges validated");
        let best = &candidates[0];
        let second = &candidates[1];
        match &best.test {
            Some(test)
                if split_decision(best.merit, second.merit, epsilon, config.tie_threshold) =>
            {
                SplitOutcome::Split(test.clone())
            }
            _ => SplitOutcome::NoSplit,
        }
    }

    /// Non-negative per-class scores for the instance's leaf; callers
    /// normalize. An untrained tree yields all zeros.
    pub fn predict(&self, instance: &Instance) -> Result<Vec<f64>, TreeError> {
        self.check_instance(instance)?;
        let mut node = &self.root;
        loop {
            match node {
                Node::Internal(internal) => {
                    node = &internal.children[internal.split.route(instance)];
                }
                Node::Leaf(leaf) => {
                    return Ok(leaf.scores(instance, self.config.leaf_prediction));
                }
            }
        }
    }

    /// Clears all statistics back to a fresh root leaf. The rng stream keeps
    /// advancing, so consecutive resets sample different subspaces.
    pub fn reset(&mut self) {
        let subspace = sample_subspace(
            &mut self.rng,
            self.config.subspace_size,
            self.schema.num_attributes(),
        );
        self.root = Node::Leaf(LeafNode::new(&self.schema, subspace));
        self.instances_seen = 0;
        self.weight_seen = 0.0;
    }

    /// Indented text rendering of the tree structure, for debugging and test
    /// goldens.
    pub fn dump_structure(&self) -> String {
        let mut out = String::new();
        Self::dump_node(&self.root, &self.schema, 0, &mut out);
        out
    }

    fn dump_node(node: &Node, schema: &Schema, indent: usize, out: &mut String) {
        let pad = "  ".repeat(indent);
        match node {
            Node::Leaf(leaf) => {
                out.push_str(&format!(
                    "{pad}leaf counts={:?} subspace={:?}\n",
                    leaf.class_counts, leaf.subspace
                ));
            }
            Node::Internal(internal) => {
                match &internal.split {
                    SplitTest::Nominal { attr } => {
                        out.push_str(&format!(
                            "{pad}split on {} (nominal)\n",
                            schema.attributes()[*attr].name
                        ));
                    }
                    SplitTest::NumericBinary { attr, threshold } => {
                        out.push_str(&format!(
                            "{pad}split on {} <= {threshold}\n",
                            schema.attributes()[*attr].name
                        ));
                    }
                }
                for child in &internal.children {
                    Self::dump_node(child, schema, indent + 1, out);
                }
            }
        }
    }

    /// Visits every internal node with its split and recorded subspace.
    pub fn walk_splits(&self, visit: &mut dyn FnMut(&SplitTest, &[usize])) {
        fn walk(node: &Node, visit: &mut dyn FnMut(&SplitTest, &[usize])) {
            if let Node::Internal(internal) = node {
                visit(&internal.split, &internal.subspace);
                for child in &internal.children {
                    walk(child, visit);
                }
            }
        }
        walk(&self.root, visit);
    }

    /// Visits every leaf.
    pub fn walk_leaves(&self, visit: &mut dyn FnMut(&LeafNode)) {
        fn walk(node: &Node, visit: &mut dyn FnMut(&LeafNode)) {
            match node {
                Node::Leaf(leaf) => visit(leaf),
                Node::Internal(internal) => {
                    for child in &internal.children {
                        walk(child, visit);
                    }
                }
            }
        }
        walk(&self.root, visit);
    }
}
