//! Synthetic stream generators: SEA, Agrawal, LED, random tree (RTG),
//! radial basis function (RBF) and rotating hyperplane.
//!
//! All generators are deterministic given their parameters and seed, emit
//! instances forever and never fail. Concept drift for SEA/Agrawal/LED is
//! produced by composing two parameterizations with
//! [`DriftStream`](super::drift_stream::DriftStream); RBF and hyperplane
//! drift incrementally on their own.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::{AttributeSpec, Instance, InstanceStream, Schema, StreamError};

fn rng_for(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// SEA

/// SEA concepts: the label tests `attr1 + attr2 <= threshold`.
pub const SEA_THRESHOLDS: [f64; 4] = [8.0, 9.0, 7.0, 9.5];

/// Three uniform attributes in [0, 10); only the first two are relevant.
/// Class 0 when `attr1 + attr2 <= threshold`, label noise flips the class
/// with probability `noise`.
#[derive(Debug, Clone)]
pub struct SeaGenerator {
    schema: Arc<Schema>,
    rng: ChaCha12Rng,
    threshold: f64,
    noise: f64,
}

impl SeaGenerator {
    /// `function` selects the concept, 1 through 4.
    pub fn new(function: usize, noise: f64, seed: u64) -> Self {
        assert!((1..=4).contains(&function), "SEA function must be 1..=4");
        assert!((0.0..=1.0).contains(&noise));
        SeaGenerator {
            schema: Arc::new(Self::schema_def()),
            rng: rng_for(seed),
            threshold: SEA_THRESHOLDS[function - 1],
            noise,
        }
    }

    pub fn schema_def() -> Schema {
        Schema::new(
            vec![
                AttributeSpec::numeric("attrib1"),
                AttributeSpec::numeric("attrib2"),
                AttributeSpec::numeric("attrib3"),
            ],
            vec!["groupA".into(), "groupB".into()],
        )
        .expect("static schema")
    }

    /// The noise-free SEA rule: class 0 iff the first two attributes sum to
    /// at most the concept threshold.
    pub fn label(threshold: f64, a1: f64, a2: f64) -> usize {
        if a1 + a2 <= threshold {
            0
        } else {
            1
        }
    }
}

impl Iterator for SeaGenerator {
    type Item = Result<Instance, StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        let a1 = self.rng.random::<f64>() * 10.0;
        let a2 = self.rng.random::<f64>() * 10.0;
        let a3 = self.rng.random::<f64>() * 10.0;
        let mut class = Self::label(self.threshold, a1, a2);
        if self.noise > 0.0 && self.rng.random::<f64>() < self.noise {
            class = 1 - class;
        }
        Some(Ok(Instance::new(vec![a1, a2, a3], class)))
    }
}

impl InstanceStream for SeaGenerator {
    fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }
}

// ---------------------------------------------------------------------------
// Agrawal

/// The classic loan-applicant schema: nine attributes, ten classification
/// functions. `perturbation` jitters the numeric attributes by a fraction of
/// their range as in the usual stream-mining implementations.
#[derive(Debug, Clone)]
pub struct AgrawalGenerator {
    schema: Arc<Schema>,
    rng: ChaCha12Rng,
    function: usize,
    perturbation: f64,
}

impl AgrawalGenerator {
    pub fn new(function: usize, perturbation: f64, seed: u64) -> Self {
        assert!(
            (1..=10).contains(&function),
            "Agrawal function must be 1..=10"
        );
        assert!((0.0..=1.0).contains(&perturbation));
        AgrawalGenerator {
            schema: Arc::new(Self::schema_def()),
            rng: rng_for(seed),
            function,
            perturbation,
        }
    }

    pub fn schema_def() -> Schema {
        let elevel: Vec<String> = (0..5).map(|v| v.to_string()).collect();
        let car: Vec<String> = (1..=20).map(|v| v.to_string()).collect();
        let zipcode: Vec<String> = (0..9).map(|v| v.to_string()).collect();
        Schema::new(
            vec![
                AttributeSpec::numeric("salary"),
                AttributeSpec::numeric("commission"),
                AttributeSpec::numeric("age"),
                AttributeSpec::nominal("elevel", elevel),
                AttributeSpec::nominal("car", car),
                AttributeSpec::nominal("zipcode", zipcode),
                AttributeSpec::numeric("hvalue"),
                AttributeSpec::numeric("hyears"),
                AttributeSpec::numeric("loan"),
            ],
            vec!["groupA".into(), "groupB".into()],
        )
        .expect("static schema")
    }

    fn perturb(&mut self, value: f64, min: f64, max: f64) -> f64 {
        let jitter = (max - min) * (2.0 * self.rng.random::<f64>() - 1.0) * self.perturbation;
        (value + jitter).clamp(min, max)
    }

    /// Group under one of the ten classic loan classification functions.
    #[allow(clippy::too_many_arguments)]
    pub fn classify(
        function: usize,
        salary: f64,
        commission: f64,
        age: f64,
        elevel: usize,
        _car: usize,
        _zipcode: usize,
        hvalue: f64,
        hyears: f64,
        loan: f64,
    ) -> usize {
        let group_a = match function {
            1 => age < 40.0 || age >= 60.0,
            2 => {
                if age < 40.0 {
                    (50_000.0..=100_000.0).contains(&salary)
                } else if age < 60.0 {
                    (75_000.0..=125_000.0).contains(&salary)
                } else {
                    (25_000.0..=75_000.0).contains(&salary)
                }
            }
            3 => {
                if age < 40.0 {
                    elevel <= 1
                } else if age < 60.0 {
                    (1..=3).contains(&elevel)
                } else {
                    (2..=4).contains(&elevel)
                }
            }
            4 => {
                if age < 40.0 {
                    if elevel <= 1 {
                        (25_000.0..=75_000.0).contains(&salary)
                    } else {
                        (50_000.0..=100_000.0).contains(&salary)
                    }
                } else if age < 60.0 {
                    if (1..=3).contains(&elevel) {
                        (50_000.0..=100_000.0).contains(&salary)
                    } else {
                        (75_000.0..=125_000.0).contains(&salary)
                    }
                } else if (2..=4).contains(&elevel) {
                    (50_000.0..=100_000.0).contains(&salary)
                } else {
                    (25_000.0..=75_000.0).contains(&salary)
                }
            }
            5 => {
                if age < 40.0 {
                    if (50_000.0..=100_000.0).contains(&salary) {
                        (100_000.0..=300_000.0).contains(&loan)
                    } else {
                        (200_000.0..=400_000.0).contains(&loan)
                    }
                } else if age < 60.0 {
                    if (75_000.0..=125_000.0).contains(&salary) {
                        (200_000.0..=400_000.0).contains(&loan)
                    } else {
                        (300_000.0..=500_000.0).contains(&loan)
                    }
                } else if (25_000.0..=75_000.0).contains(&salary) {
                    (300_000.0..=500_000.0).contains(&loan)
                } else {
                    (100_000.0..=300_000.0).contains(&loan)
                }
            }
            6 => {
                let total = salary + commission;
                if age < 40.0 {
                    (50_000.0..=100_000.0).contains(&total)
                } else if age < 60.0 {
                    (75_000.0..=125_000.0).contains(&total)
                } else {
                    (25_000.0..=75_000.0).contains(&total)
                }
            }
            7 => 2.0 * (salary + commission) / 3.0 - loan / 5.0 - 20_000.0 > 1.0,
            8 => 2.0 * (salary + commission) / 3.0 - 5_000.0 * elevel as f64 - 20_000.0 > 1.0,
            9 => {
                2.0 * (salary + commission) / 3.0 - 5_000.0 * elevel as f64 - loan / 5.0 - 10_000.0
                    > 1.0
            }
            10 => {
                let equity = if hyears >= 20.0 {
                    hvalue * (hyears - 20.0) / 10.0
                } else {
                    0.0
                };
                2.0 * (salary + commission) / 3.0 - 5_000.0 * elevel as f64 + equity / 5.0
                    - 10_000.0
                    > 1.0
            }
            _ => unreachable!("function validated at construction"),
        };
        if group_a {
            0
        } else {
            1
        }
    }
}

impl Iterator for AgrawalGenerator {
    type Item = Result<Instance, StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut salary = 20_000.0 + 130_000.0 * self.rng.random::<f64>();
        let mut commission = if salary >= 75_000.0 {
            0.0
        } else {
            10_000.0 + 65_000.0 * self.rng.random::<f64>()
        };
        let mut age = (20 + self.rng.random_range(0..61)) as f64;
        let elevel = self.rng.random_range(0..5usize);
        let car = self.rng.random_range(0..20usize);
        let zipcode = self.rng.random_range(0..9usize);
        let mut hvalue = (9 - zipcode) as f64 * 100_000.0 * (0.5 + self.rng.random::<f64>());
        let mut hyears = (1 + self.rng.random_range(0..30)) as f64;
        let mut loan = self.rng.random::<f64>() * 500_000.0;

        let class = Self::classify(
            self.function,
            salary,
            commission,
            age,
            elevel,
            car,
            zipcode,
            hvalue,
            hyears,
            loan,
        );

        if self.perturbation > 0.0 {
            salary = self.perturb(salary, 20_000.0, 150_000.0);
            if commission > 0.0 {
                commission = self.perturb(commission, 10_000.0, 75_000.0);
            }
            age = self.perturb(age, 20.0, 80.0).round();
            hvalue = self.perturb(hvalue, 50_000.0, 900_000.0);
            hyears = self.perturb(hyears, 1.0, 30.0).round();
            loan = self.perturb(loan, 0.0, 500_000.0);
        }

        Some(Ok(Instance::new(
            vec![
                salary,
                commission,
                age,
                elevel as f64,
                car as f64,
                zipcode as f64,
                hvalue,
                hyears,
                loan,
            ],
            class,
        )))
    }
}

impl InstanceStream for AgrawalGenerator {
    fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }
}

// ---------------------------------------------------------------------------
// LED

/// Seven-segment display encodings for the digits 0..9.
pub const LED_SEGMENTS: [[u8; 7]; 10] = [
    [1, 1, 1, 0, 1, 1, 1],
    [0, 0, 1, 0, 0, 1, 0],
    [1, 0, 1, 1, 1, 0, 1],
    [1, 0, 1, 1, 0, 1, 1],
    [0, 1, 1, 1, 0, 1, 0],
    [1, 1, 0, 1, 0, 1, 1],
    [1, 1, 0, 1, 1, 1, 1],
    [1, 0, 1, 0, 0, 1, 0],
    [1, 1, 1, 1, 1, 1, 1],
    [1, 1, 1, 1, 0, 1, 1],
];

pub const LED_ATTRIBUTES: usize = 24;
pub const LED_RELEVANT: usize = 7;

/// 24 binary attributes (7 carrying the digit segments, 17 irrelevant),
/// 10 classes. Each relevant attribute is flipped independently with
/// probability `noise`. `segment_shift` rotates which positions carry the
/// segments, which is how drifted LED concepts are expressed.
#[derive(Debug, Clone)]
pub struct LedGenerator {
    schema: Arc<Schema>,
    rng: ChaCha12Rng,
    noise: f64,
    segment_shift: usize,
}

impl LedGenerator {
    pub fn new(noise: f64, segment_shift: usize, seed: u64) -> Self {
        assert!((0.0..=1.0).contains(&noise));
        LedGenerator {
            schema: Arc::new(Self::schema_def()),
            rng: rng_for(seed),
            noise,
            segment_shift: segment_shift % LED_ATTRIBUTES,
        }
    }

    pub fn schema_def() -> Schema {
        let binary = vec!["0".to_string(), "1".to_string()];
        let attrs = (0..LED_ATTRIBUTES)
            .map(|i| AttributeSpec::nominal(format!("att{i}"), binary.clone()))
            .collect();
        let labels = (0..10).map(|d| d.to_string()).collect();
        Schema::new(attrs, labels).expect("static schema")
    }

    /// Position of segment `j` under this concept.
    pub fn segment_position(&self, segment: usize) -> usize {
        (segment + self.segment_shift) % LED_ATTRIBUTES
    }
}

impl Iterator for LedGenerator {
    type Item = Result<Instance, StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        let digit = self.rng.random_range(0..10usize);
        let mut values = vec![0.0; LED_ATTRIBUTES];
        let mut relevant = [false; LED_ATTRIBUTES];
        for segment in 0..LED_RELEVANT {
            let pos = self.segment_position(segment);
            relevant[pos] = true;
            let mut bit = LED_SEGMENTS[digit][segment];
            if self.noise > 0.0 && self.rng.random::<f64>() < self.noise {
                bit = 1 - bit;
            }
            values[pos] = bit as f64;
        }
        for (pos, value) in values.iter_mut().enumerate() {
            if !relevant[pos] {
                *value = self.rng.random_range(0..2u8) as f64;
            }
        }
        Some(Ok(Instance::new(values, digit)))
    }
}

impl InstanceStream for LedGenerator {
    fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }
}

// ---------------------------------------------------------------------------
// Random tree generator

#[derive(Debug, Clone)]
enum RtgNode {
    Leaf(usize),
    NominalSplit { attr: usize, children: Vec<RtgNode> },
    NumericSplit { attr: usize, threshold: f64, left: Box<RtgNode>, right: Box<RtgNode> },
}

/// Labels uniform random instances by routing them through a randomly built
/// decision tree: five nominal attributes with five values each plus five
/// numeric attributes in [0, 1), two classes. No drift.
#[derive(Debug, Clone)]
pub struct RandomTreeGenerator {
    schema: Arc<Schema>,
    rng: ChaCha12Rng,
    root: RtgNode,
}

pub const RTG_NOMINALS: usize = 5;
pub const RTG_NUMERICS: usize = 5;
pub const RTG_NOMINAL_VALUES: usize = 5;

impl RandomTreeGenerator {
    pub fn new(max_depth: usize, first_leaf_depth: usize, leaf_fraction: f64, seed: u64) -> Self {
        // The model tree and the instances use separate rng streams so the
        // concept is fixed by the seed alone.
        let mut model_rng = rng_for(seed);
        let mut instance_rng = rng_for(seed);
        instance_rng.set_stream(1);
        let root = Self::build_node(
            &mut model_rng,
            0,
            max_depth,
            first_leaf_depth,
            leaf_fraction,
            &(0..RTG_NOMINALS).collect::<Vec<_>>(),
            &[0.0; RTG_NUMERICS],
            &[1.0; RTG_NUMERICS],
        );
        RandomTreeGenerator {
            schema: Arc::new(Self::schema_def()),
            rng: instance_rng,
            root,
        }
    }

    pub fn schema_def() -> Schema {
        let values: Vec<String> = (0..RTG_NOMINAL_VALUES).map(|v| v.to_string()).collect();
        let mut attrs: Vec<AttributeSpec> = (0..RTG_NOMINALS)
            .map(|i| AttributeSpec::nominal(format!("nominal{i}"), values.clone()))
            .collect();
        attrs.extend((0..RTG_NUMERICS).map(|i| AttributeSpec::numeric(format!("numeric{i}"))));
        Schema::new(attrs, vec!["class0".into(), "class1".into()]).expect("static schema")
    }

    #[allow(clippy::too_many_arguments)]
    fn build_node(
        rng: &mut ChaCha12Rng,
        depth: usize,
        max_depth: usize,
        first_leaf_depth: usize,
        leaf_fraction: f64,
        nominal_candidates: &[usize],
        num_min: &[f64; RTG_NUMERICS],
        num_max: &[f64; RTG_NUMERICS],
    ) -> RtgNode {
        if depth >= max_depth
            || (depth >= first_leaf_depth && leaf_fraction >= 1.0 - rng.random::<f64>())
        {
            return RtgNode::Leaf(rng.random_range(0..2usize));
        }
        let choice = rng.random_range(0..nominal_candidates.len() + RTG_NUMERICS);
        if choice < nominal_candidates.len() {
            let attr = nominal_candidates[choice];
            let remaining: Vec<usize> = nominal_candidates
                .iter()
                .copied()
                .filter(|&a| a != attr)
                .collect();
            let children = (0..RTG_NOMINAL_VALUES)
                .map(|_| {
                    Self::build_node(
                        rng,
                        depth + 1,
                        max_depth,
                        first_leaf_depth,
                        leaf_fraction,
                        &remaining,
                        num_min,
                        num_max,
                    )
                })
                .collect();
            RtgNode::NominalSplit { attr, children }
        } else {
            let numeric = choice - nominal_candidates.len();
            let attr = RTG_NOMINALS + numeric;
            let lo = num_min[numeric];
            let hi = num_max[numeric];
            let threshold = lo + (hi - lo) * rng.random::<f64>();
            let mut left_max = *num_max;
            left_max[numeric] = threshold;
            let mut right_min = *num_min;
            right_min[numeric] = threshold;
            let left = Self::build_node(
                rng,
                depth + 1,
                max_depth,
                first_leaf_depth,
                leaf_fraction,
                nominal_candidates,
                num_min,
                &left_max,
            );
            let right = Self::build_node(
                rng,
                depth + 1,
                max_depth,
                first_leaf_depth,
                leaf_fraction,
                nominal_candidates,
                &right_min,
                num_max,
            );
            RtgNode::NumericSplit {
                attr,
                threshold,
                left: Box::new(left),
                right: Box::new(right),
            }
        }
    }

    fn route(node: &RtgNode, values: &[f64]) -> usize {
        match node {
            RtgNode::Leaf(class) => *class,
            RtgNode::NominalSplit { attr, children } => {
                Self::route(&children[values[*attr] as usize], values)
            }
            RtgNode::NumericSplit {
                attr,
                threshold,
                left,
                right,
            } => {
                if values[*attr] <= *threshold {
                    Self::route(left, values)
                } else {
                    Self::route(right, values)
                }
            }
        }
    }
}

impl Iterator for RandomTreeGenerator {
    type Item = Result<Instance, StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut values = Vec::with_capacity(RTG_NOMINALS + RTG_NUMERICS);
        for _ in 0..RTG_NOMINALS {
            values.push(self.rng.random_range(0..RTG_NOMINAL_VALUES) as f64);
        }
        for _ in 0..RTG_NUMERICS {
            values.push(self.rng.random::<f64>());
        }
        let class = Self::route(&self.root, &values);
        Some(Ok(Instance::new(values, class)))
    }
}

impl InstanceStream for RandomTreeGenerator {
    fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }
}

// ---------------------------------------------------------------------------
// Random RBF

#[derive(Debug, Clone)]
struct Centroid {
    center: Vec<f64>,
    class: usize,
    std_dev: f64,
    direction: Vec<f64>,
}

/// Instances are Gaussian deviations from weighted random centroids; each
/// centroid carries a fixed class label. `drift_speed` moves every centroid
/// along a random unit direction per instance (reflecting off the [0, 1]
/// bounds), which yields incremental drift.
#[derive(Debug, Clone)]
pub struct RbfGenerator {
    schema: Arc<Schema>,
    rng: ChaCha12Rng,
    centroids: Vec<Centroid>,
    weights: Vec<f64>,
    weight_sum: f64,
    drift_speed: f64,
}

pub const RBF_ATTRIBUTES: usize = 10;
pub const RBF_CLASSES: usize = 5;

impl RbfGenerator {
    pub fn new(num_centroids: usize, drift_speed: f64, seed: u64) -> Self {
        assert!(num_centroids > 0);
        let mut model_rng = rng_for(seed);
        let mut instance_rng = rng_for(seed);
        instance_rng.set_stream(1);
        let mut centroids = Vec::with_capacity(num_centroids);
        let mut weights = Vec::with_capacity(num_centroids);
        for _ in 0..num_centroids {
            let center: Vec<f64> = (0..RBF_ATTRIBUTES).map(|_| model_rng.random()).collect();
            let class = model_rng.random_range(0..RBF_CLASSES);
            let std_dev = model_rng.random::<f64>();
            let mut direction: Vec<f64> = (0..RBF_ATTRIBUTES)
                .map(|_| 2.0 * model_rng.random::<f64>() - 1.0)
                .collect();
            let norm = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
            if norm > 0.0 {
                direction.iter_mut().for_each(|d| *d /= norm);
            }
            centroids.push(Centroid {
                center,
                class,
                std_dev,
                direction,
            });
            weights.push(model_rng.random::<f64>());
        }
        let weight_sum = weights.iter().sum();
        RbfGenerator {
            schema: Arc::new(Self::schema_def()),
            rng: instance_rng,
            centroids,
            weights,
            weight_sum,
            drift_speed,
        }
    }

    pub fn schema_def() -> Schema {
        let attrs = (0..RBF_ATTRIBUTES)
            .map(|i| AttributeSpec::numeric(format!("att{i}")))
            .collect();
        let labels = (0..RBF_CLASSES).map(|c| format!("class{c}")).collect();
        Schema::new(attrs, labels).expect("static schema")
    }

    fn move_centroids(&mut self) {
        if self.drift_speed == 0.0 {
            return;
        }
        for centroid in &mut self.centroids {
            for (coord, dir) in centroid.center.iter_mut().zip(&mut centroid.direction) {
                *coord += *dir * self.drift_speed;
                if *coord < 0.0 {
                    *coord = -*coord;
                    *dir = -*dir;
                } else if *coord > 1.0 {
                    *coord = 2.0 - *coord;
                    *dir = -*dir;
                }
            }
        }
    }
}

impl Iterator for RbfGenerator {
    type Item = Result<Instance, StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut pick = self.rng.random::<f64>() * self.weight_sum;
        let mut index = 0;
        for (i, w) in self.weights.iter().enumerate() {
            if pick <= *w || i == self.weights.len() - 1 {
                index = i;
                break;
            }
            pick -= w;
        }
        let centroid = &self.centroids[index];
        let offset: Vec<f64> = (0..RBF_ATTRIBUTES)
            .map(|_| 2.0 * self.rng.random::<f64>() - 1.0)
            .collect();
        let magnitude = offset.iter().map(|v| v * v).sum::<f64>().sqrt();
        let desired = normal_sample(&mut self.rng) * centroid.std_dev;
        let scale = if magnitude > 0.0 {
            desired / magnitude
        } else {
            0.0
        };
        let values: Vec<f64> = centroid
            .center
            .iter()
            .zip(&offset)
            .map(|(c, o)| c + o * scale)
            .collect();
        let class = centroid.class;
        self.move_centroids();
        Some(Ok(Instance::new(values, class)))
    }
}

impl InstanceStream for RbfGenerator {
    fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }
}

/// Standard normal draw via Box-Muller; keeps the generator free of
/// distribution-crate state so cloning stays cheap.
fn normal_sample(rng: &mut ChaCha12Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

// ---------------------------------------------------------------------------
// Hyperplane

/// Rotating hyperplane in [0, 1)^10: class 1 when the weighted sum exceeds
/// half the weight mass, class 0 otherwise (boundary ties resolve to 0).
/// `magnitude` shifts `drift_attrs` weights each instance; `noise` flips the
/// label.
#[derive(Debug, Clone)]
pub struct HyperplaneGenerator {
    schema: Arc<Schema>,
    rng: ChaCha12Rng,
    weights: Vec<f64>,
    directions: Vec<f64>,
    drift_attrs: usize,
    magnitude: f64,
    sigma_flip: f64,
    noise: f64,
}

pub const HYPERPLANE_ATTRIBUTES: usize = 10;

impl HyperplaneGenerator {
    pub fn new(magnitude: f64, noise: f64, drift_attrs: usize, seed: u64) -> Self {
        assert!(drift_attrs <= HYPERPLANE_ATTRIBUTES);
        assert!((0.0..=1.0).contains(&noise));
        let mut rng = rng_for(seed);
        let weights: Vec<f64> = (0..HYPERPLANE_ATTRIBUTES).map(|_| rng.random()).collect();
        HyperplaneGenerator {
            schema: Arc::new(Self::schema_def()),
            rng,
            weights,
            directions: vec![1.0; HYPERPLANE_ATTRIBUTES],
            drift_attrs,
            magnitude,
            sigma_flip: 0.1,
            noise,
        }
    }

    pub fn schema_def() -> Schema {
        let attrs = (0..HYPERPLANE_ATTRIBUTES)
            .map(|i| AttributeSpec::numeric(format!("att{i}")))
            .collect();
        Schema::new(attrs, vec!["class0".into(), "class1".into()]).expect("static schema")
    }

    /// Label rule shared with tests: class 1 strictly above the hyperplane.
    pub fn label(weights: &[f64], values: &[f64]) -> usize {
        let sum: f64 = weights.iter().zip(values).map(|(w, v)| w * v).sum();
        let half_mass: f64 = weights.iter().sum::<f64>() * 0.5;
        if sum > half_mass {
            1
        } else {
            0
        }
    }
}

impl Iterator for HyperplaneGenerator {
    type Item = Result<Instance, StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        let values: Vec<f64> = (0..HYPERPLANE_ATTRIBUTES)
            .map(|_| self.rng.random::<f64>())
            .collect();
        let mut class = Self::label(&self.weights, &values);
        if self.noise > 0.0 && self.rng.random::<f64>() < self.noise {
            class = 1 - class;
        }
        for i in 0..self.drift_attrs {
            self.weights[i] += self.directions[i] * self.magnitude;
            if self.rng.random::<f64>() < self.sigma_flip {
                self.directions[i] = -self.directions[i];
            }
        }
        Some(Ok(Instance::new(values, class)))
    }
}

impl InstanceStream for HyperplaneGenerator {
    fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }
}
