//! Per-attribute sufficient statistics kept at each leaf: per-class Gaussian
//! summaries for numeric attributes, per-class value counts for nominal ones.

use statrs::function::erf::erf;

/// Weighted running mean/variance (Welford update) plus the observed value
/// range, one per (attribute, class) pair.
#[derive(Debug, Clone, Default)]
pub struct GaussianStats {
    pub weight: f64,
    pub mean: f64,
    m2: f64,
    pub min: f64,
    pub max: f64,
}

impl GaussianStats {
    pub fn add(&mut self, value: f64, weight: f64) {
        if weight <= 0.0 {
            return;
        }
        if self.weight == 0.0 {
            self.min = value;
            self.max = value;
        } else {
            self.min = self.min.min(value);
            self.max = self.max.max(value);
        }
        self.weight += weight;
        let delta = value - self.mean;
        self.mean += delta * weight / self.weight;
        self.m2 += weight * delta * (value - self.mean);
    }

    /// Sample variance (weight-1 denominator), 0 until two units of weight.
    pub fn variance(&self) -> f64 {
        if self.weight > 1.0 {
            (self.m2 / (self.weight - 1.0)).max(0.0)
        } else {
            0.0
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Normal density at `value`; degenerates to an indicator when the
    /// estimator has no spread yet.
    pub fn pdf(&self, value: f64) -> f64 {
        if self.weight <= 0.0 {
            return 0.0;
        }
        let std = self.std_dev();
        if std > 0.0 {
            let z = (value - self.mean) / std;
            (-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt())
        } else if value == self.mean {
            1.0
        } else {
            0.0
        }
    }

    /// Estimated weight of observations at or below `value`, clamped by the
    /// observed range.
    pub fn weight_below(&self, value: f64) -> f64 {
        if self.weight <= 0.0 || value < self.min {
            return 0.0;
        }
        if value >= self.max {
            return self.weight;
        }
        let std = self.std_dev();
        if std > 0.0 {
            let z = (value - self.mean) / std;
            self.weight * 0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
        } else if value >= self.mean {
            self.weight
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone)]
pub struct NumericObserver {
    pub per_class: Vec<GaussianStats>,
}

/// Number of candidate thresholds evaluated per split check.
pub const NUMERIC_SPLIT_POINTS: usize = 10;

impl NumericObserver {
    pub fn new(num_classes: usize) -> Self {
        NumericObserver {
            per_class: vec![GaussianStats::default(); num_classes],
        }
    }

    pub fn observe(&mut self, value: f64, class: usize, weight: f64) {
        self.per_class[class].add(value, weight);
    }

    pub fn pdf(&self, value: f64, class: usize) -> f64 {
        self.per_class[class].pdf(value)
    }

    /// Candidate thresholds evenly spaced strictly inside the observed range.
    pub fn split_point_candidates(&self) -> Vec<f64> {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for stats in &self.per_class {
            if stats.weight > 0.0 {
                min = min.min(stats.min);
                max = max.max(stats.max);
            }
        }
        if !(max > min) {
            return Vec::new();
        }
        let step = (max - min) / (NUMERIC_SPLIT_POINTS as f64 + 1.0);
        (1..=NUMERIC_SPLIT_POINTS)
            .map(|i| min + step * i as f64)
            .collect()
    }

    /// Class distributions on both sides of `threshold` under the Gaussian
    /// approximation.
    pub fn split_distributions(&self, threshold: f64) -> (Vec<f64>, Vec<f64>) {
        let mut lhs = Vec::with_capacity(self.per_class.len());
        let mut rhs = Vec::with_capacity(self.per_class.len());
        for stats in &self.per_class {
            let below = stats.weight_below(threshold);
            lhs.push(below);
            rhs.push(stats.weight - below);
        }
        (lhs, rhs)
    }
}

#[derive(Debug, Clone)]
pub struct NominalObserver {
    /// counts[class][value]
    pub counts: Vec<Vec<f64>>,
    pub arity: usize,
}

impl NominalObserver {
    pub fn new(num_classes: usize, arity: usize) -> Self {
        NominalObserver {
            counts: vec![vec![0.0; arity]; num_classes],
            arity,
        }
    }

    pub fn observe(&mut self, value_index: usize, class: usize, weight: f64) {
        self.counts[class][value_index] += weight;
    }

    /// Laplace-smoothed P(value | class).
    pub fn probability(&self, value_index: usize, class: usize) -> f64 {
        let class_total: f64 = self.counts[class].iter().sum();
        (self.counts[class][value_index] + 1.0) / (class_total + self.arity as f64)
    }

    /// One class distribution per category.
    pub fn split_distributions(&self) -> Vec<Vec<f64>> {
        let num_classes = self.counts.len();
        (0..self.arity)
            .map(|v| (0..num_classes).map(|c| self.counts[c][v]).collect())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub enum AttributeObserver {
    Numeric(NumericObserver),
    Nominal(NominalObserver),
}
