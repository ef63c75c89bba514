//! Per-learner change detection: an adaptive-windowing detector over 0/1
//! correctness values, wrapped in a monitor that exposes either a
//! warning+drift two-level scheme or a single drift level.

use std::collections::VecDeque;

/// Outcome of feeding one observation to the detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChangeFlag {
    Stable,
    Change,
}

/// Hoeffding-style cut threshold for comparing two sub-windows of sizes
/// `n0` and `n1` inside a window of length `n`:
/// `sqrt(1/(2m) * ln(4n/delta))` with `m = 1/(1/n0 + 1/n1)`.
pub fn cut_threshold(delta: f64, n0: u64, n1: u64, n: u64) -> f64 {
    let m = 1.0 / (1.0 / n0 as f64 + 1.0 / n1 as f64);
    ((1.0 / (2.0 * m)) * (4.0 * n as f64 / delta).ln()).sqrt()
}

/// Adaptive sliding window over 0/1 values, stored as an exponential
/// histogram: level `l` holds buckets of `2^l` observations, at most
/// `max_buckets` per level. Every update checks all bucket-boundary splits
/// and drops the oldest bucket while any split's mean gap reaches the cut
/// threshold.
#[derive(Debug, Clone)]
pub struct AdaptiveWindowDetector {
    delta: f64,
    max_buckets: usize,
    /// levels[l] holds the ones-count per bucket, oldest at the front.
    levels: Vec<VecDeque<u64>>,
    width: u64,
    total: u64,
}

pub const DEFAULT_MAX_BUCKETS: usize = 5;

impl AdaptiveWindowDetector {
    pub fn new(delta: f64) -> Self {
        Self::with_max_buckets(delta, DEFAULT_MAX_BUCKETS)
    }

    pub fn with_max_buckets(delta: f64, max_buckets: usize) -> Self {
        assert!(delta > 0.0 && delta < 1.0, "delta must be in (0,1)");
        assert!(max_buckets >= 1);
        AdaptiveWindowDetector {
            delta,
            max_buckets,
            levels: Vec::new(),
            width: 0,
            total: 0,
        }
    }

    pub fn width(&self) -> u64 {
        self.width
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Mean of the retained observations, exactly `total/width`.
    pub fn mean(&self) -> f64 {
        if self.width == 0 {
            0.0
        } else {
            self.total as f64 / self.width as f64
        }
    }

    pub fn bucket_count(&self) -> usize {
        self.levels.iter().map(VecDeque::len).sum()
    }

    fn insert(&mut self, x: bool) {
        if self.levels.is_empty() {
            self.levels.push(VecDeque::new());
        }
        self.levels[0].push_back(x as u64);
        self.width += 1;
        self.total += x as u64;
        // Merge pairs of oldest buckets upward while a level overflows.
        let mut level = 0;
        while self.levels[level].len() > self.max_buckets {
            let a = self.levels[level].pop_front().expect("overflow implies content");
            let b = self.levels[level].pop_front().expect("overflow implies content");
            if self.levels.len() == level + 1 {
                self.levels.push(VecDeque::new());
            }
            self.levels[level + 1].push_back(a + b);
            level += 1;
        }
    }

    fn drop_oldest_bucket(&mut self) {
        for level in (0..self.levels.len()).rev() {
            if let Some(ones) = self.levels[level].pop_front() {
                self.width -= 1 << level;
                self.total -= ones;
                return;
            }
        }
    }

    /// True when some bucket-boundary split has a mean gap at or above the
    /// cut threshold. Splits are scanned from the oldest boundary inward.
    fn any_split_fires(&self) -> bool {
        if self.width < 2 {
            return false;
        }
        let mut n0 = 0u64;
        let mut u0 = 0u64;
        for level in (0..self.levels.len()).rev() {
            let size = 1u64 << level;
            for &ones in &self.levels[level] {
                n0 += size;
                u0 += ones;
                if n0 >= self.width {
                    return false;
                }
                let n1 = self.width - n0;
                let u1 = self.total - u0;
                let gap = (u0 as f64 / n0 as f64 - u1 as f64 / n1 as f64).abs();
                if gap >= cut_threshold(self.delta, n0, n1, self.width) {
                    return true;
                }
            }
        }
        false
    }

    /// Appends `x` and reports whether the window was cut. While a cut
    /// condition holds, the oldest bucket is dropped and the scan restarts,
    /// so the retained window reflects only post-change data.
    pub fn update(&mut self, x: bool) -> ChangeFlag {
        self.insert(x);
        let mut changed = false;
        while self.any_split_fires() {
            self.drop_oldest_bucket();
            changed = true;
        }
        if changed {
            ChangeFlag::Change
        } else {
            ChangeFlag::Stable
        }
    }
}

/// Brute-force reference window: identical cut rule and drop semantics, but
/// every observation is retained verbatim and every split point is checked.
/// Used as the independent oracle for the detector.
#[derive(Debug, Clone)]
pub struct BruteForceWindow {
    delta: f64,
    data: VecDeque<u8>,
}

impl BruteForceWindow {
    pub fn new(delta: f64) -> Self {
        BruteForceWindow {
            delta,
            data: VecDeque::new(),
        }
    }

    pub fn width(&self) -> u64 {
        self.data.len() as u64
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            0.0
        } else {
            self.data.iter().map(|&v| v as u64).sum::<u64>() as f64 / self.data.len() as f64
        }
    }

    fn any_split_fires(&self) -> bool {
        let n = self.data.len() as u64;
        if n < 2 {
            return false;
        }
        let total: u64 = self.data.iter().map(|&v| v as u64).sum();
        let mut u0 = 0u64;
        for i in 1..n {
            u0 += self.data[(i - 1) as usize] as u64;
            let n0 = i;
            let n1 = n - i;
            let u1 = total - u0;
            let gap = (u0 as f64 / n0 as f64 - u1 as f64 / n1 as f64).abs();
            if gap >= cut_threshold(self.delta, n0, n1, n) {
                return true;
            }
        }
        false
    }

    pub fn update(&mut self, x: bool) -> ChangeFlag {
        self.data.push_back(x as u8);
        let mut changed = false;
        while self.any_split_fires() {
            self.data.pop_front();
            changed = true;
        }
        if changed {
            ChangeFlag::Change
        } else {
            ChangeFlag::Stable
        }
    }
}

/// Signal from a [`DriftMonitor`] update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftSignal {
    None,
    Warning,
    Drift,
}

/// Default confidence of the permissive warning level.
pub const DEFAULT_WARN_DELTA: f64 = 1e-4;
/// Default confidence of the restrictive drift level.
pub const DEFAULT_DRIFT_DELTA: f64 = 1e-5;

/// Per-learner drift monitor fed with prediction correctness. Two-level mode
/// pairs a permissive warning detector with a restrictive drift detector;
/// single-level mode confirms drift directly.
#[derive(Debug, Clone)]
pub struct DriftMonitor {
    warn: Option<AdaptiveWindowDetector>,
    drift: AdaptiveWindowDetector,
}

impl DriftMonitor {
    pub fn two_level(warn_delta: f64, drift_delta: f64) -> Self {
        assert!(
            warn_delta > drift_delta,
            "warning level must be more permissive than the drift level"
        );
        DriftMonitor {
            warn: Some(AdaptiveWindowDetector::new(warn_delta)),
            drift: AdaptiveWindowDetector::new(drift_delta),
        }
    }

    pub fn single_level(drift_delta: f64) -> Self {
        DriftMonitor {
            warn: None,
            drift: AdaptiveWindowDetector::new(drift_delta),
        }
    }

    pub fn is_two_level(&self) -> bool {
        self.warn.is_some()
    }

    /// Feeds the error indicator `1 - correct` to the contained detectors.
    /// A confirmed drift resets both detectors.
    pub fn update(&mut self, correct: bool) -> DriftSignal {
        let error = !correct;
        let warn_fired = self
            .warn
            .as_mut()
            .map(|d| d.update(error) == ChangeFlag::Change)
            .unwrap_or(false);
        let drift_fired = self.drift.update(error) == ChangeFlag::Change;
        if drift_fired {
            self.reset();
            DriftSignal::Drift
        } else if warn_fired {
            DriftSignal::Warning
        } else {
            DriftSignal::None
        }
    }

    /// Clears the internal detectors (used on drift and on learner reset).
    pub fn reset(&mut self) {
        if let Some(warn) = &self.warn {
            let delta = warn.delta();
            self.warn = Some(AdaptiveWindowDetector::new(delta));
        }
        let delta = self.drift.delta();
        self.drift = AdaptiveWindowDetector::new(delta);
    }
}
