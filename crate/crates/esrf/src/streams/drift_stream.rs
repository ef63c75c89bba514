//! Sigmoid composition of two concepts into one drifting stream.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::{Instance, InstanceStream, Schema, StreamError};

/// Emits from a base stream A and a drift-target stream B. Instance `i` is
/// drawn from B with probability `1 / (1 + exp(-4 (i - position) / width))`,
/// so `width = 1` approximates an abrupt switch at `position` and large
/// widths give a gradual handover.
pub struct DriftStream {
    base: Box<dyn InstanceStream>,
    target: Box<dyn InstanceStream>,
    position: u64,
    width: u64,
    rng: ChaCha12Rng,
    emitted: u64,
    schema: Arc<Schema>,
}

impl DriftStream {
    pub fn new(
        base: Box<dyn InstanceStream>,
        target: Box<dyn InstanceStream>,
        position: u64,
        width: u64,
        seed: u64,
    ) -> Result<Self, StreamError> {
        assert!(width >= 1, "drift width must be positive");
        if base.schema().as_ref() != target.schema().as_ref() {
            return Err(StreamError::SchemaMismatch(
                "drift composition requires both streams to share one schema".into(),
            ));
        }
        let schema = base.schema().clone();
        Ok(DriftStream {
            base,
            target,
            position,
            width,
            rng: ChaCha12Rng::seed_from_u64(seed),
            emitted: 0,
            schema,
        })
    }

    /// Probability that instance `i` comes from the drift target.
    pub fn target_probability(position: u64, width: u64, i: u64) -> f64 {
        let x = -4.0 * (i as f64 - position as f64) / width as f64;
        1.0 / (1.0 + x.exp())
    }
}

impl Iterator for DriftStream {
    type Item = Result<Instance, StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        let p = Self::target_probability(self.position, self.width, self.emitted);
        self.emitted += 1;
        if self.rng.random::<f64>() < p {
            self.target.next()
        } else {
            self.base.next()
        }
    }
}

impl InstanceStream for DriftStream {
    fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }
}
