//! Deterministic random streams.
//!
//! Every run uses ChaCha8 seeded from a 64-bit experiment seed. Components get
//! disjoint ChaCha streams of that seed, so two components never share draws
//! and adding a component never shifts another component's sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Fixed stream offsets per component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    EnvBuild,
    EnvStep,
    Agent,
}

impl Stream {
    fn offset(self) -> u64 {
        match self {
            Stream::EnvBuild => 0,
            Stream::EnvStep => 1,
            Stream::Agent => 2,
        }
    }
}

pub fn stream(seed: u64, component: Stream) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(component.offset());
    rng
}

/// Draws an index from unnormalised non-negative weights by inverse CDF.
/// Falls back to the last positive weight when round-off leaves the draw
/// past the cumulative total.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}
