use super::{Environment, StepOutcome};
use crate::chain::TabularChain;
use crate::error::{invalid, Error, Result};
use crate::rng::{sample_index, stream, Stream, StreamRng};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Random leveled Markov reward process.
///
/// States are grouped into levels `[n_x, n_z^1, ..., n_y]`; every state of a
/// level moves only to states of the next level and the last level is
/// terminal. Rewards are paid only on transitions into the last level.
#[derive(Debug, Clone, PartialEq)]
pub struct LeveledChainSpec {
    pub level_sizes: Vec<usize>,
    pub reward_mean: f64,
    pub reward_std: f64,
    pub discount: f64,
    pub seed: u64,
}

impl LeveledChainSpec {
    pub fn new(level_sizes: Vec<usize>, seed: u64) -> Self {
        Self {
            level_sizes,
            reward_mean: 10.0,
            reward_std: 10.0,
            discount: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.level_sizes.len() < 2 {
            return invalid("a leveled chain needs at least two levels");
        }
        if self.level_sizes.contains(&0) {
            return invalid("every level needs at least one state");
        }
        if self.reward_std.is_nan() || self.reward_std < 0.0 || !self.reward_mean.is_finite() {
            return invalid("reward distribution parameters are invalid");
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.level_sizes.iter().sum()
    }

    /// First state index of every level.
    pub fn level_offsets(&self) -> Vec<usize> {
        self.level_sizes
            .iter()
            .scan(0, |acc, &n| {
                let start = *acc;
                *acc += n;
                Some(start)
            })
            .collect()
    }

    pub fn level_of(&self, s: usize) -> usize {
        let mut acc = 0;
        for (l, &n) in self.level_sizes.iter().enumerate() {
            acc += n;
            if s < acc {
                return l;
            }
        }
        self.level_sizes.len()
    }
}

pub fn build_leveled_chain(spec: &LeveledChainSpec) -> Result<TabularChain> {
    spec.validate()?;
    let n = spec.n_states();
    let offsets = spec.level_offsets();
    let levels = spec.level_sizes.len();
    let mut rng = stream(spec.seed, Stream::EnvBuild);

    let mut transition = DMatrix::zeros(n, n);
    for l in 0..levels - 1 {
        let (src, dst) = (offsets[l], offsets[l + 1]);
        for s in src..src + spec.level_sizes[l] {
            // (0, 1] keeps every row normalisable.
            let weights: Vec<f64> = (0..spec.level_sizes[l + 1])
                .map(|_| 1.0 - rng.random::<f64>())
                .collect();
            let total: f64 = weights.iter().sum();
            for (j, w) in weights.iter().enumerate() {
                transition[(s, dst + j)] = w / total;
            }
        }
    }
    let last = offsets[levels - 1];
    for s in last..n {
        transition[(s, s)] = 1.0;
    }

    let normal = Normal::new(spec.reward_mean, spec.reward_std)
        .map_err(|e| Error::InvalidInput(format!("reward distribution: {e}")))?;
    let mut reward = DMatrix::zeros(n, n);
    let penultimate = offsets[levels - 2];
    for s in penultimate..last {
        for t in last..n {
            reward[(s, t)] = normal.sample(&mut rng);
        }
    }

    let terminal = (0..n).map(|s| s >= last).collect();
    let mut initial = vec![0.0; n];
    for p in initial.iter_mut().take(spec.level_sizes[0]) {
        *p = 1.0 / spec.level_sizes[0] as f64;
    }
    TabularChain::new(transition, reward, spec.discount)?
        .with_terminal_mask(terminal)?
        .with_initial_distribution(initial)
}

/// Sampling session over a chain; the single implicit action is ignored.
#[derive(Debug, Clone)]
pub struct ChainEnv {
    chain: TabularChain,
    rows: Vec<Vec<f64>>,
    state: usize,
    finished: bool,
}

impl ChainEnv {
    pub fn new(chain: TabularChain) -> Self {
        let rows = (0..chain.n_states())
            .map(|s| chain.transition().row(s).iter().copied().collect())
            .collect();
        Self {
            chain,
            rows,
            state: 0,
            finished: true,
        }
    }

    pub fn chain(&self) -> &TabularChain {
        &self.chain
    }
}

impl Environment for ChainEnv {
    fn n_states(&self) -> usize {
        self.chain.n_states()
    }

    fn n_actions(&self) -> usize {
        1
    }

    fn discount(&self) -> f64 {
        self.chain.discount()
    }

    fn reset(&mut self, rng: &mut StreamRng) -> usize {
        self.state = sample_index(self.chain.initial_distribution(), rng);
        self.finished = false;
        self.state
    }

    fn step(&mut self, _action: usize, rng: &mut StreamRng) -> Result<StepOutcome> {
        if self.finished {
            return invalid("episode finished; call reset before stepping");
        }
        let next = sample_index(&self.rows[self.state], rng);
        let reward = self.chain.reward_of(self.state, next);
        let terminated = self.chain.is_terminal(next);
        self.state = next;
        self.finished = terminated;
        Ok(StepOutcome {
            reward,
            discount: if terminated {
                0.0
            } else {
                self.chain.discount()
            },
            next_state: next,
            terminated,
            truncated: false,
        })
    }

    fn state(&self) -> usize {
        self.state
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_transition_chain() {
        let spec = LeveledChainSpec::new(vec![1, 1], 3);
        let c = build_leveled_chain(&spec).unwrap();
        assert_eq!(c.prob(0, 1), 1.0);
        let mut rng = stream(3, Stream::EnvBuild);
        let _: f64 = rng.random();
        let expected = Normal::new(10.0, 10.0).unwrap().sample(&mut rng);
        assert_eq!(c.reward_of(0, 1), expected);
        assert!(c.is_terminal(1));
        assert!(!c.is_terminal(0));
    }

    #[test]
    fn levels_only_feed_the_next_level() {
        let spec = LeveledChainSpec::new(vec![4, 3, 2], 11);
        let c = build_leveled_chain(&spec).unwrap();
        for s in 0..9 {
            for t in 0..9 {
                let p = c.prob(s, t);
                let (ls, lt) = (spec.level_of(s), spec.level_of(t));
                if ls < 2 {
                    assert_eq!(p > 0.0, lt == ls + 1, "{s}->{t}");
                }
                if c.reward_of(s, t) != 0.0 {
                    assert_eq!((ls, lt), (1, 2));
                }
            }
        }
        assert_eq!(c.initial_distribution()[..4], [0.25; 4]);
    }

    #[test]
    fn channeling_and_broadcasting_shapes() {
        for sizes in [vec![500, 50, 5], vec![5, 50, 500]] {
            let spec = LeveledChainSpec::new(sizes.clone(), 0);
            let c = build_leveled_chain(&spec).unwrap();
            assert_eq!(c.n_states(), 555);
            let terminals = c.terminal_mask().iter().filter(|&&t| t).count();
            assert_eq!(terminals, sizes[2]);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(build_leveled_chain(&LeveledChainSpec::new(vec![3], 0)).is_err());
        assert!(build_leveled_chain(&LeveledChainSpec::new(vec![3, 0], 0)).is_err());
    }

    #[test]
    fn stepping_requires_reset() {
        let c = build_leveled_chain(&LeveledChainSpec::new(vec![2, 2], 0)).unwrap();
        let mut env = ChainEnv::new(c);
        let mut rng = stream(0, Stream::EnvStep);
        assert!(env.step(0, &mut rng).is_err());
        let s = env.reset(&mut rng);
        assert!(s < 2);
        let out = env.step(0, &mut rng).unwrap();
        assert!(out.terminated && out.discount == 0.0 && out.next_state >= 2);
        assert!(env.step(0, &mut rng).is_err());
    }
}
