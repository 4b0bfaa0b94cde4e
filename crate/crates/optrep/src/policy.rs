//! Sampling policy shared by every probabilistic operation.
//!
//! Heralded components either enumerate all measurement branches with their
//! exact probabilities (`Exhaustive`) or draw one branch from a caller-owned
//! random stream (`Sample`). A sampled branch still carries its exact,
//! unconditioned probability.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub enum Policy<'a> {
    /// Return every branch; probabilities sum to one.
    Exhaustive,
    /// Draw a single branch by its weight from the given stream.
    Sample(&'a mut ChaCha8Rng),
}

impl Policy<'_> {
    /// Either all outcomes or a single weighted draw, depending on the mode.
    pub(crate) fn choose<T>(&mut self, outcomes: Vec<T>, weight: impl Fn(&T) -> f64) -> Vec<T> {
        match self {
            Policy::Exhaustive => outcomes,
            Policy::Sample(rng) => {
                let total: f64 = outcomes.iter().map(&weight).sum();
                let mut u = rng.random::<f64>() * total;
                let last = outcomes.len() - 1;
                for (i, o) in outcomes.iter().enumerate() {
                    u -= weight(o);
                    if u <= 0.0 || i == last {
                        let mut v = outcomes;
                        return vec![v.swap_remove(i)];
                    }
                }
                unreachable!("weighted draw always selects a branch")
            }
        }
    }

    pub fn is_exhaustive(&self) -> bool {
        matches!(self, Policy::Exhaustive)
    }
}

/// Independent substream for one Monte Carlo trial.
///
/// Trial `i` draws from the ChaCha stream `(seed, i+1)`, so trials are
/// order-independent and a chain run is reproducible regardless of how the
/// trials are scheduled across threads.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial + 1);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exhaustive_returns_all() {
        let got = Policy::Exhaustive.choose(vec![1, 2, 3], |_| 1.0);
        assert_eq!(got, vec![1, 2, 3]);
    }

    #[test]
    fn sampling_is_reproducible_and_weighted() {
        let mut rng = trial_rng(42, 0);
        let mut hits = [0u32; 2];
        for _ in 0..10_000 {
            let picked = Policy::Sample(&mut rng).choose(vec![0usize, 1], |&i| {
                if i == 0 {
                    0.25
                } else {
                    0.75
                }
            });
            hits[picked[0]] += 1;
        }
        // 3σ band around 2500 for p = 0.25.
        let sigma = (10_000.0f64 * 0.25 * 0.75).sqrt();
        assert!((hits[0] as f64 - 2500.0).abs() < 3.0 * sigma, "{hits:?}");

        let a: Vec<u64> = (0..5).map(|t| trial_rng(9, t).random()).collect();
        let b: Vec<u64> = (0..5).map(|t| trial_rng(9, t).random()).collect();
        assert_eq!(a, b);
    }
}
