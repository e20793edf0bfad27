use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Evaluation budget below which expectations are computed exhaustively.
pub const EXHAUSTIVE_LIMIT: u64 = 10_000_000;

/// Monte-Carlo work is split into this many independent RNG streams
/// regardless of the worker count.
pub const SHARDS: u64 = 64;

const SUM_CHUNK: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Standard error of the mean; zero for exhaustive evaluations.
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
    pub exhaustive: bool,
}

impl Estimate {
    pub fn exact(value: f64, evaluations: u64, seed: u64) -> Self {
        Self {
            value,
            std_error: 0.0,
            samples: evaluations,
            seed,
            exhaustive: true,
        }
    }

    /// Scales value and standard error by `c > 0`.
    pub fn scaled(self, c: f64) -> Self {
        Self {
            value: self.value * c,
            std_error: self.std_error * c,
            ..self
        }
    }
}

/// Welford accumulator with Chan's merge.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2
            + other.m2
            + delta * delta * (self.count as f64 * other.count as f64 / count as f64);
        Moments { count, mean, m2 }
    }
}

/// Plain Monte-Carlo mean of `draw` over `samples` draws.
///
/// Shard `s` owns ChaCha stream `s` of `seed` and `samples / SHARDS` draws
/// (plus one for the first `samples % SHARDS` shards).
pub fn sample_mean<F>(samples: u64, seed: u64, draw: F) -> Estimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let per = samples / SHARDS;
    let extra = samples % SHARDS;
    let shards: Vec<Moments> = (0..SHARDS)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            let mut acc = Moments::default();
            for _ in 0..per + u64::from(s < extra) {
                acc.push(draw(&mut rng));
            }
            acc
        })
        .collect();
    let total = shards.into_iter().fold(Moments::default(), Moments::merge);
    let std_error = if total.count > 1 {
        (total.m2 / (total.count - 1) as f64 / total.count as f64).sqrt()
    } else {
        0.0
    };
    Estimate {
        value: total.mean,
        std_error,
        samples: total.count,
        seed,
        exhaustive: false,
    }
}

/// Exact mean of `eval(0), …, eval(total−1)`.
pub fn exhaustive_mean<F>(total: u64, seed: u64, eval: F) -> Estimate
where
    F: Fn(u64) -> f64 + Sync,
{
    let chunk = SUM_CHUNK as u64;
    let chunks = total.div_ceil(chunk);
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| (c * chunk..((c + 1) * chunk).min(total)).map(&eval).sum())
        .collect();
    Estimate::exact(partial.iter().sum::<f64>() / total as f64, total, seed)
}

/// Sum in fixed-size chunks, merged left to right.
pub fn ordered_sum(values: &[f64]) -> f64 {
    let partial: Vec<f64> = values
        .par_chunks(SUM_CHUNK)
        .map(|c| c.iter().sum::<f64>())
        .collect();
    partial.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn deterministic_for_seed() {
        let f = |rng: &mut ChaCha8Rng| rng.gen::<f64>();
        let a = sample_mean(10_007, 42, f);
        let b = sample_mean(10_007, 42, f);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.samples, 10_007);
        let c = sample_mean(10_007, 43, f);
        assert_ne!(a.value, c.value);
    }

    #[test]
    fn uniform_mean_and_error() {
        let e = sample_mean(200_000, 7, |rng| rng.gen::<f64>());
        assert!((e.value - 0.5).abs() < 4.0 * e.std_error);
        // σ/√n for U(0,1)
        let expect = (1.0f64 / 12.0).sqrt() / (200_000f64).sqrt();
        assert!((e.std_error / expect - 1.0).abs() < 0.02);
    }

    #[test]
    fn constant_draws_have_zero_error() {
        let e = sample_mean(1000, 1, |_| 1.0);
        assert_eq!(e.value, 1.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn exhaustive() {
        let e = exhaustive_mean(100_000, 0, |i| i as f64);
        assert_eq!(e.value, 49_999.5);
        assert!(e.exhaustive);
        assert_eq!(ordered_sum(&[1.0; 40_000]), 40_000.0);
    }
}
