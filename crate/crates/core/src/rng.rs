//! Reproducible random streams and the block-parallel Monte Carlo driver.
//!
//! Every Monte Carlo computation is cut into fixed blocks of [`BLOCK_LEN`]
//! replications. Block `i` draws from the ChaCha8 stream `(seed, i)`, so the
//! draws do not depend on how many worker threads process the blocks, and
//! block results are merged in index order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Replications per Monte Carlo block (2^14).
pub const BLOCK_LEN: u64 = 1 << 14;

pub type StreamRng = ChaCha8Rng;

/// The generator for stream `stream_id` under `seed`.
pub fn stream(seed: u64, stream_id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// SplitMix64 finalizer, used to derive independent sub-seeds.
pub fn mix(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `work(rng, len)` once per block and returns the block results in
/// block order. `reps` is split into `ceil(reps / BLOCK_LEN)` blocks; the last
/// one may be short.
pub fn par_blocks<T, F>(reps: u64, seed: u64, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut StreamRng, u64) -> T + Sync,
{
    let blocks = reps.div_ceil(BLOCK_LEN);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let len = BLOCK_LEN.min(reps - b * BLOCK_LEN);
            let mut rng = stream(seed, b);
            work(&mut rng, len)
        })
        .collect()
}

/// Streaming mean/covariance accumulator (Welford update, Chan merge).
#[derive(Debug, Clone)]
pub struct MomentAccumulator {
    count: u64,
    mean: Vec<f64>,
    comoment: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(dim: usize) -> Self {
        MomentAccumulator { count: 0, mean: vec![0.0; dim], comoment: vec![0.0; dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn push(&mut self, x: &[f64]) {
        let d = self.dim();
        debug_assert_eq!(x.len(), d);
        self.count += 1;
        let n = self.count as f64;
        let mut delta = [0.0f64; 64];
        let delta = &mut delta[..d];
        for i in 0..d {
            delta[i] = x[i] - self.mean[i];
            self.mean[i] += delta[i] / n;
        }
        for i in 0..d {
            let after = x[i] - self.mean[i];
            for j in 0..d {
                self.comoment[i * d + j] += after * delta[j];
            }
        }
    }

    pub fn merge(&mut self, other: &MomentAccumulator) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let d = self.dim();
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta: Vec<f64> = (0..d).map(|i| other.mean[i] - self.mean[i]).collect();
        for i in 0..d {
            for j in 0..d {
                self.comoment[i * d + j] +=
                    other.comoment[i * d + j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        for i in 0..d {
            self.mean[i] += delta[i] * nb / n;
        }
        self.count += other.count;
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.mean[i]
    }

    pub fn means(&self) -> &[f64] {
        &self.mean
    }

    /// Unbiased sample covariance between coordinates `i` and `j`.
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        self.comoment[i * self.dim() + j] / (self.count - 1) as f64
    }

    /// Standard error of the mean of coordinate `i`.
    pub fn stderr(&self, i: usize) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        (self.covariance(i, i).max(0.0) / self.count as f64).sqrt()
    }

    /// Delta-method standard error of a smooth function of the means, given
    /// its gradient.
    pub fn propagated_stderr(&self, gradient: &[f64]) -> f64 {
        let d = self.dim();
        if self.count < 2 {
            return 0.0;
        }
        let mut var = 0.0;
        for i in 0..d {
            if gradient[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                var += gradient[i] * gradient[j] * self.covariance(i, j);
            }
        }
        (var.max(0.0) / self.count as f64).sqrt()
    }
}

/// Accumulates `dim`-vectors produced by `sample` over `reps` replications,
/// block-parallel and deterministic in `seed`.
pub fn mc_moments<F>(reps: u64, seed: u64, dim: usize, sample: F) -> MomentAccumulator
where
    F: Fn(&mut StreamRng, &mut [f64]) + Sync,
{
    assert!(dim <= 64, "at most 64 simultaneous moments");
    let blocks = par_blocks(reps, seed, |rng, len| {
        let mut acc = MomentAccumulator::new(dim);
        let mut buf = vec![0.0; dim];
        for _ in 0..len {
            sample(rng, &mut buf);
            acc.push(&buf);
        }
        acc
    });
    let mut total = MomentAccumulator::new(dim);
    for b in &blocks {
        total.merge(b);
    }
    total
}
