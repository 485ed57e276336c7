use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

pub const DEFAULT_SEED: u64 = 0x5EED_2024;

/// Gaussian stream for one Monte Carlo path.
///
/// Each `(seed, path)` pair selects its own ChaCha stream, so results do not
/// depend on how paths are scheduled across threads.
#[derive(Debug, Clone)]
pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn new(seed: u64, path: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path);
        Self { rng }
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen()
    }

    pub fn bit(&mut self) -> bool {
        self.rng.gen()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Runs `f` once per path in parallel and returns results in path order.
pub fn monte_carlo<T, F>(seed: u64, n_paths: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut NormalStream, usize) -> T + Sync,
{
    (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut stream = NormalStream::new(seed, i as u64);
            f(&mut stream, i)
        })
        .collect()
}
