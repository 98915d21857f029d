//! Feynman–Kac Monte Carlo.
//!
//! Paths are simulated in fixed batches of [`BATCH`]. Batch `b` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `b`, and per-batch moments are
//! merged in batch order. The result depends only on the configuration, not
//! on how many threads ran the batches.

mod estimators;
mod paths;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use estimators::{
    exit_before_death, green_mc, heat_kernel, integrate_potential_along_path, survival_probability, GreenEstimate,
};
pub(crate) use paths::{PathSim, Point, MAX_DIM};

/// Paths per batch; the unit of parallel work and of seeding.
pub const BATCH: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Exec {
    /// Batches run on the rayon pool (sequentially without the `parallel` feature).
    #[default]
    Parallel,
    Sequential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub paths: u64,
    /// Base time step before refinement.
    pub dt: f64,
    /// Refine a segment while `Δt · max V` at its ends exceeds this.
    pub substep_theta: f64,
    /// Also refine while `Δt` exceeds this times the squared distance to the origin
    /// (singular potentials only).
    pub theta_geo: f64,
    /// Log-weights below this count as exact zeros.
    pub weight_floor: f64,
    /// Russian roulette: a path whose log-weight drops below this level
    /// survives with probability 1/10 and has its weight multiplied by 10.
    /// Levels at or below `weight_floor` disable it.
    pub roulette_level: f64,
    /// Paths reaching `|x| < r_min` get weight zero (singular potentials only).
    pub r_min: f64,
    /// Segment budget per path.
    pub max_segments: u64,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            paths: 10_000,
            dt: 0.01,
            substep_theta: 0.05,
            theta_geo: 0.02,
            weight_floor: -745.0,
            roulette_level: -10.0,
            r_min: 1e-4,
            max_segments: 1_000_000,
            seed: 0,
            exec: Exec::Parallel,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::Config("paths must be at least 1".into()));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt={} must be positive", self.dt)));
        }
        if !(self.substep_theta > 0.0) || !(self.theta_geo > 0.0) {
            return Err(Error::Config("substep_theta and theta_geo must be positive".into()));
        }
        if !(self.weight_floor <= 0.0) {
            return Err(Error::Config(format!("weight_floor={} must be <= 0", self.weight_floor)));
        }
        if !(self.roulette_level < 0.0) {
            return Err(Error::Config(format!("roulette_level={} must be negative", self.roulette_level)));
        }
        if !(self.r_min >= 0.0) {
            return Err(Error::Config(format!("r_min={} must be >= 0", self.r_min)));
        }
        if self.max_segments == 0 {
            return Err(Error::Config("max_segments must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub zero_weight_frac: f64,
    /// Paths that ran out of segment budget before resolving.
    pub exhausted: u64,
}

impl McEstimate {
    pub fn exact(value: f64, n: u64) -> Self {
        McEstimate {
            mean: value,
            stderr: 0.0,
            n,
            zero_weight_frac: if value == 0.0 { 1.0 } else { 0.0 },
            exhausted: 0,
        }
    }

    /// The estimate multiplied by a deterministic factor.
    pub fn scaled(self, c: f64) -> Self {
        McEstimate {
            mean: self.mean * c,
            stderr: self.stderr * c.abs(),
            ..self
        }
    }

    /// Too few nonzero weights to be informative; use the PDE solver instead.
    pub fn low_information(&self) -> bool {
        self.zero_weight_frac > 0.999
    }
}

/// Outcome of one simulated path.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PathOutcome {
    pub weight: f64,
    pub exhausted: bool,
}

/// Running moments of a set of weights.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
    zeros: u64,
    exhausted: u64,
}

impl Moments {
    fn push(&mut self, o: PathOutcome) {
        self.n += 1;
        let delta = o.weight - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (o.weight - self.mean);
        if o.weight == 0.0 {
            self.zeros += 1;
        }
        if o.exhausted {
            self.exhausted += 1;
        }
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * self.n as f64 * other.n as f64 / n as f64;
        Moments {
            n,
            mean,
            m2,
            zeros: self.zeros + other.zeros,
            exhausted: self.exhausted + other.exhausted,
        }
    }

    fn estimate(self) -> McEstimate {
        let var = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { 0.0 };
        McEstimate {
            mean: self.mean,
            stderr: (var.max(0.0) / self.n as f64).sqrt(),
            n: self.n,
            zero_weight_frac: self.zeros as f64 / self.n as f64,
            exhausted: self.exhausted,
        }
    }
}

/// Deterministic RNG for batch `batch` of a run seeded with `seed`.
pub fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    rng
}

/// Run `cfg.paths` independent paths and merge their weights in batch order.
pub(crate) fn run_paths<F>(cfg: &McConfig, path: F) -> McEstimate
where
    F: Fn(&mut ChaCha8Rng) -> PathOutcome + Sync,
{
    let n_batches = cfg.paths.div_ceil(BATCH);
    let one = |b: u64| {
        let mut rng = batch_rng(cfg.seed, b);
        let count = BATCH.min(cfg.paths - b * BATCH);
        let mut m = Moments::default();
        for _ in 0..count {
            m.push(path(&mut rng));
        }
        m
    };
    let per_batch: Vec<Moments> = match cfg.exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            (0..n_batches).into_par_iter().map(one).collect()
        }
        _ => (0..n_batches).map(one).collect(),
    };
    let est = per_batch
        .into_iter()
        .fold(Moments::default(), Moments::merge)
        .estimate();
    if est.exhausted > 0 {
        log::warn!("{} of {} paths exhausted the segment budget", est.exhausted, est.n);
    }
    est
}

/// Run `f` with at most `threads` worker threads for [`Exec::Parallel`] batches.
/// Without the `parallel` feature this just calls `f`.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Ok(f())
    }
}

/// A seed for a sub-experiment derived from a parent seed and an index.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn moments_merge_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 101.0).collect();
        let mut all = Moments::default();
        for &x in &xs {
            all.push(PathOutcome { weight: x, exhausted: false });
        }
        let mut a = Moments::default();
        let mut b = Moments::default();
        for &x in &xs[..300] {
            a.push(PathOutcome { weight: x, exhausted: false });
        }
        for &x in &xs[300..] {
            b.push(PathOutcome { weight: x, exhausted: false });
        }
        let m = a.merge(b).estimate();
        let s = all.estimate();
        assert!((m.mean - s.mean).abs() < 1e-14);
        assert!((m.stderr - s.stderr).abs() < 1e-14);
    }

    #[test]
    fn sequential_and_parallel_bit_identical() {
        let mut cfg = McConfig {
            paths: 5000,
            seed: 42,
            ..McConfig::default()
        };
        let path = |rng: &mut ChaCha8Rng| PathOutcome {
            weight: rng.random::<f64>(),
            exhausted: false,
        };
        let par = run_paths(&cfg, path);
        cfg.exec = Exec::Sequential;
        let seq = run_paths(&cfg, path);
        assert_eq!(par.mean.to_bits(), seq.mean.to_bits());
        assert_eq!(par.stderr.to_bits(), seq.stderr.to_bits());
        assert_eq!(par.n, 5000);
    }

    #[test]
    fn constant_weights_have_zero_stderr() {
        let cfg = McConfig {
            paths: 3000,
            ..McConfig::default()
        };
        let e = run_paths(&cfg, |_| PathOutcome { weight: 0.25, exhausted: false });
        assert_eq!(e.mean, 0.25);
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.zero_weight_frac, 0.0);
    }

    #[test]
    fn derived_seeds_differ() {
        let s: std::collections::HashSet<u64> = (0..100).map(|i| derive_seed(7, i)).collect();
        assert_eq!(s.len(), 100);
    }

    #[test]
    fn config_validation() {
        assert!(McConfig::default().validate().is_ok());
        assert!(McConfig { paths: 0, ..McConfig::default() }.validate().is_err());
        assert!(McConfig { dt: 0.0, ..McConfig::default() }.validate().is_err());
        assert!(McConfig { weight_floor: 1.0, ..McConfig::default() }.validate().is_err());
    }
}
