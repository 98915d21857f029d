//! Path segments with dyadic Brownian-bridge refinement.
//!
//! A Brownian motion with generator `Δ` has increments of variance `2Δt` per
//! coordinate. Given the two ends of a segment of length `Δt`, the midpoint is
//! Gaussian around the chord midpoint with standard deviation `√(Δt/2)`, so
//! segments can be split exactly after the endpoints are drawn.
//!
//! The running integral of `V` lives in [`PathSim`] so that Russian roulette
//! can stop a path as soon as its weight becomes negligible, even in the
//! middle of a deeply refined segment.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::mc::{McConfig, PathOutcome};
use crate::potentials::Potential;

pub(crate) const MAX_DIM: usize = 16;

pub(crate) type Point = [f64; MAX_DIM];

const ROULETTE_SURVIVAL: f64 = 0.1;

/// How a segment ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Seg {
    Alive,
    /// Path hit the cutoff, crossed the origin in d=1, lost the roulette or
    /// fell below the weight floor.
    Killed,
    /// Path left the exit ball during the segment.
    Exited,
}

/// Shared per-estimator state for simulating one path at a time.
pub(crate) struct PathSim<'a> {
    pub v: &'a Potential,
    pub cfg: &'a McConfig,
    pub d: usize,
    singular: bool,
    zero: bool,
    /// Exit radius for exit-time estimators.
    pub exit_radius: Option<f64>,
    segments: u64,
    pub exhausted: bool,
    /// `∫V` accumulated so far.
    total: f64,
    /// Log of the roulette compensation factor.
    boost: f64,
}

impl<'a> PathSim<'a> {
    pub fn new(v: &'a Potential, cfg: &'a McConfig, exit_radius: Option<f64>) -> Self {
        PathSim {
            v,
            cfg,
            d: v.params.d,
            singular: v.singular_at_origin(),
            zero: v.is_zero(),
            exit_radius,
            segments: 0,
            exhausted: false,
            total: 0.0,
            boost: 0.0,
        }
    }

    /// Reset per-path state.
    pub fn start(&mut self) {
        self.segments = 0;
        self.exhausted = false;
        self.total = 0.0;
        self.boost = 0.0;
    }

    pub fn norm(&self, x: &Point) -> f64 {
        x[..self.d].iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn potential(&self, r: f64) -> f64 {
        if self.zero {
            0.0
        } else {
            self.v.eval(r)
        }
    }

    /// Whether a sample at radius `r` is inside the hard cutoff.
    pub fn cut(&self, r: f64) -> bool {
        self.singular && r < self.cfg.r_min
    }

    pub fn gaussian_step(&self, rng: &mut ChaCha8Rng, from: &Point, sd: f64) -> Point {
        let mut out = *from;
        for c in out[..self.d].iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *c += sd * z;
        }
        out
    }

    /// Weight of a path that finished alive.
    pub fn finish(&self) -> PathOutcome {
        let log_w = self.boost - self.total;
        PathOutcome {
            weight: if log_w < self.cfg.weight_floor { 0.0 } else { log_w.exp() },
            exhausted: self.exhausted,
        }
    }

    pub fn killed(&self) -> PathOutcome {
        PathOutcome {
            weight: 0.0,
            exhausted: self.exhausted,
        }
    }

    /// Add `∫V` over a leaf and play the roulette. Returns false if the path dies.
    fn accumulate(&mut self, rng: &mut ChaCha8Rng, integral: f64) -> bool {
        self.total += integral;
        let level = self.cfg.roulette_level;
        let active = level > self.cfg.weight_floor;
        while active && self.boost - self.total < level {
            if rng.random::<f64>() >= ROULETTE_SURVIVAL {
                return false;
            }
            self.boost -= ROULETTE_SURVIVAL.ln();
        }
        self.boost - self.total >= self.cfg.weight_floor
    }

    fn needs_refinement(&self, dt: f64, ra: f64, rb: f64, va: f64, vb: f64, outside: bool) -> bool {
        if let (Some(big_r), false) = (self.exit_radius, outside) {
            // Tangent-plane crossing is only accurate when the step is small
            // compared with the squared distance to the sphere.
            let near = big_r - ra.max(rb);
            if dt > near * near / 16.0 {
                return true;
            }
        }
        if self.zero {
            return false;
        }
        if dt * va.max(vb) > self.cfg.substep_theta {
            return true;
        }
        self.singular && dt > self.cfg.theta_geo * ra.min(rb).powi(2)
    }

    /// Integrate `V` over the segment `a → b` of duration `dt`, refining by bridge
    /// midpoints while the killing or the geometry is unresolved.
    /// The caller has already checked `a` against the cutoff.
    #[allow(clippy::too_many_arguments)]
    pub fn segment(
        &mut self,
        rng: &mut ChaCha8Rng,
        a: &Point,
        ra: f64,
        va: f64,
        b: &Point,
        rb: f64,
        vb: f64,
        dt: f64,
    ) -> Seg {
        if self.cut(rb) {
            return Seg::Killed;
        }
        if self.singular && self.d == 1 && a[0] * b[0] <= 0.0 {
            return Seg::Killed;
        }
        let trap = 0.5 * dt * (va + vb);
        // A segment ending outside the exit ball still needs the killing
        // resolved up to the crossing, so it is refined like any other.
        let outside = self.exit_radius.is_some_and(|big_r| rb >= big_r);
        self.segments += 1;
        if self.segments > self.cfg.max_segments {
            self.exhausted = true;
        } else if self.needs_refinement(dt, ra, rb, va, vb, outside) {
            let mut mid = [0.0; MAX_DIM];
            for i in 0..self.d {
                mid[i] = 0.5 * (a[i] + b[i]);
            }
            let mid = self.gaussian_step(rng, &mid, (0.5 * dt).sqrt());
            let rm = self.norm(&mid);
            let vm = self.potential(rm);
            return match self.segment(rng, a, ra, va, &mid, rm, vm, 0.5 * dt) {
                Seg::Alive => self.segment(rng, &mid, rm, vm, b, rb, vb, 0.5 * dt),
                other => other,
            };
        }
        if outside {
            return if self.accumulate(rng, trap) { Seg::Exited } else { Seg::Killed };
        }
        // Unrefined segment: account for excursions between the two samples.
        if let Some(big_r) = self.exit_radius {
            let p = (-(big_r - ra) * (big_r - rb) / dt).exp();
            if rng.random::<f64>() < p {
                return if self.accumulate(rng, trap) { Seg::Exited } else { Seg::Killed };
            }
        }
        if self.singular && self.d == 1 {
            let p = (-ra * rb / dt).exp();
            if p > 0.0 && rng.random::<f64>() < p {
                return Seg::Killed;
            }
        }
        if self.accumulate(rng, trap) {
            Seg::Alive
        } else {
            Seg::Killed
        }
    }
}
