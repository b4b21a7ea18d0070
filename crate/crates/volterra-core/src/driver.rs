//! Reproducible Brownian motion on nested uniform grids.
//!
//! Increments come from a counter-based generator: every normal draw is a
//! fixed bit-mixing of `(seed, domain, level, index)` pushed through the
//! inverse normal CDF, so a path is a pure function of its key — identical
//! across machines, thread schedules and replays. Refining a grid fills
//! dyadic midpoints by Brownian bridge with fresh counters, which leaves
//! the coarse path untouched: summing adjacent fine increments reproduces
//! the parent increments bit for bit.
//!
//! Increments are snapped to the lattice `2^{-40} Z`. Lattice points sum
//! exactly in double precision at these magnitudes, which is what makes
//! the resummation identity bitwise instead of merely approximate; the
//! `2^{-40}` perturbation is ten orders below the increment noise.

use crate::error::{Error, Result};
use crate::math;
use alloc::vec::Vec;

const DOMAIN_LEVEL0: u64 = 0x42_4153_45;
const DOMAIN_BRIDGE: u64 = 0x42_5249_44;

const K0: u64 = 0x9e37_79b9_7f4a_7c15;
const K1: u64 = 0xbf58_476d_1ce4_e5b9;
const K2: u64 = 0x94d0_49bb_1331_11eb;

#[inline]
fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(K1);
    x ^= x >> 27;
    x = x.wrapping_mul(K2);
    x ^= x >> 31;
    x
}

/// Keyed counter hash: uniform 64-bit output per `(seed, domain, a, b)`.
#[inline]
fn counter_hash(seed: u64, domain: u64, a: u64, b: u64) -> u64 {
    let mut h = mix64(seed ^ K0.wrapping_mul(domain.wrapping_add(1)));
    h = mix64(h ^ K1.wrapping_mul(a.wrapping_add(1)));
    mix64(h ^ K2.wrapping_mul(b.wrapping_add(1)))
}

/// Map 64 bits to the open interval (0, 1), symmetric around 1/2:
/// `(k + 1/2) / 2^52` over the top 52 bits.
#[inline]
fn uniform01(h: u64) -> f64 {
    ((h >> 12) as f64 + 0.5) * (1.0 / 4_503_599_627_370_496.0)
}

/// Snap to the lattice `2^{-40} Z`.
#[inline]
fn to_lattice(x: f64) -> f64 {
    const SCALE: f64 = 1_099_511_627_776.0; // 2^40
    libm::round(x * SCALE) * (1.0 / SCALE)
}

/// One standard normal draw for a counter key.
#[inline]
pub fn normal_draw(seed: u64, domain: u64, a: u64, b: u64) -> f64 {
    math::inv_norm_cdf(uniform01(counter_hash(seed, domain, a, b)))
}

/// Brownian increments on the uniform grid with `base_steps * 2^level`
/// cells over `[0, T]`. Immutable after construction and cheap to share.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianGrid {
    seed: u64,
    level: u32,
    base_steps: usize,
    horizon: f64,
    dt: f64,
    increments: Vec<f64>,
}

impl BrownianGrid {
    /// Deterministic path for `(seed, level)`: level 0 is drawn directly,
    /// higher levels refine it midpoint by midpoint.
    pub fn sample_path(seed: u64, level: u32, base_steps: usize, horizon: f64) -> Result<Self> {
        if base_steps < 2 {
            return Err(Error::Domain("base_steps must be at least 2"));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Domain("horizon must be positive"));
        }
        let n0 = base_steps;
        if (n0 as u64) << level > 1 << 26 {
            return Err(Error::Domain("grid would exceed 2^26 cells"));
        }

        let dt0 = horizon / n0 as f64;
        let scale0 = math::sqrt(dt0);
        let mut increments: Vec<f64> = (0..n0)
            .map(|i| to_lattice(scale0 * normal_draw(seed, DOMAIN_LEVEL0, 0, i as u64)))
            .collect();

        let mut width = dt0;
        for lvl in 1..=level {
            let mut fine = Vec::with_capacity(increments.len() * 2);
            let noise = 0.5 * math::sqrt(width);
            for (i, &parent) in increments.iter().enumerate() {
                let z = normal_draw(seed, DOMAIN_BRIDGE, lvl as u64, i as u64);
                // Bridge midpoint: left half ~ N(parent/2, width/4). Half,
                // noise and parent are lattice points, so left + right
                // reassembles the parent without rounding.
                let left = to_lattice(0.5 * parent) + to_lattice(noise * z);
                let right = parent - left;
                fine.push(left);
                fine.push(right);
            }
            increments = fine;
            width *= 0.5;
        }

        Ok(BrownianGrid {
            seed,
            level,
            base_steps,
            horizon,
            dt: width,
            increments,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn base_steps(&self) -> usize {
        self.base_steps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.increments.len()
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Grid times `t_0 = 0, ..., t_n = T`.
    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps()).map(|k| k as f64 * self.dt).collect()
    }

    /// Path values `B_{t_k}` with `B_0 = 0`.
    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_steps() + 1);
        let mut acc = 0.0;
        out.push(acc);
        for &d in &self.increments {
            acc += d;
            out.push(acc);
        }
        out
    }

    pub fn endpoint(&self) -> f64 {
        self.increments.iter().sum()
    }

    /// Sum adjacent increments down to `to_level`, preserving the seed
    /// lineage. The result equals `sample_path(seed, to_level, ..)`.
    pub fn coarsen(&self, to_level: u32) -> Result<Self> {
        if to_level > self.level {
            return Err(Error::Domain("cannot coarsen to a finer level"));
        }
        let mut increments = self.increments.clone();
        let mut dt = self.dt;
        for _ in to_level..self.level {
            increments = increments.chunks_exact(2).map(|c| c[0] + c[1]).collect();
            dt *= 2.0;
        }
        Ok(BrownianGrid {
            seed: self.seed,
            level: to_level,
            base_steps: self.base_steps,
            horizon: self.horizon,
            dt,
            increments,
        })
    }
}
