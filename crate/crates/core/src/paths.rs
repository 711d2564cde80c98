//! Seeded scalar Wiener increments for the time stepping, plus the path
//! coarsening used by coupled time-refinement studies.
//!
//! Generator identity (fixed so tables reproduce bit-for-bit within one
//! build): draw `k` of a path mixes the path seed with counters `2k` and
//! `2k+1` through the splitmix64 finalizer, maps both to uniforms in
//! `(0, 1]` with 53-bit resolution, and applies the Box-Muller cosine
//! branch. Increment `k` is `sqrt(tau)` times that standard normal.
//! Coarsened views are always recomputed from the originally sampled
//! increments, so coarsening factors compose exactly.

use std::sync::Arc;

use crate::error::{Error, Result};

/// splitmix64 finalizer; the mixing core of all seeding in this crate.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e3779b97f4a7c15;

/// Per-sample seed `seed_i = mix(master, i)`; order-independent so samples
/// can run in parallel.
pub fn derive_sample_seed(master_seed: u64, sample_index: u64) -> u64 {
    mix64(master_seed ^ mix64(sample_index.wrapping_add(1).wrapping_mul(GOLDEN)))
}

fn uniform_open(seed: u64, counter: u64) -> f64 {
    let bits = mix64(seed.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN)));
    // 53-bit mantissa shifted into (0, 1]
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal draw `k` of the stream keyed by `seed`.
pub fn standard_normal(seed: u64, k: u64) -> f64 {
    let u1 = uniform_open(seed, 2 * k);
    let u2 = uniform_open(seed, 2 * k + 1);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// A sampled Wiener increment sequence at a fixed step size, coarsenable
/// by block summation.
#[derive(Debug, Clone)]
pub struct WienerPath {
    seed: u64,
    base_tau: f64,
    base: Arc<Vec<f64>>,
    /// Aggregation factor relative to the sampled resolution.
    factor: usize,
    /// Cached coarse view; `None` means the base increments themselves.
    view: Option<Vec<f64>>,
}

impl WienerPath {
    /// Sample `n_steps` independent `N(0, tau)` increments.
    pub fn sample(n_steps: usize, tau: f64, seed: u64) -> Result<WienerPath> {
        if n_steps == 0 {
            return Err(Error::InvalidSpec("path needs at least one step".into()));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "step size must be positive and finite, got {tau}"
            )));
        }
        let scale = tau.sqrt();
        let increments: Vec<f64> = (0..n_steps as u64)
            .map(|k| scale * standard_normal(seed, k))
            .collect();
        Ok(WienerPath {
            seed,
            base_tau: tau,
            base: Arc::new(increments),
            factor: 1,
            view: None,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Current (possibly coarsened) step size.
    pub fn tau(&self) -> f64 {
        self.base_tau * self.factor as f64
    }

    /// Step size at which the path was sampled.
    pub fn base_tau(&self) -> f64 {
        self.base_tau
    }

    /// Aggregation factor relative to the sampled increments.
    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn n_steps(&self) -> usize {
        self.increments().len()
    }

    pub fn increments(&self) -> &[f64] {
        match &self.view {
            Some(v) => v,
            None => &self.base,
        }
    }

    /// Sum of all sampled increments; invariant under coarsening because
    /// it is always evaluated on the base sequence.
    pub fn total_displacement(&self) -> f64 {
        self.base.iter().sum()
    }

    /// Coarsen by summing blocks of `factor` consecutive increments. The
    /// blocks are recomputed from the sampled increments, so
    /// `p.coarsen(a)?.coarsen(b)` equals `p.coarsen(a * b)` exactly.
    pub fn coarsen(&self, factor: usize) -> Result<WienerPath> {
        if factor == 0 {
            return Err(Error::InvalidSpec("coarsening factor must be positive".into()));
        }
        if !self.n_steps().is_multiple_of(factor) {
            return Err(Error::InvalidSpec(format!(
                "coarsening factor {factor} does not divide {} steps",
                self.n_steps()
            )));
        }
        let total = self.factor * factor;
        let n_coarse = self.base.len() / total;
        let view: Vec<f64> = (0..n_coarse)
            .map(|i| self.base[i * total..(i + 1) * total].iter().sum())
            .collect();
        Ok(WienerPath {
            seed: self.seed,
            base_tau: self.base_tau,
            base: Arc::clone(&self.base),
            factor: total,
            view: Some(view),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_reproduces_bitwise() {
        let a = WienerPath::sample(1000, 1e-4, 42).unwrap();
        let b = WienerPath::sample(1000, 1e-4, 42).unwrap();
        assert_eq!(a.increments(), b.increments());
        let c = WienerPath::sample(1000, 1e-4, 43).unwrap();
        assert_ne!(a.increments(), c.increments());
    }

    #[test]
    fn moments_match_gaussian_statistics() {
        let n = 100_000;
        let tau = 1e-4;
        let path = WienerPath::sample(n, tau, 7).unwrap();
        let mean: f64 = path.increments().iter().sum::<f64>() / n as f64;
        // CLT bound: 4 standard errors
        assert!(mean.abs() < 4.0 * (tau / n as f64).sqrt(), "mean {mean}");
        let var: f64 = path.increments().iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
            / (n - 1) as f64;
        assert!((var - tau).abs() < 0.05 * tau, "variance {var} vs tau {tau}");
    }

    #[test]
    fn coarsen_sums_blocks() {
        let path = WienerPath::sample(4, 0.5, 1).unwrap();
        let inc = path.increments().to_vec();
        let c = path.coarsen(2).unwrap();
        assert_eq!(c.n_steps(), 2);
        assert_eq!(c.tau(), 1.0);
        assert_eq!(c.increments()[0], inc[0] + inc[1]);
        assert_eq!(c.increments()[1], inc[2] + inc[3]);
        // factor 1 is the identity
        let id = path.coarsen(1).unwrap();
        assert_eq!(id.increments(), path.increments());
    }

    #[test]
    fn coarsen_composes_exactly() {
        let path = WienerPath::sample(360, 2e-3, 99).unwrap();
        for (a, b) in [(2, 3), (3, 2), (4, 5), (6, 6)] {
            let nested = path.coarsen(a).unwrap().coarsen(b).unwrap();
            let direct = path.coarsen(a * b).unwrap();
            assert_eq!(nested.increments(), direct.increments());
            assert_eq!(nested.tau(), direct.tau());
        }
    }

    #[test]
    fn displacement_preserved_under_any_factor() {
        let path = WienerPath::sample(120, 1e-2, 5).unwrap();
        let d0 = path.total_displacement();
        for f in [2, 3, 4, 5, 6, 10, 120] {
            let c = path.coarsen(f).unwrap();
            assert_eq!(c.total_displacement(), d0);
        }
    }

    #[test]
    fn coarsen_rejects_non_divisible_factor() {
        let path = WienerPath::sample(10, 1.0, 0).unwrap();
        assert!(path.coarsen(3).is_err());
        assert!(path.coarsen(0).is_err());
    }

    #[test]
    fn invalid_sampling_parameters_rejected() {
        assert!(WienerPath::sample(0, 1.0, 0).is_err());
        assert!(WienerPath::sample(10, 0.0, 0).is_err());
        assert!(WienerPath::sample(10, -1.0, 0).is_err());
    }

    #[test]
    fn distinct_sample_seeds_are_uncorrelated() {
        // Pooled lag-0 cross-correlation across 1000 path pairs.
        let master = 0xc0ffee;
        let n = 32;
        let mut sum_xy = 0.0;
        let mut sum_xx = 0.0;
        let mut sum_yy = 0.0;
        for i in 0..1000u64 {
            let pa = WienerPath::sample(n, 1.0, derive_sample_seed(master, 2 * i)).unwrap();
            let pb = WienerPath::sample(n, 1.0, derive_sample_seed(master, 2 * i + 1)).unwrap();
            for (x, y) in pa.increments().iter().zip(pb.increments()) {
                sum_xy += x * y;
                sum_xx += x * x;
                sum_yy += y * y;
            }
        }
        let corr = sum_xy / (sum_xx.sqrt() * sum_yy.sqrt());
        assert!(corr.abs() < 0.1, "correlation {corr}");
    }
}
