use num_bigint::{BigInt, RandBigInt};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use super::{RingElem, RingParams};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerConfig {
    pub hamming: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(hamming: usize, sigma: f64, seed: u64) -> Self {
        SamplerConfig { hamming, sigma, seed }
    }

    /// `⌈6σ⌉`, the cutoff of the error distribution.
    pub fn error_bound(&self) -> i64 {
        (6.0 * self.sigma).ceil() as i64
    }
}

/// Deterministic source of ring randomness seeded from a [`SamplerConfig`].
#[derive(Clone, Debug)]
pub struct Sampler {
    cfg: SamplerConfig,
    rng: ChaCha20Rng,
}

impl Sampler {
    pub fn new(cfg: SamplerConfig) -> Self {
        Sampler { cfg, rng: ChaCha20Rng::seed_from_u64(cfg.seed) }
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }

    /// Independent child sampler, so that callers can fan work out to threads
    /// while keeping results reproducible.
    pub fn fork(&mut self) -> Sampler {
        let seed = self.rng.gen();
        Sampler { cfg: SamplerConfig { seed, ..self.cfg }, rng: ChaCha20Rng::seed_from_u64(seed) }
    }

    pub fn uniform_bigint(&mut self, m: &BigInt) -> BigInt {
        self.rng.gen_bigint_range(&BigInt::from(0), m)
    }

    pub fn uniform(&mut self, params: &RingParams) -> RingElem {
        let m = params.modulus().clone();
        let coeffs = (0..params.degree()).map(|_| self.uniform_bigint(&m)).collect();
        RingElem::new(params, coeffs)
    }

    /// Exactly `hamming` entries in `{-1, 1}`, the rest zero.
    pub fn ternary_coeffs(&mut self, n: usize) -> Result<Vec<i64>> {
        let h = self.cfg.hamming;
        if h == 0 || h > n {
            return Err(Error::InvalidParams(format!("hamming weight {h} not in 1..={n}")));
        }
        let mut out = vec![0i64; n];
        for i in sample(&mut self.rng, n, h) {
            out[i] = if self.rng.gen::<bool>() { 1 } else { -1 };
        }
        Ok(out)
    }

    pub fn ternary(&mut self, params: &RingParams) -> Result<RingElem> {
        let c = self.ternary_coeffs(params.degree())?;
        Ok(RingElem::from_i64(params, &c))
    }

    /// Rounded Gaussian, resampled outside `[-⌈6σ⌉, ⌈6σ⌉]`.
    pub fn error_coeffs(&mut self, n: usize) -> Vec<i64> {
        let sigma = self.cfg.sigma;
        if sigma <= 0.0 {
            return vec![0; n];
        }
        let normal = Normal::new(0.0, sigma).expect("finite sigma");
        let bound = self.cfg.error_bound();
        (0..n)
            .map(|_| loop {
                let e = (normal.sample(&mut self.rng) + 0.5).floor() as i64;
                if e.abs() <= bound {
                    break e;
                }
            })
            .collect()
    }

    pub fn error(&mut self, params: &RingParams) -> RingElem {
        let c = self.error_coeffs(params.degree());
        RingElem::from_i64(params, &c)
    }
}

pub fn sample_uniform(cfg: &SamplerConfig, params: &RingParams) -> RingElem {
    Sampler::new(*cfg).uniform(params)
}

pub fn sample_ternary_sparse(cfg: &SamplerConfig, params: &RingParams) -> Result<RingElem> {
    Sampler::new(*cfg).ternary(params)
}

pub fn sample_error(cfg: &SamplerConfig, params: &RingParams) -> RingElem {
    Sampler::new(*cfg).error(params)
}
