use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::arith::{is_power_of_two, next_prime, prev_prime};
use crate::error::{Error, Result};
use crate::ring::{RingParams, SamplerConfig};

/// Scheme parameters. `moduli` is the chain `q_0, q_1, …`; a ciphertext at
/// the top level lives modulo their product.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub degree: usize,
    pub moduli: Vec<BigInt>,
    pub delta: f64,
    /// Auxiliary key-switching modulus `P`.
    pub aux_big: BigInt,
    /// Auxiliary modulus `p` of the RGSW matrix format.
    pub aux_small: BigInt,
    pub sampler: SamplerConfig,
}

fn pow2(e: u32) -> BigInt {
    BigInt::one() << e
}

impl Params {
    /// `Q_level = q_0···q_level`.
    pub fn q_at(&self, level: usize) -> BigInt {
        self.moduli[..=level].iter().product()
    }

    pub fn top_level(&self) -> usize {
        self.moduli.len() - 1
    }

    /// Modulus of fresh ciphertexts.
    pub fn q(&self) -> BigInt {
        self.q_at(self.top_level())
    }

    /// Modulus after one rescale from the top level.
    pub fn q_low(&self) -> BigInt {
        self.q_at(self.top_level().saturating_sub(1))
    }

    pub fn ring(&self, modulus: BigInt) -> RingParams {
        RingParams::new(self.degree, modulus).expect("degree was validated")
    }

    pub fn log_delta(&self) -> f64 {
        self.delta.log2()
    }

    pub fn error_bound(&self) -> i64 {
        self.sampler.error_bound()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidParams(s));
        if !is_power_of_two(self.degree) {
            return bad(format!("degree {} is not a power of two", self.degree));
        }
        if self.moduli.is_empty() || self.moduli.iter().any(|m| *m < BigInt::from(2)) {
            return bad("modulus chain must be non-empty with entries at least 2".into());
        }
        if !(self.delta >= 1.0) {
            return bad(format!("delta {} must be at least 1", self.delta));
        }
        let q = self.q();
        if BigInt::from(self.delta as u64) > q {
            return bad("delta exceeds q".into());
        }
        if self.moduli.len() > 1 {
            let last = self.moduli.last().unwrap().to_f64().unwrap();
            if !(last / self.delta > 0.5 && last / self.delta < 2.0) {
                return bad(format!("last modulus {last} is not close to delta {}", self.delta));
            }
        }
        if q.gcd(&BigInt::from(self.degree)) != BigInt::one() {
            return bad("q must be coprime with N".into());
        }
        if self.aux_big < q {
            return bad("auxiliary modulus P must be at least q".into());
        }
        if &self.aux_small * BigInt::from(self.delta as u64) < q {
            return bad("RGSW auxiliary modulus must satisfy p·delta >= q".into());
        }
        if self.sampler.hamming == 0 || self.sampler.hamming > self.degree {
            return bad(format!("hamming weight {} not in 1..={}", self.sampler.hamming, self.degree));
        }
        if !(self.sampler.sigma >= 0.0) {
            return bad("sigma must be non-negative".into());
        }
        Ok(())
    }

    fn desk(degree: usize, hamming: usize, seed: u64) -> Self {
        Params {
            degree,
            moduli: vec![prev_prime(&pow2(30)).unwrap(), next_prime(&pow2(10))],
            delta: 1024.0,
            aux_big: prev_prime(&pow2(61)).unwrap(),
            aux_small: next_prime(&pow2(40)),
            sampler: SamplerConfig::new(hamming, 3.2, seed),
        }
    }

    /// `N = 16`, `q ≈ 2^40` as a 30-bit prime times a prime near `Δ = 2^10`.
    pub fn desk16() -> Self {
        Self::desk(16, 2, 1)
    }

    /// As [`Params::desk16`] with `N = 64`.
    pub fn desk64() -> Self {
        Self::desk(64, 8, 1)
    }

    /// `N = 2^12`, `q ≈ 2^54`, `Δ = 2^20`, `P ≈ 2^54`, `p ≈ 2^40`, `h = 128`.
    pub fn paperlike() -> Self {
        let moduli = vec![prev_prime(&pow2(34)).unwrap(), next_prime(&pow2(20))];
        let q: BigInt = moduli.iter().product();
        Params {
            degree: 4096,
            moduli,
            delta: (1u64 << 20) as f64,
            aux_big: next_prime(&q),
            aux_small: next_prime(&pow2(40)),
            sampler: SamplerConfig::new(128, 3.2, 1),
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk16" => Ok(Self::desk16()),
            "desk64" => Ok(Self::desk64()),
            "paperlike" => Ok(Self::paperlike()),
            _ => Err(Error::InvalidParams(format!("unknown preset {name:?}"))),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.sampler.seed = seed;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sampler.sigma = sigma;
        self
    }

    pub fn with_hamming(mut self, h: usize) -> Self {
        self.sampler.hamming = h;
        self
    }

    pub fn to_toml(&self) -> String {
        let f = ParamsFile {
            degree: self.degree,
            moduli: self.moduli.iter().map(|m| m.to_string()).collect(),
            delta: self.delta,
            aux_big: self.aux_big.to_string(),
            aux_small: self.aux_small.to_string(),
            hamming: self.sampler.hamming,
            sigma: self.sampler.sigma,
            seed: self.sampler.seed,
        };
        toml::to_string(&f).expect("params serialize")
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let f: ParamsFile = toml::from_str(s).map_err(|e| Error::Malformed(e.to_string()))?;
        let num = |s: &str| s.trim().parse::<BigInt>().map_err(|e| Error::Malformed(format!("{s:?}: {e}")));
        let p = Params {
            degree: f.degree,
            moduli: f.moduli.iter().map(|m| num(m)).collect::<Result<_>>()?,
            delta: f.delta,
            aux_big: num(&f.aux_big)?,
            aux_small: num(&f.aux_small)?,
            sampler: SamplerConfig::new(f.hamming, f.sigma, f.seed),
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Serialize, Deserialize)]
struct ParamsFile {
    degree: usize,
    moduli: Vec<String>,
    delta: f64,
    #[serde(rename = "aux_P")]
    aux_big: String,
    #[serde(rename = "aux_p")]
    aux_small: String,
    hamming: usize,
    sigma: f64,
    seed: u64,
}
