use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use num_bigint::BigInt;

use super::crt::{strategy3_mm, CrtBasis};
use super::naive::mod_ppmm_naive;
use super::strategy::{limb_base, strategy1_mm, strategy2_mm};
use super::ModMatrix;
use crate::error::{Error, Result};

/// Instrumentation shared by the backends and the algorithms driving them.
#[derive(Debug, Default)]
pub struct Counters {
    mod_calls: AtomicUsize,
    fp_calls: AtomicUsize,
    transposes: AtomicUsize,
    key_switches: AtomicUsize,
    ring_ops: AtomicUsize,
}

macro_rules! counter {
    ($get:ident, $add:ident, $field:ident) => {
        pub fn $get(&self) -> usize {
            self.$field.load(Ordering::Relaxed)
        }

        pub fn $add(&self, n: usize) {
            self.$field.fetch_add(n, Ordering::Relaxed);
        }
    };
}

impl Counters {
    counter!(mod_calls, add_mod, mod_calls);
    counter!(fp_calls, add_fp, fp_calls);
    counter!(transposes, add_transpose, transposes);
    counter!(key_switches, add_key_switch, key_switches);
    counter!(ring_ops, add_ring_ops, ring_ops);

    pub fn reset(&self) {
        for c in [&self.mod_calls, &self.fp_calls, &self.transposes, &self.key_switches, &self.ring_ops] {
            c.store(0, Ordering::Relaxed);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BackendKind {
    Naive,
    S1,
    S2,
    S3,
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(BackendKind::Naive),
            "s1" => Ok(BackendKind::S1),
            "s2" => Ok(BackendKind::S2),
            "s3" => Ok(BackendKind::S3),
            _ => Err(Error::InvalidParams(format!("unknown backend {s:?}"))),
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Naive => "naive",
            BackendKind::S1 => "s1",
            BackendKind::S2 => "s2",
            BackendKind::S3 => "s3",
        })
    }
}

/// Which half of a ciphertext a product contributes to. An error on the
/// `B`-part reaches the plaintext unchanged, an error on the `A`-part is
/// multiplied by the secret.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    A,
    B,
}

/// A Mod-PP-MM implementation plus its call counters.
#[derive(Debug)]
pub struct Backend {
    kind: BackendKind,
    s2_on_a: bool,
    crt: Option<CrtBasis>,
    crt_bits: u32,
    counters: Counters,
}

impl Backend {
    pub fn new(kind: BackendKind) -> Self {
        Backend { kind, s2_on_a: false, crt: None, crt_bits: 19, counters: Counters::default() }
    }

    /// Also truncate `A`-part products under [`BackendKind::S2`].
    pub fn with_s2_on_a(mut self, on: bool) -> Self {
        self.s2_on_a = on;
        self
    }

    pub fn with_crt(mut self, basis: CrtBasis) -> Self {
        self.crt = Some(basis);
        self
    }

    pub fn with_crt_bits(mut self, bits: u32) -> Self {
        self.crt_bits = bits;
        self
    }

    pub fn kind(&self) -> BackendKind {
        self.kind
    }

    pub fn s2_on_a(&self) -> bool {
        self.s2_on_a
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    /// True when the algorithms must move ciphertexts to the CRT modulus
    /// before calling [`Backend::mm`].
    pub fn switches_modulus(&self) -> bool {
        self.kind == BackendKind::S3
    }

    /// CRT basis used for products of inner dimension `d2` whose operands
    /// come from modulus `q`: the configured one, or the fewest primes below
    /// `2^crt_bits` (and below the limb base) whose product reaches `q`.
    /// Applied to its own product the automatic choice returns the same basis.
    pub fn crt_basis_for(&self, q: &BigInt, d2: usize) -> Result<CrtBasis> {
        if let Some(b) = &self.crt {
            return Ok(b.clone());
        }
        let cap_bits = self.crt_bits.min(63 - limb_base(d2).leading_zeros());
        let mut count = ((q.bits() as u32) / cap_bits).max(1) as usize;
        loop {
            let basis = CrtBasis::primes_below(self.crt_bits, count, d2)?;
            if basis.product() >= q {
                return Ok(basis);
            }
            count += 1;
        }
    }

    /// Strategy 3 on operands that were not switched to the CRT modulus: the
    /// product is computed over the integers through a basis wide enough for
    /// `d2·‖a‖·‖b‖`, then reduced.
    fn lifted_s3(&self, a: &ModMatrix, b: &ModMatrix) -> Result<ModMatrix> {
        let bound: BigInt = 2 * a.max_abs() * b.max_abs() * a.cols() + 1;
        let auto = Backend { crt: None, ..self.shallow() };
        let basis = auto.crt_basis_for(&bound, a.cols())?;
        let wide =
            strategy3_mm(&a.with_modulus(basis.product()), &b.with_modulus(basis.product()), &basis, &self.counters)?;
        Ok(wide.with_modulus(a.modulus()))
    }

    fn shallow(&self) -> Backend {
        Backend {
            kind: self.kind,
            s2_on_a: self.s2_on_a,
            crt: None,
            crt_bits: self.crt_bits,
            counters: Counters::default(),
        }
    }

    pub fn mm(&self, a: &ModMatrix, b: &ModMatrix, part: Part) -> Result<ModMatrix> {
        self.counters.add_mod(1);
        match self.kind {
            BackendKind::Naive => mod_ppmm_naive(a, b),
            BackendKind::S1 => strategy1_mm(a, b, &self.counters),
            BackendKind::S2 if part == Part::B || self.s2_on_a => strategy2_mm(a, b, &self.counters),
            BackendKind::S2 => strategy1_mm(a, b, &self.counters),
            BackendKind::S3 => {
                let basis = self.crt_basis_for(a.modulus(), a.cols())?;
                if basis.product() == a.modulus() {
                    strategy3_mm(a, b, &basis, &self.counters)
                } else {
                    self.lifted_s3(a, b)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in [BackendKind::Naive, BackendKind::S1, BackendKind::S2, BackendKind::S3] {
            assert_eq!(k.to_string().parse::<BackendKind>().unwrap(), k);
        }
        assert!("blas".parse::<BackendKind>().is_err());
    }

    #[test]
    fn auto_basis_covers_modulus() {
        let b = Backend::new(BackendKind::S3);
        let q = BigInt::from(1u64 << 40) * 1021;
        let basis = b.crt_basis_for(&q, 64).unwrap();
        assert!(basis.product() >= &q);
        assert!(basis.moduli().iter().all(|&p| p < 1 << 19));
        assert_eq!(b.crt_basis_for(basis.product(), 64).unwrap(), basis);
    }

    #[test]
    fn s3_lifts_foreign_moduli() {
        let b = Backend::new(BackendKind::S3);
        let mut s = crate::ring::Sampler::new(crate::ring::SamplerConfig::new(1, 0.0, 5));
        let q: BigInt = BigInt::from(1u64 << 50) + 27;
        let x = ModMatrix::from_fn(8, 8, q.clone(), |_, _| s.uniform_bigint(&q));
        let y = ModMatrix::from_fn(8, 8, q.clone(), |_, _| s.uniform_bigint(&q));
        assert_eq!(b.mm(&x, &y, Part::A).unwrap(), crate::modmm::mod_ppmm_naive(&x, &y).unwrap());
        assert_eq!(b.counters().mod_calls(), 1);
    }

    #[test]
    fn counts_calls() {
        let m = BigInt::from(97);
        let a = ModMatrix::identity(3, m);
        for kind in [BackendKind::Naive, BackendKind::S1, BackendKind::S2] {
            let be = Backend::new(kind);
            assert_eq!(be.mm(&a, &a, Part::A).unwrap(), a);
            be.mm(&a, &a, Part::B).unwrap();
            assert_eq!(be.counters().mod_calls(), 2);
        }
    }
}
