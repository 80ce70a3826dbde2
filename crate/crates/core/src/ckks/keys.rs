use std::collections::BTreeMap;

use num_bigint::BigInt;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ring::{RingElem, RingParams, Sampler};

/// Secret polynomial with small integer coefficients. Fresh keys are sparse
/// ternary; products and automorphic images of keys reuse the same type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecretKey {
    coeffs: Vec<i64>,
}

impl SecretKey {
    pub fn generate(degree: usize, sampler: &mut Sampler) -> Result<Self> {
        Ok(SecretKey { coeffs: sampler.ternary_coeffs(degree)? })
    }

    pub fn from_coeffs(coeffs: Vec<i64>) -> Self {
        SecretKey { coeffs }
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn hamming(&self) -> usize {
        self.coeffs.iter().filter(|&&c| c != 0).count()
    }

    /// `‖sk‖₁`.
    pub fn l1(&self) -> i64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    pub fn as_ring(&self, params: &RingParams) -> RingElem {
        RingElem::from_i64(params, &self.coeffs)
    }

    /// Negacyclic product of two keys, computed over the integers.
    pub fn product(&self, o: &Self) -> Self {
        let n = self.degree();
        assert_eq!(n, o.degree(), "key degree mismatch");
        let mut out = vec![0i64; n];
        for (i, &x) in self.coeffs.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in o.coeffs.iter().enumerate() {
                if i + j < n {
                    out[i + j] += x * y;
                } else {
                    out[i + j - n] -= x * y;
                }
            }
        }
        SecretKey { coeffs: out }
    }

    /// `sk(X^ell)`.
    pub fn automorphism(&self, ell: usize) -> Self {
        let n = self.degree();
        let ell = ell % (2 * n);
        assert!(ell % 2 == 1, "automorphism index must be odd");
        let mut out = vec![0i64; n];
        for (i, &c) in self.coeffs.iter().enumerate() {
            let e = ell * i % (2 * n);
            if e < n {
                out[e] = c;
            } else {
                out[e - n] = -c;
            }
        }
        SecretKey { coeffs: out }
    }

    /// `sk(X^-1)`.
    pub fn conjugate(&self) -> Self {
        self.automorphism(2 * self.degree() - 1)
    }

    /// `sk(X^k)` in degree `k·N`.
    pub fn inflate(&self, k: usize) -> Self {
        let mut out = vec![0i64; k * self.degree()];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[i * k] = c;
        }
        SecretKey { coeffs: out }
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h = Sha256::new();
        h.update(b"SK");
        for c in &self.coeffs {
            h.update(c.to_le_bytes());
        }
        u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
    }
}

/// `(a, -a·to + e + P·from) mod P·q`, switching ciphertexts modulo `q`
/// from key `from` to key `to`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwitchingKey {
    pub a: RingElem,
    pub b: RingElem,
    aux: BigInt,
    q: BigInt,
    pub source: u64,
    pub target: u64,
}

impl SwitchingKey {
    pub fn from_parts(a: RingElem, b: RingElem, aux: BigInt, q: BigInt, source: u64, target: u64) -> Result<Self> {
        if *a.modulus() != &aux * &q || a.params() != b.params() {
            return Err(Error::ModulusMismatch("switching key parts must live modulo P·q".into()));
        }
        Ok(SwitchingKey { a, b, aux, q, source, target })
    }

    /// The auxiliary modulus `P`.
    pub fn aux(&self) -> &BigInt {
        &self.aux
    }

    /// Modulus of the ciphertexts this key switches.
    pub fn q(&self) -> &BigInt {
        &self.q
    }

    pub fn modulus(&self) -> &BigInt {
        self.a.modulus()
    }

    /// `a·to + b - P·from`, which is the key error when the keys are right.
    pub fn residual(&self, from: &SecretKey, to: &SecretKey) -> RingElem {
        let p = self.a.params();
        self.a.mul_small(to.coeffs()).add(&self.b).sub(&from.as_ring(p).scalar_mul(&self.aux))
    }
}

pub fn swk_gen(from: &SecretKey, to: &SecretKey, aux: &BigInt, q: &BigInt, sampler: &mut Sampler) -> SwitchingKey {
    let params = RingParams::new(from.degree(), aux * q).expect("key degree is a power of two");
    swk_gen_elem(&from.as_ring(&params), from.fingerprint(), to, aux, q, sampler)
}

/// [`swk_gen`] from an arbitrary ring element, read through its centered
/// lift. `source` is recorded as the key fingerprint of `from`.
pub fn swk_gen_elem(
    from: &RingElem,
    source: u64,
    to: &SecretKey,
    aux: &BigInt,
    q: &BigInt,
    sampler: &mut Sampler,
) -> SwitchingKey {
    let params = RingParams::new(from.degree(), aux * q).expect("key degree is a power of two");
    let a = sampler.uniform(&params);
    let e = sampler.error(&params);
    let b = a.mul_small(to.coeffs()).neg().add(&e).add(&from.with_modulus(&params).scalar_mul(aux));
    SwitchingKey { a, b, aux: aux.clone(), q: q.clone(), source, target: to.fingerprint() }
}

/// Automorphism keys `sk(X^ell) → sk`, indexed by `ell mod 2N`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GaloisKeys {
    keys: BTreeMap<usize, SwitchingKey>,
}

impl GaloisKeys {
    pub fn generate(sk: &SecretKey, exponents: &[usize], aux: &BigInt, q: &BigInt, sampler: &mut Sampler) -> Self {
        let n2 = 2 * sk.degree();
        let keys = exponents
            .iter()
            .map(|&l| {
                let l = l % n2;
                (l, swk_gen(&sk.automorphism(l), sk, aux, q, sampler))
            })
            .collect();
        GaloisKeys { keys }
    }

    pub fn insert(&mut self, ell: usize, key: SwitchingKey) {
        self.keys.insert(ell, key);
    }

    pub fn get(&self, ell: usize) -> Option<&SwitchingKey> {
        self.keys.get(&ell)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&usize, &SwitchingKey)> {
        self.keys.iter()
    }
}
