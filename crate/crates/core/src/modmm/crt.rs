//! Residue products modulo small primes and CRT recombination.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use super::fp::fp_exact_mm;
use super::naive::check_operands;
use super::strategy::limb_base;
use super::{Counters, IntMatrix, ModMatrix};
use crate::arith::{center, center_i64, is_prime, mod_inverse, prev_prime};
use crate::error::{Error, Result};

/// Pairwise coprime moduli with the recombination constants
/// `c_i = ((Q'/p_i)^-1 mod p_i)·(Q'/p_i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrtBasis {
    moduli: Vec<u64>,
    product: BigInt,
    coeffs: Vec<BigInt>,
}

impl CrtBasis {
    pub fn new(moduli: Vec<u64>) -> Result<Self> {
        if moduli.is_empty() {
            return Err(Error::InvalidParams("empty CRT basis".into()));
        }
        for (i, &a) in moduli.iter().enumerate() {
            if a < 2 {
                return Err(Error::InvalidParams(format!("CRT modulus {a} is below 2")));
            }
            for &b in &moduli[i + 1..] {
                if a.gcd(&b) != 1 {
                    return Err(Error::NotInvertible(format!("CRT moduli {a} and {b} are not coprime")));
                }
            }
        }
        let product: BigInt = moduli.iter().map(|&p| BigInt::from(p)).product();
        let coeffs = moduli
            .iter()
            .map(|&p| {
                let p = BigInt::from(p);
                let cof = &product / &p;
                mod_inverse(&cof, &p).unwrap() * cof
            })
            .collect();
        Ok(CrtBasis { moduli, product, coeffs })
    }

    /// The `count` largest primes below `min(2^bits, K)`, so each residue
    /// product at inner dimension `d2` is exact.
    pub fn primes_below(bits: u32, count: usize, d2: usize) -> Result<Self> {
        let cap = (1u64 << bits).min(limb_base(d2));
        let mut out = Vec::with_capacity(count);
        let mut c = BigInt::from(cap - 1);
        while out.len() < count {
            match prev_prime(&c) {
                Some(p) if p > BigInt::from(2) => {
                    out.push(p.to_u64().unwrap());
                    c = p - 1;
                }
                _ => return Err(Error::InvalidParams(format!("not enough primes below {cap}"))),
            }
        }
        debug_assert!(out.iter().all(|&p| is_prime(&BigInt::from(p))));
        Self::new(out)
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn product(&self) -> &BigInt {
        &self.product
    }

    pub fn len(&self) -> usize {
        self.moduli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moduli.is_empty()
    }

    pub fn residues(&self, m: &ModMatrix) -> Vec<IntMatrix> {
        self.moduli
            .iter()
            .map(|&p| {
                let pb = BigInt::from(p);
                let data = m.data().iter().map(|x| center(x, &pb).to_i64().unwrap()).collect();
                IntMatrix::new(m.rows(), m.cols(), data)
            })
            .collect()
    }

    /// Centered representative modulo `Q'` of one residue tuple.
    pub fn recombine(&self, residues: &[i64]) -> BigInt {
        let mut acc = BigInt::from(0);
        for (r, c) in residues.iter().zip(&self.coeffs) {
            acc += c * *r;
        }
        center(&acc, &self.product)
    }
}

pub fn crt_recombine(residues: &[IntMatrix], basis: &CrtBasis) -> Result<ModMatrix> {
    if residues.len() != basis.len() {
        return Err(Error::Dimension(format!("{} residue matrices for a basis of {}", residues.len(), basis.len())));
    }
    let (rows, cols) = (residues[0].rows, residues[0].cols);
    if residues.iter().any(|r| r.rows != rows || r.cols != cols) {
        return Err(Error::Dimension("residue matrices differ in shape".into()));
    }
    let data = (0..rows * cols)
        .into_par_iter()
        .map(|t| {
            let tuple: Vec<i64> = residues.iter().map(|r| r.data[t]).collect();
            basis.recombine(&tuple)
        })
        .collect();
    Ok(ModMatrix::from_centered(rows, cols, basis.product.clone(), data))
}

/// Exact product modulo `Q' = Π p_i`: one exact double-precision product per
/// residue followed by CRT. The operands must already live modulo `Q'`.
pub fn strategy3_mm(a: &ModMatrix, b: &ModMatrix, basis: &CrtBasis, counters: &Counters) -> Result<ModMatrix> {
    check_operands(a, b)?;
    if a.modulus() != basis.product() {
        return Err(Error::ModulusMismatch(format!(
            "operands are modulo {} but the CRT basis spans {}",
            a.modulus(),
            basis.product()
        )));
    }
    let k = a.cols();
    if let Some(&p) =
        basis.moduli.iter().find(|&&p| p.div_ceil(2) as u128 * p.div_ceil(2) as u128 * k as u128 >= 1u128 << 53)
    {
        return Err(Error::FpBound(format!("CRT modulus {p} too large for inner dimension {k}")));
    }
    let ra = basis.residues(a);
    let rb = basis.residues(b);
    let mut prods = Vec::with_capacity(basis.len());
    for ((x, y), &p) in ra.iter().zip(&rb).zip(&basis.moduli) {
        let mut z = fp_exact_mm(x, y)?;
        counters.add_fp(1);
        for v in z.data.iter_mut() {
            *v = center_i64(*v, p as i64);
        }
        prods.push(z);
    }
    crt_recombine(&prods, basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modmm::mod_ppmm_naive;
    use crate::ring::{Sampler, SamplerConfig};

    #[test]
    fn scalar_recombination() {
        let b = CrtBasis::new(vec![3, 5]).unwrap();
        let r = b.residues(&ModMatrix::from_i64(1, 1, BigInt::from(15), &[7]));
        assert_eq!(r[0].data, vec![1]);
        assert_eq!(r[1].data, vec![2]);
        assert_eq!(crt_recombine(&r, &b).unwrap(), ModMatrix::from_i64(1, 1, BigInt::from(15), &[7]));
        assert!(CrtBasis::new(vec![6, 9]).is_err());
    }

    #[test]
    fn three_primes_match_naive() {
        let basis = CrtBasis::primes_below(19, 3, 8).unwrap();
        assert!(basis.moduli().iter().all(|&p| p < 1 << 19));
        let q = basis.product().clone();
        let mut s = Sampler::new(SamplerConfig::new(1, 3.2, 3));
        let a = ModMatrix::from_fn(8, 8, q.clone(), |_, _| s.uniform_bigint(&q));
        let b = ModMatrix::from_fn(8, 8, q.clone(), |_, _| s.uniform_bigint(&q));
        let c = Counters::default();
        assert_eq!(strategy3_mm(&a, &b, &basis, &c).unwrap(), mod_ppmm_naive(&a, &b).unwrap());
        assert_eq!(c.fp_calls(), 3);
    }

    #[test]
    fn single_prime_basis() {
        let basis = CrtBasis::new(vec![65521]).unwrap();
        let q = BigInt::from(65521);
        let a = ModMatrix::from_fn(3, 4, q.clone(), |i, j| BigInt::from((i * 1000 + j * 77) as i64));
        let b = ModMatrix::from_fn(4, 2, q.clone(), |i, j| BigInt::from((i * 3 + j * 11) as i64 - 20));
        let c = Counters::default();
        assert_eq!(strategy3_mm(&a, &b, &basis, &c).unwrap(), mod_ppmm_naive(&a, &b).unwrap());
    }
}
