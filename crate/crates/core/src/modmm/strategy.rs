//! Limb chopping (exact) and truncation (approximate) reductions of a
//! modular product to double-precision products.

use num_bigint::BigInt;
use num_integer::Roots;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use super::fp::{fp_exact_mm, fp_matmul, FP_EXACT_BITS};
use super::naive::check_operands;
use super::{Counters, IntMatrix, ModMatrix};
use crate::arith::center;
use crate::error::Result;

/// `⌊√(2^53/d2)⌋`, the largest limb base whose products stay exact.
pub fn limb_base(d2: usize) -> u64 {
    ((1u64 << FP_EXACT_BITS) / d2.max(1) as u64).sqrt()
}

/// Smallest `k ≥ 1` with `base^k > max_abs`.
pub fn limb_count(max_abs: &BigInt, base: u64) -> usize {
    let base = BigInt::from(base);
    let mut pow = base.clone();
    let mut k = 1;
    while pow <= *max_abs {
        pow *= &base;
        k += 1;
    }
    k
}

/// Signed base-`K` digits of every entry: `M = Σ limbs[i]·K^i`, each limb
/// entry carrying the sign of the source entry and `|·| < K`.
#[derive(Clone, Debug)]
pub struct LimbStack {
    pub base: u64,
    pub limbs: Vec<IntMatrix>,
}

impl LimbStack {
    pub fn decompose(m: &ModMatrix, base: u64) -> Self {
        let k = limb_count(&m.max_abs(), base);
        let (rows, cols) = m.shape();
        let mut limbs = vec![IntMatrix::zeros(rows, cols); k];
        let bb = BigInt::from(base);
        for (t, x) in m.data().iter().enumerate() {
            let neg = x.is_negative();
            if let Some(mut v) = x.abs().to_u128() {
                for limb in limbs.iter_mut() {
                    let d = (v % base as u128) as i64;
                    limb.data[t] = if neg { -d } else { d };
                    v /= base as u128;
                }
            } else {
                let mut v = x.abs();
                for limb in limbs.iter_mut() {
                    let d = (&v % &bb).to_i64().unwrap();
                    limb.data[t] = if neg { -d } else { d };
                    v /= &bb;
                }
            }
        }
        LimbStack { base, limbs }
    }

    pub fn len(&self) -> usize {
        self.limbs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.limbs.is_empty()
    }

    pub fn reconstruct(&self, modulus: &BigInt) -> ModMatrix {
        let (rows, cols) = (self.limbs[0].rows, self.limbs[0].cols);
        let base = BigInt::from(self.base);
        let data = (0..rows * cols)
            .map(|t| {
                let mut acc = BigInt::zero();
                for limb in self.limbs.iter().rev() {
                    acc = acc * &base + limb.data[t];
                }
                acc
            })
            .collect();
        ModMatrix::new(rows, cols, modulus.clone(), data)
    }
}

/// Limb counts `(K, k1, k2)` that Strategy 1 uses for `a·b`.
pub fn strategy1_plan(a: &ModMatrix, b: &ModMatrix) -> (u64, usize, usize) {
    let base = limb_base(a.cols());
    (base, limb_count(&a.max_abs(), base), limb_count(&b.max_abs(), base))
}

/// Exact modular product from `k1·k2` exact double-precision products.
pub fn strategy1_mm(a: &ModMatrix, b: &ModMatrix, counters: &Counters) -> Result<ModMatrix> {
    check_operands(a, b)?;
    let base = limb_base(a.cols());
    let la = LimbStack::decompose(a, base);
    let lb = LimbStack::decompose(b, base);
    let (d1, d3) = (a.rows(), b.cols());
    let mut acc = vec![BigInt::zero(); d1 * d3];
    let bb = BigInt::from(base);
    for (i, ai) in la.limbs.iter().enumerate() {
        for (j, bj) in lb.limbs.iter().enumerate() {
            let p = fp_exact_mm(ai, bj)?;
            counters.add_fp(1);
            let w = num_traits::pow(bb.clone(), i + j);
            acc.par_iter_mut().zip(p.data.par_iter()).for_each(|(s, &v)| {
                if v != 0 {
                    *s += &w * v;
                }
            });
        }
    }
    let m = a.modulus();
    let data = acc.par_iter().map(|x| center(x, m)).collect();
    Ok(ModMatrix::from_centered(d1, d3, m.clone(), data))
}

/// `2^-50·d2·‖B1‖∞·‖B2‖∞`, the error allowance of [`strategy2_mm`].
pub fn strategy2_bound(d2: usize, b1_max: &BigInt, b2_max: &BigInt) -> f64 {
    let prod = BigInt::from(d2) * b1_max * b2_max;
    prod.to_f64().unwrap_or(f64::INFINITY) * 2f64.powi(-50)
}

/// Approximate modular product: both operands rounded to 53-bit floats, one
/// double-precision product, exact centered reduction of the result.
pub fn strategy2_mm(b1: &ModMatrix, b2: &ModMatrix, counters: &Counters) -> Result<ModMatrix> {
    check_operands(b1, b2)?;
    let (d1, d2, d3) = (b1.rows(), b1.cols(), b2.cols());
    let out = fp_matmul(&b1.to_f64(), &b2.to_f64(), d1, d2, d3);
    counters.add_fp(1);
    let m = b1.modulus();
    let data = out.par_iter().map(|&x| center(&BigInt::from_f64(x.round()).unwrap_or_else(BigInt::zero), m)).collect();
    Ok(ModMatrix::from_centered(d1, d3, m.clone(), data))
}
