//! Arithmetic in `Z_m[X]/(X^N + 1)` with centered residues.

mod sampler;

pub use sampler::{sample_error, sample_ternary_sparse, sample_uniform, Sampler, SamplerConfig};

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::arith::{center, center_i128, is_power_of_two, scale_round};
use crate::error::{Error, Result};
use crate::modmm::ModMatrix;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingParams {
    degree: usize,
    modulus: Arc<BigInt>,
}

impl RingParams {
    pub fn new(degree: usize, modulus: BigInt) -> Result<Self> {
        if !is_power_of_two(degree) {
            return Err(Error::InvalidParams(format!("degree {degree} is not a power of two")));
        }
        if modulus < BigInt::from(2) {
            return Err(Error::InvalidParams(format!("modulus {modulus} is below 2")));
        }
        Ok(RingParams { degree, modulus: Arc::new(modulus) })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn modulus(&self) -> &BigInt {
        &self.modulus
    }

    pub fn with_modulus(&self, modulus: BigInt) -> Self {
        RingParams { degree: self.degree, modulus: Arc::new(modulus) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingElem {
    params: RingParams,
    coeffs: Vec<BigInt>,
}

/// Maps exponent `e` of `X` in the negacyclic ring to `(position, negate)`.
#[inline]
fn wrap(e: usize, n: usize) -> (usize, bool) {
    let e = e % (2 * n);
    if e < n {
        (e, false)
    } else {
        (e - n, true)
    }
}

impl RingElem {
    pub fn new(params: &RingParams, coeffs: Vec<BigInt>) -> Self {
        assert_eq!(coeffs.len(), params.degree, "coefficient vector has wrong length");
        let coeffs = coeffs.iter().map(|c| center(c, &params.modulus)).collect();
        RingElem { params: params.clone(), coeffs }
    }

    pub fn zero(params: &RingParams) -> Self {
        RingElem { params: params.clone(), coeffs: vec![BigInt::zero(); params.degree] }
    }

    pub fn from_i64(params: &RingParams, coeffs: &[i64]) -> Self {
        Self::new(params, coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    /// `X^t` for any integer `t`, so `monomial(N)` is `-1`.
    pub fn monomial(params: &RingParams, t: i64) -> Self {
        let n = params.degree;
        let (pos, neg) = wrap(t.rem_euclid(2 * n as i64) as usize, n);
        let mut out = Self::zero(params);
        out.coeffs[pos] = center(&BigInt::from(if neg { -1 } else { 1 }), &params.modulus);
        out
    }

    pub fn params(&self) -> &RingParams {
        &self.params
    }

    pub fn degree(&self) -> usize {
        self.params.degree
    }

    pub fn modulus(&self) -> &BigInt {
        &self.params.modulus
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<BigInt> {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn max_abs(&self) -> BigInt {
        self.coeffs.iter().map(|c| c.abs()).max().unwrap_or_else(BigInt::zero)
    }

    fn same(&self, o: &Self) {
        assert_eq!(self.params, o.params, "ring parameter mismatch");
    }

    pub fn add(&self, o: &Self) -> Self {
        self.same(o);
        let m = self.modulus();
        let coeffs = self.coeffs.iter().zip(&o.coeffs).map(|(x, y)| center(&(x + y), m)).collect();
        RingElem { params: self.params.clone(), coeffs }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.same(o);
        let m = self.modulus();
        let coeffs = self.coeffs.iter().zip(&o.coeffs).map(|(x, y)| center(&(x - y), m)).collect();
        RingElem { params: self.params.clone(), coeffs }
    }

    pub fn neg(&self) -> Self {
        let m = self.modulus();
        RingElem { params: self.params.clone(), coeffs: self.coeffs.iter().map(|x| center(&-x, m)).collect() }
    }

    pub fn scalar_mul(&self, c: &BigInt) -> Self {
        let m = self.modulus();
        RingElem { params: self.params.clone(), coeffs: self.coeffs.iter().map(|x| center(&(x * c), m)).collect() }
    }

    /// Negacyclic product, schoolbook.
    pub fn mul(&self, o: &Self) -> Self {
        self.same(o);
        let n = self.degree();
        let m = self.modulus();
        let log_n = n.trailing_zeros() as u64;
        let mb = m.bits();
        // Products of centered residues are below 2^(2mb-2); N of them must fit in i128.
        let coeffs = if 2 * mb + log_n <= 125 {
            mul_i128(&self.to_i64_vec(), &o.to_i64_vec(), m.to_i128().unwrap()).into_iter().map(BigInt::from).collect()
        } else {
            mul_big(&self.coeffs, &o.coeffs, m)
        };
        RingElem { params: self.params.clone(), coeffs }
    }

    /// Product with a polynomial given by small integer coefficients, in time
    /// proportional to `N` times its number of nonzero entries.
    pub fn mul_small(&self, small: &[i64]) -> Self {
        let n = self.degree();
        assert_eq!(small.len(), n, "small polynomial has wrong length");
        let mut acc = vec![BigInt::zero(); n];
        for (j, &s) in small.iter().enumerate() {
            if s == 0 {
                continue;
            }
            let s = BigInt::from(s);
            for (i, c) in self.coeffs.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let t = c * &s;
                let k = i + j;
                if k < n {
                    acc[k] += t;
                } else {
                    acc[k - n] -= t;
                }
            }
        }
        let m = self.modulus();
        RingElem { params: self.params.clone(), coeffs: acc.iter().map(|x| center(x, m)).collect() }
    }

    /// Multiplication by `X^t`.
    pub fn mul_monomial(&self, t: i64) -> Self {
        let n = self.degree();
        let shift = t.rem_euclid(2 * n as i64) as usize;
        let mut out = vec![BigInt::zero(); n];
        let m = self.modulus();
        for (i, c) in self.coeffs.iter().enumerate() {
            let (pos, neg) = wrap(i + shift, n);
            out[pos] = if neg { center(&-c, m) } else { c.clone() };
        }
        RingElem { params: self.params.clone(), coeffs: out }
    }

    /// `x(X^ell)` for odd `ell`, taken modulo `2N`.
    pub fn automorphism(&self, ell: usize) -> Self {
        let n = self.degree();
        let ell = ell % (2 * n);
        assert!(ell % 2 == 1, "automorphism index must be odd");
        let m = self.modulus();
        let mut out = vec![BigInt::zero(); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            let (pos, neg) = wrap(ell * i, n);
            out[pos] = if neg { center(&-c, m) } else { c.clone() };
        }
        RingElem { params: self.params.clone(), coeffs: out }
    }

    /// `x(X^k)` as an element of the degree `k·N` ring over `params`.
    pub fn inflate(&self, k: usize, params: &RingParams) -> Self {
        assert_eq!(params.degree, k * self.degree(), "inflate target has wrong degree");
        let mut out = vec![BigInt::zero(); params.degree];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i * k] = c.clone();
        }
        Self::new(params, out)
    }

    /// Re-reduces the centered coefficients modulo a new modulus.
    pub fn with_modulus(&self, params: &RingParams) -> Self {
        assert_eq!(params.degree, self.degree());
        Self::new(params, self.coeffs.clone())
    }

    /// Coefficientwise `⌊c·num/den⌉` reduced into `params`.
    pub fn scale_round(&self, num: &BigInt, den: &BigInt, params: &RingParams) -> Self {
        assert_eq!(params.degree, self.degree());
        let coeffs = self.coeffs.iter().map(|c| center(&scale_round(c, num, den), &params.modulus)).collect();
        RingElem { params: params.clone(), coeffs }
    }

    pub fn toeplitz(&self) -> ModMatrix {
        let n = self.degree();
        let m = self.modulus();
        ModMatrix::from_fn(n, n, m.clone(), |i, j| {
            // column j is X^j·x: entry i is x_{i-j}, negated when wrapping
            if i >= j {
                self.coeffs[i - j].clone()
            } else {
                -&self.coeffs[n + i - j]
            }
        })
    }

    pub fn to_i64_vec(&self) -> Vec<i64> {
        self.coeffs.iter().map(|c| c.to_i64().expect("coefficient exceeds i64")).collect()
    }
}

fn mul_i128(a: &[i64], b: &[i64], m: i128) -> Vec<i128> {
    let n = a.len();
    let mut acc = vec![0i128; n];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        let x = x as i128;
        for (j, &y) in b.iter().enumerate() {
            let t = x * y as i128;
            let k = i + j;
            if k < n {
                acc[k] += t;
            } else {
                acc[k - n] -= t;
            }
        }
    }
    acc.into_iter().map(|v| center_i128(v, m)).collect()
}

fn mul_big(a: &[BigInt], b: &[BigInt], m: &BigInt) -> Vec<BigInt> {
    let n = a.len();
    let coeff = |k: usize| {
        let mut acc = BigInt::zero();
        for i in 0..n {
            if a[i].is_zero() {
                continue;
            }
            if i <= k {
                acc += &a[i] * &b[k - i];
            } else {
                acc -= &a[i] * &b[n + k - i];
            }
        }
        center(&acc, m)
    };
    if n >= 128 {
        (0..n).into_par_iter().map(coeff).collect()
    } else {
        (0..n).map(coeff).collect()
    }
}

fn check(x: &RingElem, y: &RingElem) -> Result<()> {
    if x.params != y.params {
        return Err(Error::ParamMismatch(format!(
            "(N={}, m={}) vs (N={}, m={})",
            x.degree(),
            x.modulus(),
            y.degree(),
            y.modulus()
        )));
    }
    Ok(())
}

pub fn ring_add(x: &RingElem, y: &RingElem) -> Result<RingElem> {
    check(x, y)?;
    Ok(x.add(y))
}

pub fn ring_sub(x: &RingElem, y: &RingElem) -> Result<RingElem> {
    check(x, y)?;
    Ok(x.sub(y))
}

pub fn ring_mul(x: &RingElem, y: &RingElem) -> Result<RingElem> {
    check(x, y)?;
    Ok(x.mul(y))
}

/// `toep(x)`: the matrix whose column `j` is `Vec(X^j·x)`.
pub fn toeplitz_matrix(x: &RingElem) -> ModMatrix {
    x.toeplitz()
}

pub fn apply_automorphism(x: &RingElem, ell: usize) -> Result<RingElem> {
    if ell % 2 == 0 {
        return Err(Error::InvalidParams(format!("automorphism index {ell} is even")));
    }
    Ok(x.automorphism(ell))
}

/// Checks that `m` has the structure of `toep(x)` for some `x` and returns it.
pub fn toeplitz_generator(m: &ModMatrix) -> Option<RingElem> {
    let n = m.rows();
    if m.cols() != n || !is_power_of_two(n) {
        return None;
    }
    let params = RingParams::new(n, m.modulus().clone()).ok()?;
    let x = RingElem::new(&params, m.column(0));
    if x.toeplitz() == *m {
        Some(x)
    } else {
        None
    }
}
