use num_bigint::BigInt;
use num_traits::{FromPrimitive, ToPrimitive, Zero};

use super::keys::{GaloisKeys, SecretKey, SwitchingKey};
use crate::error::{Error, Result};
use crate::ring::{RingElem, RingParams, Sampler};

/// `⌊Δ·z_i⌉` coefficientwise.
pub fn ecd_coeff(z: &[f64], delta: f64, params: &RingParams) -> Result<RingElem> {
    if z.len() != params.degree() {
        return Err(Error::Dimension(format!("{} values for degree {}", z.len(), params.degree())));
    }
    let half = params.modulus() >> 1u32;
    let mut coeffs = Vec::with_capacity(z.len());
    for &x in z {
        let v =
            BigInt::from_f64((delta * x + 0.5).floor()).ok_or_else(|| Error::Overflow(format!("cannot encode {x}")))?;
        if v > half || -&v > half {
            return Err(Error::Overflow(format!("encoding of {x} exceeds m/2")));
        }
        coeffs.push(v);
    }
    Ok(RingElem::new(params, coeffs))
}

pub fn dcd_coeff(p: &RingElem, delta: f64) -> Vec<f64> {
    p.coeffs().iter().map(|c| c.to_f64().unwrap() / delta).collect()
}

/// RLWE ciphertext `(a, b)` with `a·sk + b ≈ m`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ciphertext {
    pub a: RingElem,
    pub b: RingElem,
    pub scale: f64,
}

impl Ciphertext {
    pub fn new(a: RingElem, b: RingElem, scale: f64) -> Self {
        assert_eq!(a.params(), b.params(), "ciphertext parts disagree");
        Ciphertext { a, b, scale }
    }

    /// `(0, m)`.
    pub fn trivial(m: RingElem, scale: f64) -> Self {
        Ciphertext { a: RingElem::zero(m.params()), b: m, scale }
    }

    pub fn params(&self) -> &RingParams {
        self.a.params()
    }

    pub fn modulus(&self) -> &BigInt {
        self.a.modulus()
    }

    pub fn degree(&self) -> usize {
        self.a.degree()
    }

    pub fn add(&self, o: &Self) -> Self {
        Ciphertext { a: self.a.add(&o.a), b: self.b.add(&o.b), scale: self.scale }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Ciphertext { a: self.a.sub(&o.a), b: self.b.sub(&o.b), scale: self.scale }
    }

    pub fn neg(&self) -> Self {
        Ciphertext { a: self.a.neg(), b: self.b.neg(), scale: self.scale }
    }

    pub fn scalar_mul(&self, c: &BigInt) -> Self {
        Ciphertext { a: self.a.scalar_mul(c), b: self.b.scalar_mul(c), scale: self.scale }
    }

    pub fn mul_monomial(&self, t: i64) -> Self {
        Ciphertext { a: self.a.mul_monomial(t), b: self.b.mul_monomial(t), scale: self.scale }
    }

    /// Componentwise automorphism, no key switch: the result decrypts under
    /// `sk(X^ell)`.
    pub fn automorphism(&self, ell: usize) -> Self {
        Ciphertext { a: self.a.automorphism(ell), b: self.b.automorphism(ell), scale: self.scale }
    }
}

/// MLWE ciphertext: `Σ a_l·sk_l + b ≈ m`.
#[derive(Clone, Debug, PartialEq)]
pub struct MlweCiphertext {
    pub a: Vec<RingElem>,
    pub b: RingElem,
    pub scale: f64,
}

impl MlweCiphertext {
    pub fn rank(&self) -> usize {
        self.a.len()
    }

    pub fn params(&self) -> &RingParams {
        self.b.params()
    }
}

pub fn encrypt(sk: &SecretKey, m: &RingElem, scale: f64, sampler: &mut Sampler) -> Ciphertext {
    let params = m.params();
    let a = sampler.uniform(params);
    let e = sampler.error(params);
    let b = m.add(&e).sub(&a.mul_small(sk.coeffs()));
    Ciphertext { a, b, scale }
}

/// `a·sk + b mod q`.
pub fn decrypt(sk: &SecretKey, ct: &Ciphertext) -> RingElem {
    ct.a.mul_small(sk.coeffs()).add(&ct.b)
}

pub fn encrypt_mlwe(keys: &[SecretKey], m: &RingElem, scale: f64, sampler: &mut Sampler) -> MlweCiphertext {
    let params = m.params();
    let a: Vec<RingElem> = keys.iter().map(|_| sampler.uniform(params)).collect();
    let mut b = m.add(&sampler.error(params));
    for (ai, s) in a.iter().zip(keys) {
        b = b.sub(&ai.mul_small(s.coeffs()));
    }
    MlweCiphertext { a, b, scale }
}

pub fn decrypt_mlwe(keys: &[SecretKey], ct: &MlweCiphertext) -> RingElem {
    let mut acc = ct.b.clone();
    for (ai, s) in ct.a.iter().zip(keys) {
        acc = acc.add(&ai.mul_small(s.coeffs()));
    }
    acc
}

fn check_switch(swk: &SwitchingKey, ct_modulus: &BigInt) -> Result<()> {
    if swk.q() != ct_modulus {
        return Err(Error::ModulusMismatch(format!(
            "key switches modulo {} but the ciphertext is modulo {}",
            swk.q(),
            ct_modulus
        )));
    }
    Ok(())
}

/// `(⌊a·a_swk/P⌉, b + ⌊a·b_swk/P⌉)`.
pub fn key_switch(swk: &SwitchingKey, ct: &Ciphertext) -> Result<Ciphertext> {
    check_switch(swk, ct.modulus())?;
    let (a, b) = switch_parts(swk, &ct.a);
    Ok(Ciphertext { a, b: ct.b.add(&b), scale: ct.scale })
}

/// Key switch of the pair `(a, 0)`, returning the two halves of the result.
pub fn switch_parts(swk: &SwitchingKey, a: &RingElem) -> (RingElem, RingElem) {
    let q = swk.q();
    let out = a.params().clone();
    if a.is_zero() {
        return (RingElem::zero(&out), RingElem::zero(&out));
    }
    let lifted = a.with_modulus(swk.a.params());
    let pa = lifted.mul(&swk.a);
    let pb = lifted.mul(&swk.b);
    let aux = swk.aux();
    let one = BigInt::from(1);
    debug_assert_eq!(out.modulus(), q);
    (pa.scale_round(&one, aux, &out), pb.scale_round(&one, aux, &out))
}

/// Switches an MLWE ciphertext under `(sk_l)_l` to an RLWE ciphertext under
/// the common target of `keys`, rounding once after summing.
pub fn module_key_switch(keys: &[SwitchingKey], ct: &MlweCiphertext) -> Result<Ciphertext> {
    if keys.len() != ct.rank() {
        return Err(Error::MissingKey(format!("{} keys for an MLWE ciphertext of rank {}", keys.len(), ct.rank())));
    }
    let out = ct.params().clone();
    let Some(first) = keys.first() else {
        return Ok(Ciphertext::trivial(ct.b.clone(), ct.scale));
    };
    for k in keys {
        check_switch(k, out.modulus())?;
        if k.aux() != first.aux() {
            return Err(Error::ModulusMismatch("module keys use different auxiliary moduli".into()));
        }
    }
    let big = first.a.params();
    let mut pa = RingElem::zero(big);
    let mut pb = RingElem::zero(big);
    for (k, a) in keys.iter().zip(&ct.a) {
        if a.is_zero() {
            continue;
        }
        let l = a.with_modulus(big);
        pa = pa.add(&l.mul(&k.a));
        pb = pb.add(&l.mul(&k.b));
    }
    let one = BigInt::from(1);
    let a = pa.scale_round(&one, first.aux(), &out);
    let b = ct.b.add(&pb.scale_round(&one, first.aux(), &out));
    Ok(Ciphertext { a, b, scale: ct.scale })
}

/// `⌊ct·target/q⌉` into modulus `target`; the scale is multiplied by `target/q`.
pub fn mod_switch(ct: &Ciphertext, target: &BigInt) -> Ciphertext {
    let q = ct.modulus().clone();
    if *target == q {
        return ct.clone();
    }
    let out = ct.params().with_modulus(target.clone());
    Ciphertext {
        a: ct.a.scale_round(target, &q, &out),
        b: ct.b.scale_round(target, &q, &out),
        scale: ct.scale * ratio(target, &q),
    }
}

pub fn rescale(ct: &Ciphertext, target: &BigInt) -> Result<Ciphertext> {
    if target >= ct.modulus() {
        return Err(Error::InvalidParams(format!("rescale target {} is not below {}", target, ct.modulus())));
    }
    Ok(mod_switch(ct, target))
}

/// `target/q` as a float, accurate for moduli of any width.
pub fn ratio(target: &BigInt, q: &BigInt) -> f64 {
    let shift = (q.bits().max(target.bits()) as i64 - 60).max(0) as u32;
    let t = (target >> shift).to_f64().unwrap();
    let d = (q >> shift).to_f64().unwrap();
    if d == 0.0 {
        target.to_f64().unwrap() / q.to_f64().unwrap()
    } else {
        t / d
    }
}

pub fn pcmult_monomial(ct: &Ciphertext, t: i64) -> Ciphertext {
    ct.mul_monomial(t)
}

/// Applies `X → X^ell` to the plaintext, keeping the key.
pub fn aut(ct: &Ciphertext, ell: usize, keys: &GaloisKeys) -> Result<Ciphertext> {
    let n2 = 2 * ct.degree();
    let ell = ell % n2;
    if ell % 2 == 0 {
        return Err(Error::InvalidParams(format!("automorphism index {ell} is even")));
    }
    if ell == 1 {
        return Ok(ct.clone());
    }
    let swk = keys.get(ell).ok_or_else(|| Error::MissingKey(format!("automorphism key for exponent {ell}")))?;
    key_switch(swk, &ct.automorphism(ell))
}

/// Turns a ciphertext under `sk²` into one under `sk` given `rlk = swk(sk² → sk)`.
pub fn relin(ct: &Ciphertext, rlk: &SwitchingKey) -> Result<Ciphertext> {
    key_switch(rlk, ct)
}

/// `(‖sk‖₁ + 1)/2 + ⌈6σ⌉·N·q/P`.
pub fn key_switch_bound(target_l1: i64, error_bound: i64, degree: usize, q: &BigInt, aux: &BigInt) -> f64 {
    (target_l1 as f64 + 1.0) / 2.0 + error_bound as f64 * degree as f64 * ratio(q, aux)
}

/// Centered difference of two ring elements as `f64` magnitudes.
pub fn max_diff(x: &RingElem, y: &RingElem) -> f64 {
    x.sub(y).max_abs().to_f64().unwrap()
}

pub fn is_trivial(ct: &Ciphertext) -> bool {
    ct.a.coeffs().iter().all(|c| c.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ckks::keys::swk_gen;
    use crate::ckks::Params;
    use crate::ring::SamplerConfig;

    fn setup(n: usize) -> (Params, SecretKey, Sampler) {
        let p = Params::desk64();
        let mut s = Sampler::new(SamplerConfig::new(8, 3.2, 7));
        let sk = SecretKey::generate(n, &mut s).unwrap();
        (p, sk, s)
    }

    #[test]
    fn encoding_examples() {
        let r = RingParams::new(4, BigInt::from(1u64 << 40)).unwrap();
        assert!(ecd_coeff(&[0.0; 4], 1024.0, &r).unwrap().is_zero());
        let e =
            ecd_coeff(&[0.5, 0.0, 0.0, 0.0], (1u64 << 20) as f64, &r.with_modulus(BigInt::from(1u64 << 40))).unwrap();
        assert_eq!(e.coeffs()[0], BigInt::from(524288));
        assert!(ecd_coeff(&[1e9, 0.0, 0.0, 0.0], 1024.0, &r).is_err());
    }

    #[test]
    fn decode_within_half_ulp() {
        let r = RingParams::new(8, BigInt::from(1u64 << 40)).unwrap();
        let mut s = Sampler::new(SamplerConfig::new(1, 3.2, 1));
        use rand::Rng;
        for _ in 0..100 {
            let z: Vec<f64> = (0..8).map(|_| s.rng().gen_range(-1.0..1.0)).collect();
            let d = dcd_coeff(&ecd_coeff(&z, 1024.0, &r).unwrap(), 1024.0);
            assert!(z.iter().zip(&d).all(|(a, b)| (a - b).abs() <= 0.5 / 1024.0 + 1e-15));
        }
    }

    #[test]
    fn trivial_ciphertext_is_exact() {
        let (p, sk, _) = setup(64);
        let r = p.ring(p.q());
        let m = RingElem::monomial(&r, 3).scalar_mul(&BigInt::from(99));
        assert_eq!(decrypt(&sk, &Ciphertext::trivial(m.clone(), p.delta)), m);
    }

    #[test]
    fn key_switch_round_trip() {
        let (p, sk, mut s) = setup(64);
        let sk2 = SecretKey::generate(64, &mut s).unwrap();
        let r = p.ring(p.q());
        let m = s.uniform(&RingParams::new(64, BigInt::from(1 << 20)).unwrap()).with_modulus(&r);
        let ct = encrypt(&sk, &m, p.delta, &mut s);
        let swk = swk_gen(&sk, &sk2, &p.aux_big, &p.q(), &mut s);
        let out = key_switch(&swk, &ct).unwrap();
        let bound = key_switch_bound(sk2.l1(), p.error_bound(), 64, &p.q(), &p.aux_big) + p.error_bound() as f64;
        assert!(max_diff(&decrypt(&sk2, &out), &m) <= bound);
        let wrong = swk_gen(&sk, &sk2, &p.aux_big, &p.q_low(), &mut s);
        assert!(matches!(key_switch(&wrong, &ct), Err(Error::ModulusMismatch(_))));
    }

    #[test]
    fn rescale_divides() {
        let (p, sk, mut s) = setup(64);
        let q = p.q();
        let ql = p.q_low();
        let r = p.ring(q.clone());
        let m = s.uniform(&r);
        let ct = encrypt(&sk, &m, p.delta * p.delta, &mut s);
        let out = rescale(&ct, &ql).unwrap();
        let expect = m.scale_round(&ql, &q, &p.ring(ql.clone()));
        let bound = (sk.l1() as f64 + 1.0) / 2.0 + 1.0;
        assert!(max_diff(&decrypt(&sk, &out), &expect) <= bound);
        assert!((out.scale - p.delta * p.delta * ratio(&ql, &q)).abs() < 1e-9);
        assert!(rescale(&out, &q).is_err());
    }

    #[test]
    fn monomial_and_automorphism() {
        let (p, sk, mut s) = setup(64);
        let r = p.ring(p.q());
        let m = s.uniform(&RingParams::new(64, BigInt::from(1 << 16)).unwrap()).with_modulus(&r);
        let ct = encrypt(&sk, &m, p.delta, &mut s);
        assert_eq!(pcmult_monomial(&ct, 0), ct);
        assert_eq!(pcmult_monomial(&ct, 64), ct.neg());
        let dec = decrypt(&sk, &pcmult_monomial(&ct, 5));
        assert!(max_diff(&dec, &m.mul_monomial(5)) <= p.error_bound() as f64);
        let keys = GaloisKeys::generate(&sk, &[5], &p.aux_big, &p.q(), &mut s);
        let out = aut(&ct, 5, &keys).unwrap();
        let bound = key_switch_bound(sk.l1(), p.error_bound(), 64, &p.q(), &p.aux_big) + p.error_bound() as f64;
        assert!(max_diff(&decrypt(&sk, &out), &m.automorphism(5)) <= bound);
        assert!(matches!(aut(&ct, 7, &keys), Err(Error::MissingKey(_))));
        assert_eq!(aut(&ct, 1, &keys).unwrap(), ct);
    }
}
