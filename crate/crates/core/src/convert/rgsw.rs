use num_bigint::BigInt;
use num_integer::Integer;
use rayon::prelude::*;

use super::transpose::{transpose_counted, TransposeKeySet};
use crate::arith::next_prime;
use crate::ckks::{switch_parts, swk_gen, Ciphertext, SecretKey, SwitchingKey};
use crate::error::{Error, Result};
use crate::formats::{Format, MatrixCT, Orientation, PartnerKey, RgswMatrixCT};
use crate::modmm::Counters;
use crate::ring::{RingElem, RingParams, Sampler};

/// Keys for [`rlwe_to_rgsw`], all switching ciphertexts modulo `p·q`:
/// transposition keys for `sk′(X^{-1})`, `sk·sk′(X^{-1}) → sk` and
/// `sk′(X^{-1}) → sk`.
#[derive(Clone, Debug, PartialEq)]
pub struct RgswConversionKeys {
    pub transpose: TransposeKeySet,
    pub product: SwitchingKey,
    pub partner: SwitchingKey,
}

impl RgswConversionKeys {
    /// Modulus `p·q` of the converted ciphertexts.
    pub fn modulus(&self) -> &BigInt {
        self.product.q()
    }
}

/// Generates conversion keys with auxiliary modulus `next_prime(p·q)`.
pub fn rgsw_conversion_keys(
    sk: &SecretKey,
    partner: &SecretKey,
    p: &BigInt,
    q: &BigInt,
    lightweight: bool,
    sampler: &mut Sampler,
) -> Result<RgswConversionKeys> {
    if sk.degree() != partner.degree() {
        return Err(Error::Dimension("both keys must share the ring degree".into()));
    }
    let pq = p * q;
    let aux = next_prime(&pq);
    let conj = partner.conjugate();
    let transpose = if lightweight {
        TransposeKeySet::lightweight(&conj, &aux, &pq, sampler)
    } else {
        TransposeKeySet::full(&conj, &aux, &pq, sampler)
    };
    Ok(RgswConversionKeys {
        transpose,
        product: swk_gen(&sk.product(&conj), sk, &aux, &pq, sampler),
        partner: swk_gen(&conj, sk, &aux, &pq, sampler),
    })
}

fn rows_of(m: &crate::modmm::ModMatrix, params: &RingParams, scale: f64) -> Vec<Ciphertext> {
    let (rows, _) = m.shape();
    (0..rows)
        .into_par_iter()
        .map(|i| Ciphertext::new(RingElem::new(params, m.row(i).to_vec()), RingElem::zero(params), scale))
        .collect()
}

/// From a column RLWE encryption `(A, B)` of `p·⌊ΔM⌉` modulo `p·q` under
/// `toep(sk)`, computes an encryption of `p·⌊ΔM⌉·toep(sk′)` under the same key.
pub fn rlwe_to_rgsw(ct: &MatrixCT, keys: &RgswConversionKeys) -> Result<MatrixCT> {
    rlwe_to_rgsw_counted(ct, keys, &Counters::default())
}

pub fn rlwe_to_rgsw_counted(ct: &MatrixCT, keys: &RgswConversionKeys, counters: &Counters) -> Result<MatrixCT> {
    let n = ct.degree;
    if ct.format() != Format::Rlwe || ct.orientation() != Orientation::Column || ct.dims() != (n, n) {
        return Err(Error::Dimension(format!(
            "conversion needs a square column RLWE matrix, got {} {:?}",
            ct.tag,
            ct.dims()
        )));
    }
    if ct.modulus() != keys.modulus() {
        return Err(Error::ModulusMismatch(format!(
            "keys convert modulo {}, ciphertext is modulo {}",
            keys.modulus(),
            ct.modulus()
        )));
    }
    if !ct.modulus().gcd(&BigInt::from(n)).eq(&BigInt::from(1)) {
        return Err(Error::NotInvertible(format!("N = {n} is not invertible modulo p·q")));
    }
    let params = RingParams::new(n, ct.modulus().clone())?;
    let from_a = rows_of(&ct.a, &params, ct.scale);
    let from_b = rows_of(&ct.b, &params, ct.scale);
    let (t1, t2) = rayon::join(
        || transpose_counted(&from_a, &keys.transpose, counters),
        || transpose_counted(&from_b, &keys.transpose, counters),
    );
    let (t1, t2) = (t1?, t2?);
    counters.add_key_switch(2 * n);
    let cols: Vec<Ciphertext> = (0..n)
        .into_par_iter()
        .map(|j| {
            let (a0, b0) = switch_parts(&keys.product, &t1[j].a);
            let (a1, b1) = switch_parts(&keys.partner, &t2[j].a);
            Ciphertext::new(a0.add(&a1).add(&t1[j].b), b0.add(&b1).add(&t2[j].b), ct.scale)
        })
        .collect();
    MatrixCT::from_columns(&cols, Orientation::Column)
}

/// Both RGSW parts from the first one. `aux` is the modulus `p`.
pub fn rgsw_from_rlwe(
    ct: &MatrixCT,
    keys: &RgswConversionKeys,
    partner: PartnerKey,
    aux: &BigInt,
) -> Result<RgswMatrixCT> {
    let (q, rem) = ct.modulus().div_rem(aux);
    if rem != BigInt::from(0) {
        return Err(Error::ModulusMismatch(format!("{aux} does not divide the ciphertext modulus")));
    }
    let part1 = rlwe_to_rgsw(ct, keys)?;
    Ok(RgswMatrixCT { part0: ct.clone(), part1, partner, aux: aux.clone(), q })
}
