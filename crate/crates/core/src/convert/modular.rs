use num_bigint::BigInt;
use rayon::prelude::*;

use crate::ckks::{module_key_switch, swk_gen, Ciphertext, MlweCiphertext, SecretKey, SwitchingKey};
use crate::error::{Error, Result};
use crate::ring::{RingElem, RingParams, Sampler};

/// Which side of the decomposed identity absorbs the `Y` factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecompMode {
    /// All parts share the key `(s_0 … s_{k-1})`.
    SharedS,
    /// All parts share the `a`-vector `(a_0 … a_{k-1})`.
    SharedA,
}

/// Polyphase split `x = Σ_{i<k} x_i(Y)·X^i` with `Y = X^k`.
pub fn split_elem(x: &RingElem, k: usize) -> Result<Vec<RingElem>> {
    let n = x.degree();
    check_split(n, k)?;
    let sub = RingParams::new(n / k, x.modulus().clone())?;
    Ok((0..k).map(|i| RingElem::new(&sub, x.coeffs().iter().skip(i).step_by(k).cloned().collect())).collect())
}

/// Inverse of [`split_elem`].
pub fn join_elems(parts: &[RingElem]) -> RingElem {
    let k = parts.len();
    let sub = parts[0].degree();
    let params = RingParams::new(k * sub, parts[0].modulus().clone()).expect("power-of-two degree");
    let mut out = vec![BigInt::from(0); k * sub];
    for (i, p) in parts.iter().enumerate() {
        for (t, c) in p.coeffs().iter().enumerate() {
            out[t * k + i] = c.clone();
        }
    }
    RingElem::new(&params, out)
}

fn check_split(n: usize, k: usize) -> Result<()> {
    if k == 0 || n % k != 0 || !(n / k).is_power_of_two() {
        return Err(Error::InvalidParams(format!("cannot split degree {n} into {k} parts")));
    }
    Ok(())
}

/// Key components `s_l` with `sk = Σ_l s_l(Y)·X^l`.
pub fn decompose_key(sk: &SecretKey, k: usize) -> Result<Vec<SecretKey>> {
    check_split(sk.degree(), k)?;
    Ok((0..k).map(|l| SecretKey::from_coeffs(sk.coeffs().iter().skip(l).step_by(k).copied().collect())).collect())
}

fn times_y(s: &SecretKey) -> SecretKey {
    let c = s.coeffs();
    let n = c.len();
    let mut out = vec![0i64; n];
    out[1..].copy_from_slice(&c[..n - 1]);
    out[0] = -c[n - 1];
    SecretKey::from_coeffs(out)
}

/// Keys of [`DecompMode::SharedA`] part `j`: `Y^{[i>j]}·s_{(j-i) mod k}` for `i < k`.
pub fn shared_a_part_keys(sk: &SecretKey, k: usize) -> Result<Vec<Vec<SecretKey>>> {
    let s = decompose_key(sk, k)?;
    Ok((0..k)
        .map(|j| {
            (0..k)
                .map(|i| {
                    let base = &s[(j + k - i) % k];
                    if i > j {
                        times_y(base)
                    } else {
                        base.clone()
                    }
                })
                .collect()
        })
        .collect())
}

/// Splits an RLWE ciphertext of degree `N` into `k` MLWE ciphertexts of
/// degree `N/k`; part `j` encrypts the `j`-th polyphase component of the
/// plaintext. No noise is added.
pub fn mod_decomp(ct: &Ciphertext, k: usize, mode: DecompMode) -> Result<Vec<MlweCiphertext>> {
    let a = split_elem(&ct.a, k)?;
    let b = split_elem(&ct.b, k)?;
    let ya: Vec<RingElem> = a.iter().map(|x| x.mul_monomial(1)).collect();
    Ok((0..k)
        .map(|j| {
            let parts = match mode {
                // α_{j,l} = Y^{[l>j]}·a_{(j-l) mod k}
                DecompMode::SharedS => (0..k)
                    .map(|l| if l > j { ya[(j + k - l) % k].clone() } else { a[(j + k - l) % k].clone() })
                    .collect(),
                DecompMode::SharedA => a.clone(),
            };
            MlweCiphertext { a: parts, b: b[j].clone(), scale: ct.scale }
        })
        .collect())
}

/// Switching keys `s_l(X^k) → sk` for MLWE ciphertexts of degree `N/k`
/// under `components`.
#[derive(Clone, Debug, PartialEq)]
pub struct PackingKeys {
    pub keys: Vec<SwitchingKey>,
    pub parts: usize,
}

pub fn packing_key_gen(
    components: &[SecretKey],
    sk: &SecretKey,
    parts: usize,
    aux: &BigInt,
    q: &BigInt,
    sampler: &mut Sampler,
) -> Result<PackingKeys> {
    if components.iter().any(|c| c.degree() * parts != sk.degree()) {
        return Err(Error::Dimension(format!(
            "packing {parts} parts needs components of degree {}",
            sk.degree() / parts
        )));
    }
    let keys = components.iter().map(|c| swk_gen(&c.inflate(parts), sk, aux, q, sampler)).collect();
    Ok(PackingKeys { keys, parts })
}

/// Packs `k` MLWE ciphertexts of degree `N/k` under one key into an RLWE
/// ciphertext of degree `N` whose `j`-th polyphase component is the
/// plaintext of `cts[j]`.
pub fn mod_pack(cts: &[MlweCiphertext], keys: &PackingKeys) -> Result<Ciphertext> {
    let k = cts.len();
    if k != keys.parts {
        return Err(Error::Dimension(format!("packing keys expect {} parts, got {k}", keys.parts)));
    }
    let rank = cts[0].rank();
    if cts.iter().any(|c| c.rank() != rank || c.params() != cts[0].params()) {
        return Err(Error::ParamMismatch("packed ciphertexts must share ring and rank".into()));
    }
    let b = join_elems(&cts.iter().map(|c| c.b.clone()).collect::<Vec<_>>());
    if k == 1 && rank == 1 && keys.keys[0].source == keys.keys[0].target {
        return Ok(Ciphertext::new(cts[0].a[0].clone(), b, cts[0].scale));
    }
    let a = (0..rank)
        .into_par_iter()
        .map(|l| join_elems(&cts.iter().map(|c| c.a[l].clone()).collect::<Vec<_>>()))
        .collect();
    module_key_switch(&keys.keys, &MlweCiphertext { a, b, scale: cts[0].scale })
}
