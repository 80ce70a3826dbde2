use num_bigint::BigInt;
use rayon::prelude::*;

use super::tweak::tweak_counted;
use crate::arith::{mod_inverse, mod_inverse_u64, next_prime};
use crate::ckks::{key_switch, Ciphertext, GaloisKeys, SecretKey, SwitchingKey};
use crate::error::{Error, Result};
use crate::formats::{Format, MatrixCT};
use crate::modmm::Counters;
use crate::ring::Sampler;

/// Automorphism keys for [`transpose`].
#[derive(Clone, Debug, PartialEq)]
pub enum TransposeKeySet {
    /// `sk(X^{2t+1}) → sk` for `1 ≤ t < N`.
    Full(GaloisKeys),
    Lightweight(LightweightKeys),
}

/// Two master keys modulo `P′·P·q` and one rolling key modulo `P·q`,
/// initially encrypting `P·sk` under `sk`.
#[derive(Clone, Debug, PartialEq)]
pub struct LightweightKeys {
    pub master5: SwitchingKey,
    pub master_conj: SwitchingKey,
    pub rolling: SwitchingKey,
}

impl TransposeKeySet {
    pub fn full(sk: &SecretKey, aux: &BigInt, q: &BigInt, sampler: &mut Sampler) -> Self {
        let exps: Vec<usize> = (1..sk.degree()).map(|t| 2 * t + 1).collect();
        TransposeKeySet::Full(GaloisKeys::generate(sk, &exps, aux, q, sampler))
    }

    /// Master keys use the dedicated modulus `P′ = next_prime(P·q)`.
    pub fn lightweight(sk: &SecretKey, aux: &BigInt, q: &BigInt, sampler: &mut Sampler) -> Self {
        let pq = aux * q;
        let gen_aux = next_prime(&pq);
        let conj = 2 * sk.degree() - 1;
        TransposeKeySet::Lightweight(LightweightKeys {
            master5: crate::ckks::swk_gen(&sk.automorphism(5), sk, &gen_aux, &pq, sampler),
            master_conj: crate::ckks::swk_gen(&sk.automorphism(conj), sk, &gen_aux, &pq, sampler),
            rolling: crate::ckks::swk_gen(sk, sk, aux, q, sampler),
        })
    }

    pub fn len(&self) -> usize {
        match self {
            TransposeKeySet::Full(g) => g.len(),
            TransposeKeySet::Lightweight(_) => 3,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_lightweight(&self) -> bool {
        matches!(self, TransposeKeySet::Lightweight(_))
    }
}

/// Order in which the lightweight variant visits automorphism exponents:
/// `5^i` for `i < N/2`, then `-5^{N/2-1+i}`, all modulo `2N`. The second
/// half starts where conjugating the last rolled key lands.
pub fn lightweight_schedule(degree: usize) -> Vec<usize> {
    let m = 2 * degree;
    let mut out = Vec::with_capacity(degree);
    let mut g = 1usize;
    for _ in 0..degree / 2 {
        out.push(g);
        g = g * 5 % m;
    }
    let last = out[out.len() - 1];
    let second: Vec<usize> = (0..degree / 2).map(|i| (m - out[(i + degree / 2 - 1) % (degree / 2)]) % m).collect();
    debug_assert_eq!(second[0], m - last);
    out.extend(second);
    out
}

/// Rolls `key`, which encrypts `P·sk(X^e)`, to one encrypting `P·sk(X^{e·ell})`.
fn roll(key: &SwitchingKey, master: &SwitchingKey, ell: usize) -> Result<SwitchingKey> {
    let ct = Ciphertext::new(key.a.automorphism(ell), key.b.automorphism(ell), 1.0);
    let out = key_switch(master, &ct)?;
    SwitchingKey::from_parts(out.a, out.b, key.aux().clone(), key.q().clone(), 0, key.target)
}

/// Converts the `N` RLWE encryptions of the rows of an `N × N` matrix into
/// encryptions of its columns (and vice versa).
pub fn transpose(cts: &[Ciphertext], keys: &TransposeKeySet) -> Result<Vec<Ciphertext>> {
    transpose_counted(cts, keys, &Counters::default())
}

pub fn transpose_counted(cts: &[Ciphertext], keys: &TransposeKeySet, counters: &Counters) -> Result<Vec<Ciphertext>> {
    let n = cts.first().map(Ciphertext::degree).unwrap_or(0);
    if cts.len() != n || n == 0 {
        return Err(Error::Dimension(format!("transpose needs N = {n} ciphertexts, got {}", cts.len())));
    }
    let q = cts[0].modulus().clone();
    let n_inv = mod_inverse(&BigInt::from(n), &q)
        .ok_or_else(|| Error::NotInvertible(format!("N = {n} is not invertible modulo q")))?;
    if let TransposeKeySet::Lightweight(lk) = keys {
        if *lk.master5.aux() < *lk.rolling.modulus() || *lk.master_conj.aux() < *lk.rolling.modulus() {
            return Err(Error::InvalidParams("update-key modulus must be at least P·q".into()));
        }
    }
    counters.add_transpose(1);

    let shifted: Vec<Ciphertext> = cts.par_iter().enumerate().map(|(i, c)| c.mul_monomial(i as i64)).collect();
    let aux = tweak_counted(&shifted, counters)?;

    let m = 2 * n as u64;
    let source = |ell: usize| {
        let inv = mod_inverse_u64(ell as u64, m).expect("odd exponent is a unit");
        aux[((inv - 1) / 2) as usize].scalar_mul(&n_inv)
    };
    let mut rotated: Vec<Option<Ciphertext>> = vec![None; n];
    match keys {
        TransposeKeySet::Full(g) => {
            let out: Vec<Result<Ciphertext>> = (0..n)
                .into_par_iter()
                .map(|j| {
                    let ell = 2 * j + 1;
                    let c = source(ell);
                    if ell == 1 {
                        return Ok(c);
                    }
                    let swk = g.get(ell).ok_or_else(|| Error::MissingKey(format!("automorphism key {ell}")))?;
                    key_switch(swk, &c.automorphism(ell))
                })
                .collect();
            for (j, c) in out.into_iter().enumerate() {
                rotated[j] = Some(c?);
            }
            counters.add_key_switch(n - 1);
        }
        TransposeKeySet::Lightweight(lk) => {
            // sequential: every step rolls the single working key forward
            let mut rolling = lk.rolling.clone();
            let schedule = lightweight_schedule(n);
            for (step, &ell) in schedule.iter().enumerate() {
                if step == n / 2 {
                    rolling = roll(&rolling, &lk.master_conj, 2 * n - 1)?;
                    counters.add_key_switch(1);
                }
                let c = source(ell);
                rotated[(ell - 1) / 2] = Some(if ell == 1 {
                    c
                } else {
                    counters.add_key_switch(1);
                    key_switch(&rolling, &c.automorphism(ell))?
                });
                if step + 1 != n / 2 && step + 1 != n {
                    rolling = roll(&rolling, &lk.master5, 5)?;
                    counters.add_key_switch(1);
                }
            }
        }
    }
    let rotated: Vec<Ciphertext> = rotated.into_iter().map(|c| c.expect("every exponent visited")).collect();
    let tw = tweak_counted(&rotated, counters)?;

    let mut out = Vec::with_capacity(n);
    out.push(tw[0].clone());
    for col in 1..n {
        let j = n - col;
        out.push(tw[j].mul_monomial(j as i64).neg());
    }
    Ok(out)
}

/// Transposes an `N × N` RLWE matrix ciphertext: a row encryption of `M`
/// becomes a column encryption of `M` and vice versa.
pub fn transpose_matrix(ct: &MatrixCT, keys: &TransposeKeySet) -> Result<MatrixCT> {
    transpose_matrix_counted(ct, keys, &Counters::default())
}

pub fn transpose_matrix_counted(ct: &MatrixCT, keys: &TransposeKeySet, counters: &Counters) -> Result<MatrixCT> {
    if ct.format() != Format::Rlwe || ct.dims() != (ct.degree, ct.degree) {
        return Err(Error::Dimension(format!("transpose needs a square RLWE matrix, got {} {:?}", ct.tag, ct.dims())));
    }
    let out = transpose_counted(&ct.columns()?, keys, counters)?;
    MatrixCT::from_columns(&out, ct.orientation().flip())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ckks::{decrypt, Params};
    use crate::formats::{decrypt_matrix, encrypt_matrix, transpose_format};
    use crate::real::RealMatrix;
    use crate::ring::RingElem;

    #[test]
    fn schedule_visits_each_exponent_once() {
        for n in [4, 8, 16, 64] {
            let mut s = lightweight_schedule(n);
            s.sort_unstable();
            let want: Vec<usize> = (0..n).map(|t| 2 * t + 1).collect();
            assert_eq!(s, want);
        }
    }

    #[test]
    fn trivial_ciphertexts_transpose_exactly() {
        let params = Params::desk16();
        let mut s = Sampler::new(params.sampler);
        let sk = SecretKey::generate(16, &mut s).unwrap();
        let q = params.q();
        let ring = params.ring(q.clone());
        let rows: Vec<RingElem> = (0..16).map(|_| s.uniform(&ring)).collect();
        let cts: Vec<Ciphertext> = rows.iter().map(|m| Ciphertext::trivial(m.clone(), 1.0)).collect();
        for keys in [
            TransposeKeySet::full(&sk, &params.aux_big, &q, &mut s),
            TransposeKeySet::lightweight(&sk, &params.aux_big, &q, &mut s),
        ] {
            let out = transpose(&cts, &keys).unwrap();
            for (j, c) in out.iter().enumerate() {
                let col: Vec<BigInt> = rows.iter().map(|r| r.coeffs()[j].clone()).collect();
                assert_eq!(decrypt(&sk, c), RingElem::new(&ring, col));
            }
        }
    }

    #[test]
    fn encrypted_matrix_transposes() {
        let params = Params::desk16();
        let mut s = Sampler::new(params.sampler);
        let sk = vec![SecretKey::generate(16, &mut s).unwrap()];
        let q = params.q();
        let m = RealMatrix::random(16, 16, 1.0, s.rng());
        // columns of the encrypted data are the rows of m
        let ct = transpose_format(&encrypt_matrix(&sk, &m.transpose(), Format::Rlwe, &params, &mut s).unwrap());
        for keys in [
            TransposeKeySet::full(&sk[0], &params.aux_big, &q, &mut s),
            TransposeKeySet::lightweight(&sk[0], &params.aux_big, &q, &mut s),
        ] {
            assert_eq!(keys.len(), if keys.is_lightweight() { 3 } else { 15 });
            let counters = Counters::default();
            let t = transpose_matrix_counted(&ct, &keys, &counters).unwrap();
            assert_eq!(t.orientation(), crate::formats::Orientation::Column);
            assert_eq!(counters.transposes(), 1);
            let back = decrypt_matrix(&sk, &t).unwrap();
            assert!(back.dist(&m) < 0.05, "{}", back.dist(&m));
            let twice = transpose_matrix(&t, &keys).unwrap();
            assert!(decrypt_matrix(&sk, &twice).unwrap().dist(&m) < 0.05);
        }
    }

    #[test]
    fn rejects_wrong_count_and_even_modulus() {
        let params = Params::desk16();
        let mut s = Sampler::new(params.sampler);
        let sk = SecretKey::generate(16, &mut s).unwrap();
        let keys = TransposeKeySet::full(&sk, &params.aux_big, &params.q(), &mut s);
        let ring = params.ring(params.q());
        let c = Ciphertext::trivial(RingElem::zero(&ring), 1.0);
        assert!(transpose(&vec![c; 3], &keys).is_err());
        let even = params.ring(BigInt::from(1u64 << 40));
        let c = Ciphertext::trivial(RingElem::zero(&even), 1.0);
        assert!(matches!(transpose(&vec![c; 16], &keys), Err(Error::NotInvertible(_))));
    }
}
