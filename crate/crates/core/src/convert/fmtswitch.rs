use num_bigint::BigInt;
use rayon::prelude::*;

use crate::arith::is_power_of_two;
use crate::ckks::{key_switch, Ciphertext, SecretKey, SwitchingKey};
use crate::error::{Error, Result};
use crate::modmm::Counters;
use crate::ring::{RingElem, RingParams, Sampler};

/// `afmt ∈ R_{Pq}^n` and `B = -afmt·(sk′_0 … sk′_{n-1}) + E + P·sk·I_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct FormatSwitchKey {
    pub a: Vec<RingElem>,
    /// `b[i][j]` is the entry in row `i`, column `j`.
    pub b: Vec<Vec<RingElem>>,
    aux: BigInt,
    q: BigInt,
}

impl FormatSwitchKey {
    pub fn from_parts(a: Vec<RingElem>, b: Vec<Vec<RingElem>>, aux: BigInt, q: BigInt) -> Result<Self> {
        let n = a.len();
        let pq = &aux * &q;
        if n == 0 || b.len() != n || b.iter().any(|row| row.len() != n) {
            return Err(Error::Dimension(format!("format switching key needs {n} x {n} b-entries")));
        }
        if a.iter().chain(b.iter().flatten()).any(|x| *x.modulus() != pq) {
            return Err(Error::ModulusMismatch("format switching key entries must live modulo P·q".into()));
        }
        Ok(FormatSwitchKey { a, b, aux, q })
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn aux(&self) -> &BigInt {
        &self.aux
    }

    pub fn q(&self) -> &BigInt {
        &self.q
    }

    /// `B + afmt·sk′ - P·sk·I`, the key error matrix when the keys are right.
    pub fn residual(&self, sk: &SecretKey, targets: &[SecretKey]) -> Vec<Vec<RingElem>> {
        let params = self.a[0].params();
        let psk = sk.as_ring(params).scalar_mul(&self.aux);
        (0..self.n())
            .map(|i| {
                (0..self.n())
                    .map(|j| {
                        let r = self.b[i][j].add(&self.a[i].mul_small(targets[j].coeffs()));
                        if i == j {
                            r.sub(&psk)
                        } else {
                            r
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

fn check_aux(aux: &BigInt, q: &BigInt) -> Result<()> {
    if aux < q {
        return Err(Error::InvalidParams(format!("auxiliary modulus {aux} is below q = {q}")));
    }
    Ok(())
}

/// Key for [`shared_s_to_shared_a`] from `sk` to the keys `targets`.
pub fn fmt_swk_gen(
    sk: &SecretKey,
    targets: &[SecretKey],
    aux: &BigInt,
    q: &BigInt,
    sampler: &mut Sampler,
) -> Result<FormatSwitchKey> {
    check_aux(aux, q)?;
    if targets.is_empty() {
        return Err(Error::Dimension("format switching needs at least one target key".into()));
    }
    let params = RingParams::new(sk.degree(), aux * q)?;
    let psk = sk.as_ring(&params).scalar_mul(aux);
    let a: Vec<RingElem> = targets.iter().map(|_| sampler.uniform(&params)).collect();
    let b = a
        .iter()
        .enumerate()
        .map(|(i, ai)| {
            targets
                .iter()
                .enumerate()
                .map(|(j, t)| {
                    let e = sampler.error(&params);
                    let bij = ai.mul_small(t.coeffs()).neg().add(&e);
                    if i == j {
                        bij.add(&psk)
                    } else {
                        bij
                    }
                })
                .collect()
        })
        .collect();
    Ok(FormatSwitchKey { a, b, aux: aux.clone(), q: q.clone() })
}

/// Ciphertexts sharing one `a`: `a·sk′_i + b_i ≈ m_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct SharedACiphertexts {
    pub a: RingElem,
    pub b: Vec<RingElem>,
    pub scale: f64,
}

impl SharedACiphertexts {
    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn ciphertext(&self, i: usize) -> Ciphertext {
        Ciphertext::new(self.a.clone(), self.b[i].clone(), self.scale)
    }

    pub fn decrypt(&self, keys: &[SecretKey]) -> Vec<RingElem> {
        self.b.iter().zip(keys).map(|(b, k)| self.a.mul_small(k.coeffs()).add(b)).collect()
    }
}

fn check_inputs(cts: &[Ciphertext], q: &BigInt) -> Result<()> {
    let first = cts.first().ok_or_else(|| Error::Dimension("no ciphertexts".into()))?;
    if cts.iter().any(|c| c.params() != first.params()) {
        return Err(Error::ParamMismatch("ciphertexts live in different rings".into()));
    }
    if first.modulus() != q {
        return Err(Error::ModulusMismatch(format!(
            "key converts modulo {q}, ciphertexts are modulo {}",
            first.modulus()
        )));
    }
    Ok(())
}

/// `⌊Σ_i x_i·y_i / P⌉` into `out`, with the `x_i` lifted to the key ring.
fn dot_round(xs: &[&RingElem], ys: &[&RingElem], aux: &BigInt, out: &RingParams) -> RingElem {
    let big = ys[0].params();
    let mut acc = RingElem::zero(big);
    for (x, y) in xs.iter().zip(ys) {
        if !x.is_zero() {
            acc = acc.add(&x.with_modulus(big).mul(y));
        }
    }
    acc.scale_round(&BigInt::from(1), aux, out)
}

/// Converts `n` ciphertexts under one key `sk` into a shared-a group under
/// the target keys of `key`.
pub fn shared_s_to_shared_a(key: &FormatSwitchKey, cts: &[Ciphertext]) -> Result<SharedACiphertexts> {
    shared_s_to_shared_a_counted(key, cts, &Counters::default())
}

pub fn shared_s_to_shared_a_counted(
    key: &FormatSwitchKey,
    cts: &[Ciphertext],
    counters: &Counters,
) -> Result<SharedACiphertexts> {
    if cts.len() != key.n() {
        return Err(Error::Dimension(format!("key converts {} ciphertexts, got {}", key.n(), cts.len())));
    }
    check_inputs(cts, &key.q)?;
    let out = cts[0].params().clone();
    let a_in: Vec<&RingElem> = cts.iter().map(|c| &c.a).collect();
    let a = dot_round(&a_in, &key.a.iter().collect::<Vec<_>>(), &key.aux, &out);
    let b = (0..key.n())
        .into_par_iter()
        .map(|j| {
            let col: Vec<&RingElem> = key.b.iter().map(|row| &row[j]).collect();
            cts[j].b.add(&dot_round(&a_in, &col, &key.aux, &out))
        })
        .collect();
    counters.add_ring_ops(key.n() * (key.n() + 1));
    Ok(SharedACiphertexts { a, b, scale: cts[0].scale })
}

/// Bound on the error [`shared_s_to_shared_a`] adds to each plaintext:
/// `(max ‖sk′_i‖₁ + 1) + N·n·B_e·q/P + B_e` with `B_e` the sampler's error bound.
pub fn shared_s_to_shared_a_bound(
    max_target_l1: i64,
    degree: usize,
    n: usize,
    error_bound: i64,
    q: &BigInt,
    aux: &BigInt,
) -> f64 {
    let ratio = crate::ckks::ratio(q, aux);
    (max_target_l1 + 1) as f64 + (degree * n) as f64 * error_bound as f64 * ratio + error_bound as f64
}

/// One level of the recursive key: `a ∈ R_{Pq}^2` and `B ∈ R_{Pq}^{2×2^ℓ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RecursiveLevel {
    pub a: [RingElem; 2],
    pub b: [Vec<RingElem>; 2],
}

/// Key for [`fast_shared_s_to_shared_a`]. `schedule[ℓ]` lists the keys of
/// level `ℓ`; level 0 is the input key and the last level the target keys.
#[derive(Clone, Debug, PartialEq)]
pub struct RecursiveFormatKey {
    pub levels: Vec<RecursiveLevel>,
    pub schedule: Vec<Vec<SecretKey>>,
    aux: BigInt,
    q: BigInt,
}

impl RecursiveFormatKey {
    pub fn n(&self) -> usize {
        1 << self.levels.len()
    }

    pub fn aux(&self) -> &BigInt {
        &self.aux
    }

    pub fn q(&self) -> &BigInt {
        &self.q
    }

    /// Error matrix of level `ℓ ≥ 1`, recomputed from the key schedule.
    pub fn level_residual(&self, level: usize) -> Vec<Vec<RingElem>> {
        let lv = &self.levels[level - 1];
        let half = 1 << (level - 1);
        let params = lv.a[0].params();
        (0..2)
            .map(|t| {
                (0..2 * half)
                    .map(|j| {
                        let r = lv.b[t][j].add(&lv.a[t].mul_small(self.schedule[level][j].coeffs()));
                        if j / half == t {
                            r.sub(&self.schedule[level - 1][j % half].as_ring(params).scalar_mul(&self.aux))
                        } else {
                            r
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Recursive key from `sk` to `targets` (a power-of-two count). Intermediate
/// levels use fresh keys drawn from `sampler`.
pub fn recursive_key_gen(
    sk: &SecretKey,
    targets: &[SecretKey],
    aux: &BigInt,
    q: &BigInt,
    sampler: &mut Sampler,
) -> Result<RecursiveFormatKey> {
    check_aux(aux, q)?;
    let n = targets.len();
    if n < 2 || !is_power_of_two(n) {
        return Err(Error::InvalidParams(format!("recursive conversion needs a power-of-two count >= 2, got {n}")));
    }
    let depth = n.trailing_zeros() as usize;
    let degree = sk.degree();
    let mut schedule = vec![vec![sk.clone()]];
    for level in 1..depth {
        let keys = (0..1 << level).map(|_| SecretKey::generate(degree, sampler)).collect::<Result<Vec<_>>>()?;
        schedule.push(keys);
    }
    schedule.push(targets.to_vec());

    let params = RingParams::new(degree, aux * q)?;
    let mut levels = Vec::with_capacity(depth);
    for level in 1..=depth {
        let half = 1 << (level - 1);
        let a = [sampler.uniform(&params), sampler.uniform(&params)];
        let mut rows: [Vec<RingElem>; 2] = [Vec::new(), Vec::new()];
        for (t, row) in rows.iter_mut().enumerate() {
            for j in 0..2 * half {
                let mut e = a[t].mul_small(schedule[level][j].coeffs()).neg().add(&sampler.error(&params));
                if j / half == t {
                    e = e.add(&schedule[level - 1][j % half].as_ring(&params).scalar_mul(aux));
                }
                row.push(e);
            }
        }
        levels.push(RecursiveLevel { a, b: rows });
    }
    Ok(RecursiveFormatKey { levels, schedule, aux: aux.clone(), q: q.clone() })
}

/// Shared-s to shared-a conversion merging pairs of `a`-parts level by level.
pub fn fast_shared_s_to_shared_a(key: &RecursiveFormatKey, cts: &[Ciphertext]) -> Result<SharedACiphertexts> {
    fast_shared_s_to_shared_a_counted(key, cts, &Counters::default())
}

pub fn fast_shared_s_to_shared_a_counted(
    key: &RecursiveFormatKey,
    cts: &[Ciphertext],
    counters: &Counters,
) -> Result<SharedACiphertexts> {
    if cts.len() != key.n() {
        return Err(Error::Dimension(format!("key converts {} ciphertexts, got {}", key.n(), cts.len())));
    }
    check_inputs(cts, &key.q)?;
    let out = cts[0].params().clone();
    let mut a: Vec<RingElem> = cts.iter().map(|c| c.a.clone()).collect();
    let mut b: Vec<RingElem> = cts.iter().map(|c| c.b.clone()).collect();
    for (idx, lv) in key.levels.iter().enumerate() {
        let width = 1 << (idx + 1);
        let groups = a.len() / 2;
        let ka = [&lv.a[0], &lv.a[1]];
        let step: Vec<(RingElem, Vec<RingElem>)> = (0..groups)
            .into_par_iter()
            .map(|i| {
                let pair = [&a[2 * i], &a[2 * i + 1]];
                let na = dot_round(&pair, &ka, &key.aux, &out);
                let nb = (0..width)
                    .map(|j| b[i * width + j].add(&dot_round(&pair, &[&lv.b[0][j], &lv.b[1][j]], &key.aux, &out)))
                    .collect();
                (na, nb)
            })
            .collect();
        counters.add_ring_ops(groups * (2 + 2 * width));
        a = Vec::with_capacity(groups);
        b = Vec::with_capacity(cts.len());
        for (na, nb) in step {
            a.push(na);
            b.extend(nb);
        }
    }
    Ok(SharedACiphertexts { a: a.remove(0), b, scale: cts[0].scale })
}

/// One key switch per ciphertext with `keys[i] = swk(sk′_i → sk)`.
pub fn shared_a_to_shared_s(keys: &[SwitchingKey], cts: &SharedACiphertexts) -> Result<Vec<Ciphertext>> {
    if keys.len() < cts.len() {
        return Err(Error::MissingKey(format!("{} keys for {} ciphertexts", keys.len(), cts.len())));
    }
    (0..cts.len()).into_par_iter().map(|i| key_switch(&keys[i], &cts.ciphertext(i))).collect()
}

/// `swk(sk′_i → sk)` for every target.
pub fn back_switch_keys(
    sk: &SecretKey,
    targets: &[SecretKey],
    aux: &BigInt,
    q: &BigInt,
    sampler: &mut Sampler,
) -> Vec<SwitchingKey> {
    targets.iter().map(|t| crate::ckks::swk_gen(t, sk, aux, q, sampler)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ckks::{decrypt, encrypt, max_diff, Params};
    use crate::ring::SamplerConfig;

    fn setup(
        degree: usize,
        n: usize,
        sigma: f64,
    ) -> (Params, Sampler, SecretKey, Vec<SecretKey>, Vec<RingElem>, Vec<Ciphertext>) {
        let mut params = Params::desk16();
        params.degree = degree;
        params.sampler = SamplerConfig::new(8, sigma, 11 + n as u64);
        let mut s = Sampler::new(params.sampler);
        let sk = SecretKey::generate(degree, &mut s).unwrap();
        let targets: Vec<SecretKey> = (0..n).map(|_| SecretKey::generate(degree, &mut s).unwrap()).collect();
        let ring = params.ring(params.q());
        let msgs: Vec<RingElem> = (0..n)
            .map(|_| RingElem::from_i64(&ring, &s.error_coeffs(degree)).scalar_mul(&BigInt::from(1000)))
            .collect();
        let cts = msgs.iter().map(|m| encrypt(&sk, m, 1.0, &mut s)).collect();
        (params, s, sk, targets, msgs, cts)
    }

    fn max_err(got: &[RingElem], want: &[RingElem]) -> f64 {
        got.iter().zip(want).map(|(g, w)| max_diff(g, w)).fold(0.0, f64::max)
    }

    #[test]
    fn key_identity_holds() {
        let (params, mut s, sk, targets, _, _) = setup(16, 3, 3.2);
        let key = fmt_swk_gen(&sk, &targets, &params.aux_big, &params.q(), &mut s).unwrap();
        let bound = BigInt::from(params.error_bound());
        for row in key.residual(&sk, &targets) {
            assert!(row.iter().all(|e| e.max_abs() <= bound));
        }
        let (_, mut s, sk, targets, _, _) = setup(16, 3, 0.0);
        let key = fmt_swk_gen(&sk, &targets, &params.aux_big, &params.q(), &mut s).unwrap();
        assert!(key.residual(&sk, &targets).iter().flatten().all(RingElem::is_zero));
    }

    #[test]
    fn single_ciphertext_is_a_key_switch() {
        let (params, mut s, sk, targets, msgs, cts) = setup(16, 1, 3.2);
        let key = fmt_swk_gen(&sk, &targets, &params.aux_big, &params.q(), &mut s).unwrap();
        let out = shared_s_to_shared_a(&key, &cts).unwrap();
        let swk =
            SwitchingKey::from_parts(key.a[0].clone(), key.b[0][0].clone(), params.aux_big.clone(), params.q(), 0, 0)
                .unwrap();
        assert_eq!(out.ciphertext(0), key_switch(&swk, &cts[0]).unwrap());
        assert!(max_err(&out.decrypt(&targets), &msgs) < 100.0);
    }

    #[test]
    fn converts_within_bound() {
        let (params, mut s, sk, targets, msgs, cts) = setup(64, 4, 3.2);
        let key = fmt_swk_gen(&sk, &targets, &params.aux_big, &params.q(), &mut s).unwrap();
        let out = shared_s_to_shared_a(&key, &cts).unwrap();
        let fresh: Vec<RingElem> = cts.iter().map(|c| decrypt(&sk, c)).collect();
        let l1 = targets.iter().map(SecretKey::l1).max().unwrap();
        let bound = shared_s_to_shared_a_bound(l1, 64, 4, params.error_bound(), &params.q(), &params.aux_big);
        assert!(max_err(&out.decrypt(&targets), &fresh) <= bound);
        assert!(max_err(&out.decrypt(&targets), &msgs) <= bound + params.error_bound() as f64);
    }

    #[test]
    fn zero_ciphertexts_stay_near_zero() {
        let (params, mut s, sk, targets, _, _) = setup(16, 2, 3.2);
        let key = fmt_swk_gen(&sk, &targets, &params.aux_big, &params.q(), &mut s).unwrap();
        let ring = params.ring(params.q());
        let zero = Ciphertext::trivial(RingElem::zero(&ring), 1.0);
        let out = shared_s_to_shared_a(&key, &[zero.clone(), zero]).unwrap();
        assert!(out.decrypt(&targets).iter().all(RingElem::is_zero));
        assert!(shared_s_to_shared_a(&key, &cts_of(&out)).is_err());
    }

    fn cts_of(x: &SharedACiphertexts) -> Vec<Ciphertext> {
        vec![x.ciphertext(0)]
    }

    #[test]
    fn recursive_levels_hold_and_convert() {
        for (degree, n) in [(16, 2), (64, 8)] {
            let (params, mut s, sk, targets, msgs, cts) = setup(degree, n, 3.2);
            let key = recursive_key_gen(&sk, &targets, &params.aux_big, &params.q(), &mut s).unwrap();
            assert_eq!(key.levels.len(), n.trailing_zeros() as usize);
            let bound = BigInt::from(params.error_bound());
            for level in 1..=key.levels.len() {
                assert!(key.level_residual(level).iter().flatten().all(|e| e.max_abs() <= bound));
            }
            let out = fast_shared_s_to_shared_a(&key, &cts).unwrap();
            let l1 = key.schedule.iter().flatten().map(SecretKey::l1).max().unwrap();
            let per_level =
                shared_s_to_shared_a_bound(l1, degree, 2, params.error_bound(), &params.q(), &params.aux_big);
            let err = max_err(&out.decrypt(&targets), &msgs);
            assert!(err <= per_level * key.levels.len() as f64 + params.error_bound() as f64, "{err}");
        }
    }

    #[test]
    fn recursive_pair_matches_direct_conversion() {
        let (params, mut s, sk, targets, _, cts) = setup(16, 2, 3.2);
        let fk = fmt_swk_gen(&sk, &targets, &params.aux_big, &params.q(), &mut s).unwrap();
        let rk = recursive_key_gen(&sk, &targets, &params.aux_big, &params.q(), &mut s).unwrap();
        let x = shared_s_to_shared_a(&fk, &cts).unwrap().decrypt(&targets);
        let y = fast_shared_s_to_shared_a(&rk, &cts).unwrap().decrypt(&targets);
        let l1 = targets.iter().map(SecretKey::l1).max().unwrap();
        let b = shared_s_to_shared_a_bound(l1, 16, 2, params.error_bound(), &params.q(), &params.aux_big);
        assert!(max_err(&x, &y) <= 2.0 * b);
        assert!(recursive_key_gen(&sk, &targets[..1], &params.aux_big, &params.q(), &mut s).is_err());
    }

    #[test]
    fn round_trip_back_to_shared_s() {
        let (params, mut s, sk, targets, msgs, cts) = setup(16, 4, 3.2);
        let key = recursive_key_gen(&sk, &targets, &params.aux_big, &params.q(), &mut s).unwrap();
        let back_keys = back_switch_keys(&sk, &targets, &params.aux_big, &params.q(), &mut s);
        let shared = fast_shared_s_to_shared_a(&key, &cts).unwrap();
        let back = shared_a_to_shared_s(&back_keys, &shared).unwrap();
        let got: Vec<RingElem> = back.iter().map(|c| decrypt(&sk, c)).collect();
        assert!(max_err(&got, &msgs) < 200.0);
        assert!(shared_a_to_shared_s(&back_keys[..2], &shared).is_err());
    }

    #[test]
    fn rejects_small_aux() {
        let (params, mut s, sk, targets, _, _) = setup(16, 2, 3.2);
        assert!(fmt_swk_gen(&sk, &targets, &BigInt::from(3), &params.q(), &mut s).is_err());
    }
}
