use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{check_column, right_multiply, PlainOperand};
use crate::ckks::{decrypt, key_switch, key_switch_bound, max_diff, module_key_switch, swk_gen_elem};
use crate::ckks::{Ciphertext, MlweCiphertext, SecretKey, SwitchingKey};
use crate::error::{Error, Result};
use crate::formats::{build_secret_matrix, Format, FormatTag, MatrixCT, SecretMatrix};
use crate::modmm::{Backend, ModMatrix, Part};
use crate::ring::{RingElem, RingParams, Sampler};

/// `(A·U₀, B·U₀)` before rescaling. Under a CRT backend the ciphertext is
/// first moved to the CRT modulus.
fn cp_product(ct: &MatrixCT, u: &PlainOperand, backend: &Backend) -> Result<MatrixCT> {
    check_column(ct)?;
    let (_, d2) = ct.dims();
    if u.shape().0 != d2 {
        return Err(Error::Dimension(format!("ciphertext has {d2} columns, U has {} rows", u.shape().0)));
    }
    let work = if backend.switches_modulus() {
        let basis = backend.crt_basis_for(ct.modulus(), d2)?;
        ct.mod_switch(basis.product())
    } else {
        ct.clone()
    };
    let (a, b) = right_multiply(&work, &u.encoded_mod(work.modulus()), backend)?;
    let mut out = work.with_parts(a, b)?;
    out.scale = work.scale * u.scale;
    Ok(out)
}

/// CP-MM for the RLWE, shared-a and MLWE formats: two backend products, of
/// dimensions `N × d₂ × d₃` and `d₁ × d₂ × d₃`, then a rescale to `target`.
pub fn cpmm(ct: &MatrixCT, u: &PlainOperand, target: &BigInt, backend: &Backend) -> Result<MatrixCT> {
    if !matches!(ct.format(), Format::Rlwe | Format::SharedA | Format::Mlwe) {
        return Err(Error::InvalidParams(format!("cpmm takes rlwe, shared-a or mlwe input, got {}", ct.format())));
    }
    cp_product(ct, u, backend)?.rescale(target)
}

/// CP-MM in the shared-s format, where both products are `d₁ × d₂ × d₃`.
pub fn cpmm_shared_s(ct: &MatrixCT, u: &PlainOperand, target: &BigInt, backend: &Backend) -> Result<MatrixCT> {
    if ct.format() != Format::SharedS {
        return Err(Error::InvalidParams(format!("cpmm_shared_s takes shared-s input, got {}", ct.format())));
    }
    let (d1, _) = ct.dims();
    if d1 % ct.degree != 0 {
        return Err(Error::Dimension(format!("N = {} does not divide d1 = {d1}", ct.degree)));
    }
    cp_product(ct, u, backend)?.rescale(target)
}

/// Whether [`cpmm_precomp_to_sk`] rescales before or after switching away
/// from `S·U`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SwitchOrder {
    #[default]
    RescaleFirst,
    SwitchFirst,
}

/// Switching keys from the columns of `S·U` to one target key, grouped by
/// output column: a single key in the shared-a case, `N/d₁` module keys in
/// the MLWE case.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecomputedKeys {
    pub source_format: Format,
    pub output_format: Format,
    pub columns: Vec<Vec<SwitchingKey>>,
    pub u_fingerprint: u64,
    pub secret_fingerprint: u64,
    pub rows: usize,
    pub degree: usize,
}

impl PrecomputedKeys {
    /// Modulus at which the keys switch.
    pub fn q(&self) -> &BigInt {
        self.columns[0][0].q()
    }

    pub fn target(&self) -> u64 {
        self.columns[0][0].target
    }

    pub fn len(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn keys_fingerprint(keys: &[SecretKey]) -> u64 {
    let mut h = Sha256::new();
    for k in keys {
        h.update(k.fingerprint().to_le_bytes());
    }
    u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
}

fn check_precomp_format(format: Format) -> Result<()> {
    match format {
        Format::StructASharedA | Format::StructAMlwe => Ok(()),
        f => Err(Error::InvalidParams(format!(
            "precomputed CP-MM needs a structured-A shared-a or MLWE format, got {f}"
        ))),
    }
}

/// The secret `S·U₀` of the product, laid out in the format of `s`. Its
/// entries are exact integers.
pub fn secret_times_plain(s: &SecretMatrix, u: &PlainOperand) -> Result<SecretMatrix> {
    check_precomp_format(s.format)?;
    let (d2, d3) = u.shape();
    if s.cols != d2 {
        return Err(Error::Dimension(format!("secret has {} columns, U has {d2} rows", s.cols)));
    }
    let n = s.degree;
    let r = s.keys.len() / s.cols;
    let columns: Vec<Vec<i64>> =
        (0..d2).map(|i| s.keys[i * r..(i + 1) * r].iter().flat_map(|k| k.coeffs().iter().copied()).collect()).collect();
    let mut keys = Vec::with_capacity(d3 * r);
    for j in 0..d3 {
        let mut w = vec![0i128; n];
        for (i, col) in columns.iter().enumerate() {
            let c = u.encoded.get(i, j).to_i128().ok_or_else(|| Error::Overflow("U entry exceeds 128 bits".into()))?;
            if c == 0 {
                continue;
            }
            for (acc, &x) in w.iter_mut().zip(col) {
                *acc += c * x as i128;
            }
        }
        let w: Vec<i64> = w
            .into_iter()
            .map(|x| i64::try_from(x).map_err(|_| Error::Overflow("S·U entry exceeds 64 bits".into())))
            .collect::<Result<_>>()?;
        let kd = w.len() / r;
        keys.extend(w.chunks(kd).map(|c| SecretKey::from_coeffs(c.to_vec())));
    }
    build_secret_matrix(&keys, s.format, s.rows, d3, n, s.entries.modulus())
}

/// Keys switching the columns of `S·U` to `target`, for ciphertexts modulo
/// `q`. The first key is checked on a probe before returning.
pub fn precompute_cpmm_keys(
    s: &SecretMatrix,
    u: &PlainOperand,
    target: &SecretKey,
    aux: &BigInt,
    q: &BigInt,
    sampler: &mut Sampler,
) -> Result<PrecomputedKeys> {
    if aux < q {
        return Err(Error::Overflow(format!("auxiliary modulus {aux} is below q = {q}")));
    }
    let su = secret_times_plain(s, u)?;
    let (output_format, key_degree) = match s.format {
        Format::StructASharedA if s.rows == s.degree => (Format::Rlwe, s.degree),
        Format::StructASharedA => (Format::SharedS, s.degree),
        _ => (Format::Rlwe, s.rows),
    };
    if target.degree() != key_degree {
        return Err(Error::Dimension(format!("target key must have degree {key_degree}, got {}", target.degree())));
    }
    let big = RingParams::new(key_degree, aux * q)?;
    let r = su.keys.len() / su.cols;
    let columns: Vec<Vec<SwitchingKey>> = su
        .keys
        .chunks(r)
        .map(|group| {
            group.iter().map(|w| swk_gen_elem(&w.as_ring(&big), w.fingerprint(), target, aux, q, sampler)).collect()
        })
        .collect();

    // probe: a fresh encryption of an error-sized message under the first column key
    let ring = RingParams::new(key_degree, q.clone())?;
    let from = su.keys[0].as_ring(&ring);
    let a = sampler.uniform(&ring);
    let m = sampler.error(&ring);
    let probe = Ciphertext::new(a.clone(), m.sub(&a.mul(&from)), 1.0);
    let got = decrypt(target, &key_switch(&columns[0][0], &probe)?);
    let err_bound = sampler.config().error_bound();
    let tol = key_switch_bound(target.l1(), err_bound, key_degree, q, aux) + 1.0;
    if max_diff(&got, &m) > tol {
        return Err(Error::Overflow("precomputed key failed its probe".into()));
    }
    Ok(PrecomputedKeys {
        source_format: s.format,
        output_format,
        columns,
        u_fingerprint: u.fingerprint(),
        secret_fingerprint: keys_fingerprint(&s.keys),
        rows: s.rows,
        degree: s.degree,
    })
}

fn precomp_product(ct: &MatrixCT, u: &PlainOperand, pk: &PrecomputedKeys, backend: &Backend) -> Result<MatrixCT> {
    check_precomp_format(ct.format())?;
    check_column(ct)?;
    if pk.source_format != ct.format() || pk.rows != ct.dims().0 || pk.degree != ct.degree {
        return Err(Error::ParamMismatch(format!("keys were made for {} with {} rows", pk.source_format, pk.rows)));
    }
    if pk.u_fingerprint != u.fingerprint() || pk.columns.len() != u.shape().1 {
        return Err(Error::ParamMismatch("precomputed keys belong to a different U".into()));
    }
    let (_, d2) = ct.dims();
    if u.shape().0 != d2 {
        return Err(Error::Dimension(format!("ciphertext has {d2} columns, U has {} rows", u.shape().0)));
    }
    // a CRT backend lifts the product itself, so the a-part stays at q
    let b = backend.mm(&ct.b, &u.encoded_mod(ct.modulus()), Part::B)?;
    let mut out = MatrixCT::new(ct.tag, ct.a.clone(), b, ct.degree, ct.scale * u.scale)?;
    out.logical_rows = ct.logical_rows;
    Ok(out)
}

/// CP-MM with precomputation: one backend product `B·U₀`, the compact
/// a-part untouched, then a rescale of both. The result is a structured-A
/// encryption of `M·U` under `S·U₀`.
pub fn cpmm_precomp(
    ct: &MatrixCT,
    u: &PlainOperand,
    pk: &PrecomputedKeys,
    target: &BigInt,
    backend: &Backend,
) -> Result<MatrixCT> {
    precomp_product(ct, u, pk, backend)?.rescale(target)
}

/// [`cpmm_precomp`] followed by the switch to the target key; shared-a input
/// gives shared-s (RLWE when `d₁ = N`) and MLWE input gives RLWE at degree `d₁`.
pub fn cpmm_precomp_to_sk(
    ct: &MatrixCT,
    u: &PlainOperand,
    pk: &PrecomputedKeys,
    target: &BigInt,
    order: SwitchOrder,
    backend: &Backend,
) -> Result<MatrixCT> {
    let prod = precomp_product(ct, u, pk, backend)?;
    match order {
        SwitchOrder::RescaleFirst => switch_columns(&prod.rescale(target)?, pk, backend),
        SwitchOrder::SwitchFirst => switch_columns(&prod, pk, backend)?.rescale(target),
    }
}

fn switch_columns(ct: &MatrixCT, pk: &PrecomputedKeys, backend: &Backend) -> Result<MatrixCT> {
    if pk.q() != ct.modulus() {
        return Err(Error::ModulusMismatch(format!(
            "keys switch modulo {}, ciphertext is modulo {}",
            pk.q(),
            ct.modulus()
        )));
    }
    let (d1, d3) = ct.dims();
    let q = ct.modulus().clone();
    backend.counters().add_key_switch(pk.len() / pk.columns[0].len() * ct.a.cols().max(1));
    let (degree, cols): (usize, Vec<Result<(Vec<BigInt>, Vec<BigInt>)>>) = match ct.format() {
        Format::StructASharedA => {
            let n = ct.degree;
            let ring = RingParams::new(n, q.clone())?;
            let gens: Vec<RingElem> = (0..ct.a.cols()).map(|i| RingElem::new(&ring, ct.a.column(i))).collect();
            let cols = (0..d3)
                .into_par_iter()
                .map(|j| {
                    let b = ct.b.column(j);
                    let (mut a_col, mut b_col) = (Vec::with_capacity(d1), Vec::with_capacity(d1));
                    for (i, g) in gens.iter().enumerate() {
                        let c =
                            Ciphertext::new(g.clone(), RingElem::new(&ring, b[i * n..(i + 1) * n].to_vec()), ct.scale);
                        let s = key_switch(&pk.columns[j][0], &c)?;
                        a_col.extend(s.a.into_coeffs());
                        b_col.extend(s.b.into_coeffs());
                    }
                    Ok((a_col, b_col))
                })
                .collect();
            (n, cols)
        }
        _ => {
            let ring = RingParams::new(d1, q.clone())?;
            let gens: Vec<RingElem> = (0..ct.a.cols()).map(|l| RingElem::new(&ring, ct.a.column(l))).collect();
            let cols = (0..d3)
                .into_par_iter()
                .map(|j| {
                    let m =
                        MlweCiphertext { a: gens.clone(), b: RingElem::new(&ring, ct.b.column(j)), scale: ct.scale };
                    let s = module_key_switch(&pk.columns[j], &m)?;
                    Ok((s.a.into_coeffs(), s.b.into_coeffs()))
                })
                .collect();
            (d1, cols)
        }
    };
    let cols: Vec<(Vec<BigInt>, Vec<BigInt>)> = cols.into_iter().collect::<Result<_>>()?;
    let a = ModMatrix::from_columns(d1, q.clone(), &cols.iter().map(|c| c.0.clone()).collect::<Vec<_>>());
    let b = ModMatrix::from_columns(d1, q, &cols.into_iter().map(|c| c.1).collect::<Vec<_>>());
    let mut out = MatrixCT::new(FormatTag::column(pk.output_format), a, b, degree, ct.scale)?;
    out.logical_rows = ct.logical_rows;
    Ok(out)
}

/// A one-column structured-A shared-a ciphertext read as a shared-s vector
/// under the single column key.
pub fn precomp_vector_as_shared_s(ct: &MatrixCT) -> Result<MatrixCT> {
    let (d1, d3) = ct.dims();
    if ct.format() != Format::StructASharedA || d3 != 1 {
        return Err(Error::InvalidParams(format!(
            "expected a structured-A shared-a vector, got {} {:?}",
            ct.tag,
            ct.dims()
        )));
    }
    let a_col: Vec<BigInt> = (0..ct.a.cols()).flat_map(|i| ct.a.column(i)).collect();
    let a = ModMatrix::from_columns(d1, ct.modulus().clone(), &[a_col]);
    let format = if d1 == ct.degree { Format::Rlwe } else { Format::SharedS };
    let mut out = MatrixCT::new(FormatTag::column(format), a, ct.b.clone(), ct.degree, ct.scale)?;
    out.logical_rows = ct.logical_rows;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ckks::Params;
    use crate::formats::{decrypt_matrix, encode_matrix, encrypt_matrix, verify_format};
    use crate::linalg::precision_bits;
    use crate::modmm::BackendKind;
    use crate::real::RealMatrix;

    fn keys_for(format: Format, rows: usize, cols: usize, n: usize, s: &mut Sampler) -> Vec<SecretKey> {
        let kd = format.key_degree(rows, n);
        (0..format.key_count(rows, cols, n)).map(|_| SecretKey::generate(kd, s).unwrap()).collect()
    }

    #[test]
    fn trivial_identity_operand() {
        let params = Params::desk16();
        let q = params.q();
        let m = RealMatrix::random(16, 16, 1.0, &mut rand::thread_rng());
        let b = encode_matrix(&m, params.delta, &q).unwrap();
        let ct = MatrixCT::new(
            FormatTag::column(Format::Rlwe),
            ModMatrix::zeros(16, 16, q.clone()),
            b.clone(),
            16,
            params.delta,
        )
        .unwrap();
        let u = PlainOperand::encode(&RealMatrix::identity(16), params.delta, &q).unwrap();
        let out = cpmm(&ct, &u, &params.q_low(), &Backend::new(BackendKind::Naive)).unwrap();
        assert!(out.a.is_zero());
        // ⌊b·Δ/q₁⌉ keeps b up to the ratio Δ/q₁ < 1
        let back = out.b.to_f64();
        for (x, y) in back.iter().zip(b.to_f64()) {
            assert!((x - y * params.delta / 1031.0).abs() <= 0.5 + 1e-9);
        }
    }

    #[test]
    fn random_rlwe_product_all_backends() {
        let params = Params::desk64();
        let mut s = Sampler::new(params.sampler);
        let sk = keys_for(Format::Rlwe, 64, 64, 64, &mut s);
        let m = RealMatrix::random(64, 64, 1.0, s.rng());
        let uv = RealMatrix::random(64, 64, 1.0, s.rng());
        let exact = m.matmul(&uv).unwrap();
        let ct = encrypt_matrix(&sk, &m, Format::Rlwe, &params, &mut s).unwrap();
        let u = PlainOperand::encode(&uv, params.delta, &params.q()).unwrap();
        let floor = params.log_delta() - 6.0 - 4.0;
        for kind in [BackendKind::Naive, BackendKind::S1, BackendKind::S2, BackendKind::S3] {
            let backend = Backend::new(kind);
            let out = cpmm(&ct, &u, &params.q_low(), &backend).unwrap();
            assert_eq!(backend.counters().mod_calls(), 2, "{kind}");
            assert_eq!(out.modulus(), &params.q_low());
            let bits = precision_bits(&exact, &decrypt_matrix(&sk, &out).unwrap());
            assert!(bits >= floor && bits > 4.0, "{kind}: {bits}");
        }
    }

    #[test]
    fn shared_a_dimensions() {
        let params = Params::desk64();
        let mut s = Sampler::new(params.sampler);
        let sk = keys_for(Format::SharedA, 128, 32, 64, &mut s);
        let m = RealMatrix::random(128, 32, 1.0, s.rng());
        let uv = RealMatrix::random(32, 8, 1.0, s.rng());
        let ct = encrypt_matrix(&sk, &m, Format::SharedA, &params, &mut s).unwrap();
        let u = PlainOperand::encode(&uv, params.delta, &params.q()).unwrap();
        let out = cpmm(&ct, &u, &params.q_low(), &Backend::new(BackendKind::S1)).unwrap();
        assert_eq!(out.a.shape(), (64, 8));
        assert_eq!(out.b.shape(), (128, 8));
        let got = decrypt_matrix(&sk, &out).unwrap();
        assert!(got.dist(&m.matmul(&uv).unwrap()) < 0.2);
        assert!(cpmm_shared_s(&ct, &u, &params.q_low(), &Backend::new(BackendKind::S1)).is_err());
        let bad = PlainOperand::encode(&RealMatrix::zeros(31, 8), params.delta, &params.q()).unwrap();
        assert!(matches!(cpmm(&ct, &bad, &params.q_low(), &Backend::new(BackendKind::S1)), Err(Error::Dimension(_))));
    }

    #[test]
    fn shared_s_and_mlwe() {
        let params = Params::desk16();
        let mut s = Sampler::new(params.sampler);
        for (format, rows) in [(Format::SharedS, 32), (Format::Mlwe, 8)] {
            let sk = keys_for(format, rows, 16, 16, &mut s);
            let m = RealMatrix::random(rows, 16, 1.0, s.rng());
            let uv = RealMatrix::random(16, 4, 1.0, s.rng());
            let ct = encrypt_matrix(&sk, &m, format, &params, &mut s).unwrap();
            let u = PlainOperand::encode(&uv, params.delta, &params.q()).unwrap();
            let backend = Backend::new(BackendKind::S3);
            let out = if format == Format::SharedS {
                cpmm_shared_s(&ct, &u, &params.q_low(), &backend).unwrap()
            } else {
                cpmm(&ct, &u, &params.q_low(), &backend).unwrap()
            };
            assert_eq!(backend.counters().mod_calls(), 2);
            if format == Format::SharedS {
                assert_eq!(out.a.shape(), (rows, 4));
            }
            let got = decrypt_matrix(&sk, &out).unwrap();
            assert!(got.dist(&m.matmul(&uv).unwrap()) < 0.1, "{format}: {}", got.dist(&m.matmul(&uv).unwrap()));
        }
    }

    struct Precomp {
        params: Params,
        s: Sampler,
        keys: Vec<SecretKey>,
        secret: SecretMatrix,
        m: RealMatrix,
        ct: MatrixCT,
    }

    fn precomp_setup(format: Format, d1: usize, d2: usize) -> Precomp {
        let params = Params::desk64();
        let mut s = Sampler::new(params.sampler);
        let keys = keys_for(format, d1, d2, 64, &mut s);
        let secret = build_secret_matrix(&keys, format, d1, d2, 64, &params.q()).unwrap();
        let m = RealMatrix::random(d1, d2, 1.0, s.rng());
        let ct = encrypt_matrix(&keys, &m, format, &params, &mut s).unwrap();
        Precomp { params, s, keys, secret, m, ct }
    }

    #[test]
    fn precomp_single_call_and_orders() {
        let mut p = precomp_setup(Format::StructASharedA, 128, 64);
        let uv = RealMatrix::random(64, 32, 1.0, p.s.rng());
        let exact = p.m.matmul(&uv).unwrap();
        let q = p.params.q();
        let u = PlainOperand::encode(&uv, p.params.delta, &q).unwrap();
        let su = secret_times_plain(&p.secret, &u).unwrap();
        let sk = SecretKey::generate(64, &mut p.s).unwrap();
        let aux = &p.params.aux_big;
        let pk_high = precompute_cpmm_keys(&p.secret, &u, &sk, aux, &q, &mut p.s).unwrap();
        let pk_low = precompute_cpmm_keys(&p.secret, &u, &sk, aux, &p.params.q_low(), &mut p.s).unwrap();
        assert_eq!(pk_high.len(), 32);
        assert_eq!(pk_high.output_format, Format::SharedS);

        let backend = Backend::new(BackendKind::S2);
        let out = cpmm_precomp(&p.ct, &u, &pk_high, &p.params.q_low(), &backend).unwrap();
        assert_eq!(backend.counters().mod_calls(), 1);
        assert_eq!(out.a.shape(), (64, 2));
        // under S·U the rescaled a-part carries a rounding error times S·U
        let raw = precomp_product(&p.ct, &u, &pk_high, &backend).unwrap();
        let tol = (p.params.error_bound() * 64) as f64 * p.params.delta;
        assert!(verify_format(&su, &raw, &exact, tol));

        let switched =
            cpmm_precomp_to_sk(&p.ct, &u, &pk_high, &p.params.q_low(), SwitchOrder::SwitchFirst, &backend).unwrap();
        assert_eq!(switched.format(), Format::SharedS);
        let got = decrypt_matrix(std::slice::from_ref(&sk), &switched).unwrap();
        assert!(precision_bits(&exact, &got) > 6.0, "{}", precision_bits(&exact, &got));

        let early =
            cpmm_precomp_to_sk(&p.ct, &u, &pk_low, &p.params.q_low(), SwitchOrder::RescaleFirst, &backend).unwrap();
        assert_eq!(early.modulus(), &p.params.q_low());
        assert!(
            cpmm_precomp_to_sk(&p.ct, &u, &pk_high, &p.params.q_low(), SwitchOrder::RescaleFirst, &backend).is_err()
        );
    }

    #[test]
    fn precomp_trivial_identity_is_exact_in_both_orders() {
        let mut p = precomp_setup(Format::StructASharedA, 64, 64);
        let q = p.params.q();
        let u = PlainOperand::encode(&RealMatrix::identity(64), p.params.delta, &q).unwrap();
        let b = encode_matrix(&p.m, p.params.delta, &q).unwrap();
        let ct = p.ct.with_parts(ModMatrix::zeros(64, 1, q.clone()), b).unwrap();
        let sk = SecretKey::generate(64, &mut p.s).unwrap();
        for (order, kq) in [(SwitchOrder::RescaleFirst, p.params.q_low()), (SwitchOrder::SwitchFirst, q.clone())] {
            let pk = precompute_cpmm_keys(&p.secret, &u, &sk, &p.params.aux_big, &kq, &mut p.s).unwrap();
            assert_eq!(pk.output_format, Format::Rlwe);
            let out =
                cpmm_precomp_to_sk(&ct, &u, &pk, &p.params.q_low(), order, &Backend::new(BackendKind::Naive)).unwrap();
            let got = decrypt_matrix(std::slice::from_ref(&sk), &out).unwrap();
            assert!(got.dist(&p.m) < 2.0 / p.params.delta, "{order:?}");
        }
    }

    #[test]
    fn precomp_mlwe_switches_to_small_degree() {
        let mut p = precomp_setup(Format::StructAMlwe, 16, 32);
        let uv = RealMatrix::random(32, 8, 1.0, p.s.rng());
        let q = p.params.q();
        let u = PlainOperand::encode(&uv, p.params.delta, &q).unwrap();
        let sk = SecretKey::generate(16, &mut p.s).unwrap();
        let pk = precompute_cpmm_keys(&p.secret, &u, &sk, &p.params.aux_big, &q, &mut p.s).unwrap();
        assert_eq!(pk.len(), 8 * 4);
        let out = cpmm_precomp_to_sk(
            &p.ct,
            &u,
            &pk,
            &p.params.q_low(),
            SwitchOrder::SwitchFirst,
            &Backend::new(BackendKind::S1),
        )
        .unwrap();
        assert_eq!((out.format(), out.degree), (Format::Rlwe, 16));
        let got = decrypt_matrix(std::slice::from_ref(&sk), &out).unwrap();
        assert!(got.dist(&p.m.matmul(&uv).unwrap()) < 0.1);
        let big = SecretKey::generate(64, &mut p.s).unwrap();
        assert!(precompute_cpmm_keys(&p.secret, &u, &big, &p.params.aux_big, &q, &mut p.s).is_err());
        let _ = &p.keys;
    }

    #[test]
    fn precomp_vector_is_shared_s() {
        let mut p = precomp_setup(Format::StructASharedA, 128, 32);
        let uv = RealMatrix::random(32, 1, 1.0, p.s.rng());
        let q = p.params.q();
        let u = PlainOperand::encode(&uv, p.params.delta, &q).unwrap();
        let sk = SecretKey::generate(64, &mut p.s).unwrap();
        let pk = precompute_cpmm_keys(&p.secret, &u, &sk, &p.params.aux_big, &q, &mut p.s).unwrap();
        let backend = Backend::new(BackendKind::Naive);
        let raw = precomp_product(&p.ct, &u, &pk, &backend).unwrap();
        let v = precomp_vector_as_shared_s(&raw).unwrap();
        assert_eq!(v.format(), Format::SharedS);
        let w = &secret_times_plain(&p.secret, &u).unwrap().keys;
        let got = decrypt_matrix(w, &v).unwrap();
        let want = p.m.matmul(&uv).unwrap();
        assert!(got.dist(&want) < 0.05);
    }

    #[test]
    fn precomp_rejects_foreign_operand() {
        let mut p = precomp_setup(Format::StructASharedA, 64, 16);
        let q = p.params.q();
        let u = PlainOperand::encode(&RealMatrix::identity(16), p.params.delta, &q).unwrap();
        let other = PlainOperand::encode(&RealMatrix::identity(16).scale(0.5), p.params.delta, &q).unwrap();
        let sk = SecretKey::generate(64, &mut p.s).unwrap();
        let pk = precompute_cpmm_keys(&p.secret, &u, &sk, &p.params.aux_big, &q, &mut p.s).unwrap();
        let backend = Backend::new(BackendKind::Naive);
        assert!(matches!(cpmm_precomp(&p.ct, &other, &pk, &p.params.q_low(), &backend), Err(Error::ParamMismatch(_))));
        assert!(cpmm_precomp(&p.ct, &u, &pk, &p.params.q_low(), &backend).is_ok());
        assert!(matches!(
            precompute_cpmm_keys(&p.secret, &u, &sk, &BigInt::from(3), &q, &mut p.s),
            Err(Error::Overflow(_))
        ));
    }
}
