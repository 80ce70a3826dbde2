use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;
use rayon::prelude::*;

use super::{right_multiply, PlainOperand};
use crate::ckks::{switch_parts, swk_gen, Ciphertext, SecretKey, SwitchingKey};
use crate::convert::{transpose_counted, transpose_matrix_counted, TransposeKeySet};
use crate::error::{Error, Result};
use crate::formats::{Format, MatrixCT, Orientation};
use crate::modmm::{Backend, ModMatrix, Part};
use crate::ring::{RingElem, RingParams, Sampler};

/// Transposition keys plus the relinearization key `sk² → sk`.
#[derive(Clone, Debug, PartialEq)]
pub struct CcmmKeys {
    pub transpose: TransposeKeySet,
    pub relin: SwitchingKey,
}

impl CcmmKeys {
    pub fn generate(sk: &SecretKey, aux: &BigInt, q: &BigInt, lightweight: bool, sampler: &mut Sampler) -> Self {
        let transpose = if lightweight {
            TransposeKeySet::lightweight(sk, aux, q, sampler)
        } else {
            TransposeKeySet::full(sk, aux, q, sampler)
        };
        CcmmKeys { transpose, relin: swk_gen(&sk.product(sk), sk, aux, q, sampler) }
    }

    pub fn key_count(&self) -> usize {
        self.transpose.len() + 1
    }
}

fn check_square(ct: &MatrixCT) -> Result<()> {
    let n = ct.degree;
    if ct.format() != Format::Rlwe || ct.dims() != (n, n) {
        return Err(Error::Dimension(format!("expected a square N = {n} RLWE matrix, got {} {:?}", ct.tag, ct.dims())));
    }
    if !ct.modulus().gcd(&BigInt::from(n)).is_one() {
        return Err(Error::NotInvertible(format!("N = {n} is not invertible modulo q")));
    }
    Ok(())
}

/// The rows of `x` as ciphertexts `(row, 0)`.
fn row_ciphertexts(x: &ModMatrix, ring: &RingParams, scale: f64) -> Vec<Ciphertext> {
    (0..x.rows())
        .into_par_iter()
        .map(|i| Ciphertext::new(RingElem::new(ring, x.row(i).to_vec()), RingElem::zero(ring), scale))
        .collect()
}

/// CC-MM of two `N × N` RLWE matrices under the same key. `ct1` is column
/// encoded; `ct2` may be either, a row-encoded `ct2` saving one transpose.
///
/// Four backend products modulo `q`, two more transposes, a relinearization
/// of each column and the final rescale to `target`. All four products have
/// uniform operands, so none of them goes through the truncated b-part path.
pub fn ccmm(ct1: &MatrixCT, ct2: &MatrixCT, keys: &CcmmKeys, target: &BigInt, backend: &Backend) -> Result<MatrixCT> {
    check_square(ct1)?;
    check_square(ct2)?;
    if ct1.orientation() != Orientation::Column {
        return Err(Error::InvalidParams("the left operand must be column encoded".into()));
    }
    if ct1.degree != ct2.degree {
        return Err(Error::Dimension(format!("ring degrees {} and {}", ct1.degree, ct2.degree)));
    }
    if ct1.modulus() != ct2.modulus() {
        return Err(Error::ModulusMismatch("operands use different moduli".into()));
    }
    if (ct1.scale - ct2.scale).abs() > 1e-9 * ct1.scale.abs() {
        return Err(Error::ParamMismatch(format!("scales {} and {} differ", ct1.scale, ct2.scale)));
    }
    let counters = backend.counters();
    let row = match ct2.orientation() {
        Orientation::Column => transpose_matrix_counted(ct2, &keys.transpose, counters)?,
        Orientation::Row => ct2.clone(),
    };
    let (a2, b2) = (row.a.transpose(), row.b.transpose());
    let c00 = backend.mm(&ct1.a, &a2, Part::A)?;
    let c01 = backend.mm(&ct1.a, &b2, Part::A)?;
    let c10 = backend.mm(&ct1.b, &a2, Part::A)?;
    let c11 = backend.mm(&ct1.b, &b2, Part::A)?;

    let n = ct1.degree;
    let ring = RingParams::new(n, ct1.modulus().clone())?;
    let scale = ct1.scale * ct2.scale;
    let (d01, d23) = (row_ciphertexts(&c00, &ring, scale), row_ciphertexts(&c10, &ring, scale));
    let (d01, d23) =
        (transpose_counted(&d01, &keys.transpose, counters)?, transpose_counted(&d23, &keys.transpose, counters)?);
    counters.add_key_switch(n);
    let cols: Vec<Ciphertext> = (0..n)
        .into_par_iter()
        .map(|j| {
            let (x, y) = switch_parts(&keys.relin, &d01[j].a);
            let a = x.add(&d01[j].b).add(&d23[j].a).add(&RingElem::new(&ring, c01.column(j)));
            let b = y.add(&d23[j].b).add(&RingElem::new(&ring, c11.column(j)));
            Ciphertext::new(a, b, scale)
        })
        .collect();
    MatrixCT::from_columns(&cols, Orientation::Column)?.rescale(target)
}

/// [`ccmm`] restricted to the lightweight transposition keys, so that only
/// four switching keys are stored.
pub fn ccmm_lightweight(
    ct1: &MatrixCT,
    ct2: &MatrixCT,
    keys: &CcmmKeys,
    target: &BigInt,
    backend: &Backend,
) -> Result<MatrixCT> {
    if !keys.transpose.is_lightweight() {
        return Err(Error::InvalidParams("lightweight CC-MM needs lightweight transposition keys".into()));
    }
    ccmm(ct1, ct2, keys, target, backend)
}

/// `U·M` for a column RLWE encryption of `M` as `(Mᵗ·Uᵗ)ᵗ`: transpose,
/// multiply the row encryption by `Uᵗ` on the right, transpose back, rescale.
pub fn pcmm_via_transpose(
    u: &PlainOperand,
    ct: &MatrixCT,
    keys: &TransposeKeySet,
    target: &BigInt,
    backend: &Backend,
) -> Result<MatrixCT> {
    check_square(ct)?;
    if ct.orientation() != Orientation::Column {
        return Err(Error::InvalidParams("pcmm_via_transpose takes a column encoded matrix".into()));
    }
    if u.shape() != ct.dims() {
        return Err(Error::Dimension(format!("U is {:?}, expected {:?}", u.shape(), ct.dims())));
    }
    let counters = backend.counters();
    let row = transpose_matrix_counted(ct, keys, counters)?;
    let (a, b) = right_multiply(&row, &u.transpose().encoded_mod(ct.modulus()), backend)?;
    let mut prod = row.with_parts(a, b)?;
    prod.scale = ct.scale * u.scale;
    transpose_matrix_counted(&prod, keys, counters)?.rescale(target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ckks::Params;
    use crate::convert::transpose_matrix;
    use crate::formats::{decrypt_matrix, encode_matrix, encrypt_matrix, FormatTag};
    use crate::linalg::precision_bits;
    use crate::modmm::BackendKind;
    use crate::real::RealMatrix;

    struct Setup {
        params: Params,
        s: Sampler,
        sk: SecretKey,
    }

    fn setup(degree: usize) -> Setup {
        let mut params = Params::desk16();
        params.degree = degree;
        let mut s = Sampler::new(params.sampler);
        let sk = SecretKey::generate(degree, &mut s).unwrap();
        Setup { params, s, sk }
    }

    fn trivial(m: &RealMatrix, params: &Params) -> MatrixCT {
        let q = params.q();
        let n = params.degree;
        let b = encode_matrix(m, params.delta, &q).unwrap();
        MatrixCT::new(FormatTag::column(Format::Rlwe), ModMatrix::zeros(n, n, q), b, n, params.delta).unwrap()
    }

    #[test]
    fn identity_factor_keeps_matrix() {
        let mut t = setup(16);
        let keys = CcmmKeys::generate(&t.sk, &t.params.aux_big, &t.params.q(), false, &mut t.s);
        let m = RealMatrix::random(16, 16, 1.0, t.s.rng());
        let ct = encrypt_matrix(std::slice::from_ref(&t.sk), &m, Format::Rlwe, &t.params, &mut t.s).unwrap();
        let id = trivial(&RealMatrix::identity(16), &t.params);
        let backend = Backend::new(BackendKind::S1);
        let out = ccmm(&ct, &id, &keys, &t.params.q_low(), &backend).unwrap();
        assert_eq!(backend.counters().mod_calls(), 4);
        assert_eq!(backend.counters().transposes(), 3);
        let got = decrypt_matrix(std::slice::from_ref(&t.sk), &out).unwrap();
        assert!(got.dist(&m) < 0.05, "{}", got.dist(&m));
    }

    #[test]
    fn random_pair_and_row_operand() {
        let mut t = setup(16);
        let keys = CcmmKeys::generate(&t.sk, &t.params.aux_big, &t.params.q(), false, &mut t.s);
        let m1 = RealMatrix::random(16, 16, 1.0, t.s.rng());
        let m2 = RealMatrix::random(16, 16, 1.0, t.s.rng());
        let exact = m1.matmul(&m2).unwrap();
        let sk = std::slice::from_ref(&t.sk);
        let c1 = encrypt_matrix(sk, &m1, Format::Rlwe, &t.params, &mut t.s).unwrap();
        let c2 = encrypt_matrix(sk, &m2, Format::Rlwe, &t.params, &mut t.s).unwrap();
        let floor = t.params.log_delta() - 4.0 - 6.0;
        for kind in [BackendKind::Naive, BackendKind::S2, BackendKind::S3] {
            let backend = Backend::new(kind);
            let out = ccmm(&c1, &c2, &keys, &t.params.q_low(), &backend).unwrap();
            let bits = precision_bits(&exact, &decrypt_matrix(sk, &out).unwrap());
            assert!(bits >= floor.max(4.0), "{kind}: {bits}");
            assert_eq!(backend.counters().mod_calls(), 4);
        }
        let row = transpose_matrix(&c2, &keys.transpose).unwrap();
        let backend = Backend::new(BackendKind::S1);
        let out = ccmm(&c1, &row, &keys, &t.params.q_low(), &backend).unwrap();
        assert_eq!(backend.counters().transposes(), 2);
        assert!(precision_bits(&exact, &decrypt_matrix(sk, &out).unwrap()) >= floor.max(4.0));
    }

    #[test]
    fn lightweight_agrees_with_full() {
        let mut t = setup(8);
        let q = t.params.q();
        let full = CcmmKeys::generate(&t.sk, &t.params.aux_big, &q, false, &mut t.s);
        let light = CcmmKeys::generate(&t.sk, &t.params.aux_big, &q, true, &mut t.s);
        assert_eq!(light.key_count(), 4);
        let sk = std::slice::from_ref(&t.sk);
        let m1 = RealMatrix::random(8, 8, 1.0, t.s.rng());
        let m2 = RealMatrix::random(8, 8, 1.0, t.s.rng());
        let c1 = encrypt_matrix(sk, &m1, Format::Rlwe, &t.params, &mut t.s).unwrap();
        let c2 = encrypt_matrix(sk, &m2, Format::Rlwe, &t.params, &mut t.s).unwrap();
        let backend = Backend::new(BackendKind::Naive);
        let x = decrypt_matrix(sk, &ccmm(&c1, &c2, &full, &t.params.q_low(), &backend).unwrap()).unwrap();
        let y = decrypt_matrix(sk, &ccmm_lightweight(&c1, &c2, &light, &t.params.q_low(), &backend).unwrap()).unwrap();
        let exact = m1.matmul(&m2).unwrap();
        assert!(x.dist(&exact) < 0.1 && y.dist(&exact) < 0.1);
        assert!(x.dist(&y) < 0.2);
        assert!(ccmm_lightweight(&c1, &c2, &full, &t.params.q_low(), &backend).is_err());

        // trivial operands only pick up the rounding of the final rescale
        let (a, b) = (trivial(&m1, &t.params), trivial(&m2, &t.params));
        let z = decrypt_matrix(sk, &ccmm_lightweight(&a, &b, &light, &t.params.q_low(), &backend).unwrap()).unwrap();
        assert!(z.dist(&exact) < 0.05);
    }

    #[test]
    fn rejects_bad_operands() {
        let mut t = setup(16);
        let keys = CcmmKeys::generate(&t.sk, &t.params.aux_big, &t.params.q(), true, &mut t.s);
        let m = RealMatrix::random(16, 16, 1.0, t.s.rng());
        let a = trivial(&m, &t.params);
        let mut b = a.clone();
        b.scale *= 2.0;
        let backend = Backend::new(BackendKind::Naive);
        assert!(matches!(ccmm(&a, &b, &keys, &t.params.q_low(), &backend), Err(Error::ParamMismatch(_))));
        let q = t.params.q();
        let tall = MatrixCT::new(
            FormatTag::column(Format::SharedS),
            ModMatrix::zeros(32, 16, q.clone()),
            ModMatrix::zeros(32, 16, q),
            16,
            t.params.delta,
        )
        .unwrap();
        assert!(matches!(ccmm(&tall, &a, &keys, &t.params.q_low(), &backend), Err(Error::Dimension(_))));
    }

    #[test]
    fn plain_times_cipher() {
        let mut t = setup(16);
        let q = t.params.q();
        let keys = TransposeKeySet::full(&t.sk, &t.params.aux_big, &q, &mut t.s);
        let sk = std::slice::from_ref(&t.sk);
        let m = RealMatrix::random(16, 16, 1.0, t.s.rng());
        let ct = encrypt_matrix(sk, &m, Format::Rlwe, &t.params, &mut t.s).unwrap();
        let id = PlainOperand::encode(&RealMatrix::identity(16), t.params.delta, &q).unwrap();
        let out = pcmm_via_transpose(&id, &ct, &keys, &t.params.q_low(), &Backend::new(BackendKind::Naive)).unwrap();
        assert!(decrypt_matrix(sk, &out).unwrap().dist(&m) < 0.05);

        let uv = RealMatrix::random(16, 16, 1.0, t.s.rng());
        let u = PlainOperand::encode(&uv, t.params.delta, &q).unwrap();
        let backend = Backend::new(BackendKind::S1);
        let out = pcmm_via_transpose(&u, &ct, &keys, &t.params.q_low(), &backend).unwrap();
        assert_eq!((backend.counters().transposes(), backend.counters().mod_calls()), (2, 2));
        assert_eq!(out.orientation(), Orientation::Column);
        let exact = uv.matmul(&m).unwrap();
        assert!(decrypt_matrix(sk, &out).unwrap().dist(&exact) < 0.1);
    }
}
