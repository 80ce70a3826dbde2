use num_bigint::BigInt;
use num_traits::ToPrimitive;

use super::{encode_matrix, encrypt_plain, Format, MatrixCT, SecretMatrix};
use crate::ckks::{Params, SecretKey};
use crate::error::{Error, Result};
use crate::modmm::{mod_ppmm_naive, ModMatrix};
use crate::real::RealMatrix;
use crate::ring::Sampler;

/// Public description of the secret `S′` under which the multiplicand vector
/// is encrypted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartnerKey {
    pub format: Format,
    pub rows: usize,
    pub cols: usize,
    pub degree: usize,
    pub fingerprints: Vec<u64>,
}

impl PartnerKey {
    pub fn of(s: &SecretMatrix) -> Self {
        PartnerKey {
            format: s.format,
            rows: s.rows,
            cols: s.cols,
            degree: s.degree,
            fingerprints: s.keys.iter().map(SecretKey::fingerprint).collect(),
        }
    }

    pub fn matches(&self, s: &SecretMatrix) -> bool {
        *self == Self::of(s)
    }
}

/// Matrix RGSW ciphertext modulo `p·q`: `part0` encrypts `p·⌊ΔM⌉` and `part1`
/// encrypts `p·⌊ΔM⌉·S′`.
#[derive(Clone, Debug, PartialEq)]
pub struct RgswMatrixCT {
    pub part0: MatrixCT,
    pub part1: MatrixCT,
    pub partner: PartnerKey,
    /// The auxiliary modulus `p`.
    pub aux: BigInt,
    /// Modulus `q` of the vectors it multiplies.
    pub q: BigInt,
}

impl RgswMatrixCT {
    pub fn modulus(&self) -> &BigInt {
        self.part0.modulus()
    }

    /// `(d₁, d₂)` of the encrypted matrix.
    pub fn dims(&self) -> (usize, usize) {
        self.part0.dims()
    }
}

/// `p·⌊ΔM⌉` and `p·⌊ΔM⌉·S′` modulo `p·q`.
pub fn rgsw_plaintexts(
    m: &RealMatrix,
    partner: &SecretMatrix,
    delta: f64,
    p: &BigInt,
    q: &BigInt,
) -> Result<(ModMatrix, ModMatrix)> {
    let pq = p * q;
    if partner.rows != m.cols() {
        return Err(Error::Dimension(format!("partner secret has {} rows, matrix {} columns", partner.rows, m.cols())));
    }
    let enc = encode_matrix(m, delta, q)?.with_modulus(&pq);
    let with_s = mod_ppmm_naive(&enc, &partner.dense(&pq))?;
    Ok((enc.scalar_mul(p), with_s.scalar_mul(p)))
}

/// RGSW column encryption of `M` under `keys` in `format`, to multiply
/// vectors encrypted under `partner` modulo `params.q()`.
pub fn rgsw_encrypt_matrix(
    keys: &[SecretKey],
    partner: &SecretMatrix,
    m: &RealMatrix,
    format: Format,
    params: &Params,
    sampler: &mut Sampler,
) -> Result<RgswMatrixCT> {
    if format.is_structured_a() {
        return Err(Error::InvalidParams("RGSW matrices use a structured-S format".into()));
    }
    let q = params.q();
    let p = &params.aux_small;
    if p * BigInt::from(params.delta as u64) < q {
        return Err(Error::InvalidParams("RGSW needs p·Δ >= q".into()));
    }
    format.check_rows(m.rows(), params.degree)?;
    let (plain0, plain1) = rgsw_plaintexts(m, partner, params.delta, p, &q)?;
    let scale = params.delta * p.to_f64().unwrap_or(f64::INFINITY);
    let part0 = encrypt_plain(keys, &plain0, format, params.degree, scale, sampler)?;
    let part1 = encrypt_plain(keys, &plain1, format, params.degree, scale, sampler)?;
    Ok(RgswMatrixCT { part0, part1, partner: PartnerKey::of(partner), aux: p.clone(), q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::{build_secret_matrix, decrypt_matrix, verify_plain};

    #[test]
    fn parts_satisfy_their_identities() {
        let params = Params::desk16();
        let mut s = Sampler::new(params.sampler);
        let sk = SecretKey::generate(16, &mut s).unwrap();
        let sk2 = SecretKey::generate(16, &mut s).unwrap();
        let m = RealMatrix::random(16, 16, 1.0, s.rng());
        let pq = &params.aux_small * params.q();
        let partner = build_secret_matrix(std::slice::from_ref(&sk2), Format::Rlwe, 16, 1, 16, &pq).unwrap();
        let g = rgsw_encrypt_matrix(std::slice::from_ref(&sk), &partner, &m, Format::Rlwe, &params, &mut s).unwrap();
        assert_eq!(g.modulus(), &pq);
        assert!(g.partner.matches(&partner));
        let own = build_secret_matrix(std::slice::from_ref(&sk), Format::Rlwe, 16, 16, 16, &pq).unwrap();
        let (p0, p1) = rgsw_plaintexts(&m, &partner, params.delta, &params.aux_small, &params.q()).unwrap();
        let tol = params.error_bound() as f64;
        assert!(verify_plain(&own, &g.part0, &p0, tol));
        assert!(verify_plain(&own, &g.part1, &p1, tol));
        let back = decrypt_matrix(std::slice::from_ref(&sk), &g.part0).unwrap();
        assert!(back.dist(&m) < 1e-3);
    }

    #[test]
    fn zero_matrix_and_small_p() {
        let params = Params::desk16();
        let mut s = Sampler::new(params.sampler);
        let sk = vec![SecretKey::generate(16, &mut s).unwrap()];
        let pq = &params.aux_small * params.q();
        let partner = build_secret_matrix(&sk, Format::Rlwe, 16, 1, 16, &pq).unwrap();
        let (p0, p1) =
            rgsw_plaintexts(&RealMatrix::zeros(16, 16), &partner, params.delta, &params.aux_small, &params.q())
                .unwrap();
        assert!(p0.is_zero() && p1.is_zero());
        let mut small = params.clone();
        small.aux_small = BigInt::from(3);
        assert!(rgsw_encrypt_matrix(&sk, &partner, &RealMatrix::zeros(16, 16), Format::Rlwe, &small, &mut s).is_err());
    }
}
