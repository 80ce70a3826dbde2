use num_bigint::BigInt;
use num_traits::{FromPrimitive, ToPrimitive};
use rayon::prelude::*;

use super::{check_keys, toep_of, Format, FormatTag, Orientation, SecretMatrix};
use crate::ckks::{ratio, Ciphertext, Params, SecretKey};
use crate::error::{Error, Result};
use crate::modmm::{mod_ppmm_naive, ModMatrix};
use crate::real::RealMatrix;
use crate::ring::{RingElem, RingParams, Sampler};

/// Format-tagged matrix ciphertext.
///
/// `b` is always `d₁ × d₂`. The shape of `a` depends on the format:
/// `N × d₂` for RLWE, shared-a and MLWE, `d₁ × d₂` for shared-s, and for the
/// structured-A formats the compact generators of the structured matrix
/// (`N × d₁/N` columns `Vec(a_i)`, `d₁ × N/d₁` for MLWE, `N × 1` when fully
/// shared). In row orientation the plaintext is the transpose of what the
/// column identity yields.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixCT {
    pub tag: FormatTag,
    pub a: ModMatrix,
    pub b: ModMatrix,
    pub degree: usize,
    pub scale: f64,
    /// Rows of `b` that carry data; the rest is padding.
    pub logical_rows: usize,
}

/// A matrix ciphertext with a single column.
pub type VectorCT = MatrixCT;

impl MatrixCT {
    pub fn new(tag: FormatTag, a: ModMatrix, b: ModMatrix, degree: usize, scale: f64) -> Result<Self> {
        let (d1, d2) = b.shape();
        tag.format.check_rows(d1, degree)?;
        if a.modulus() != b.modulus() {
            return Err(Error::ModulusMismatch("a and b parts use different moduli".into()));
        }
        let want = a_shape(tag.format, d1, d2, degree);
        if a.shape() != want {
            return Err(Error::Dimension(format!("{} a-part must be {:?}, got {:?}", tag.format, want, a.shape())));
        }
        Ok(MatrixCT { tag, a, b, degree, scale, logical_rows: d1 })
    }

    pub fn format(&self) -> Format {
        self.tag.format
    }

    pub fn orientation(&self) -> Orientation {
        self.tag.orientation
    }

    /// `(d₁, d₂)` of the column identity, padding included.
    pub fn dims(&self) -> (usize, usize) {
        self.b.shape()
    }

    /// Shape of the decrypted plaintext.
    pub fn plain_shape(&self) -> (usize, usize) {
        let (_, d2) = self.dims();
        match self.tag.orientation {
            Orientation::Column => (self.logical_rows, d2),
            Orientation::Row => (d2, self.logical_rows),
        }
    }

    pub fn modulus(&self) -> &BigInt {
        self.b.modulus()
    }

    /// Number of stored a-part entries.
    pub fn a_entries(&self) -> usize {
        self.a.rows() * self.a.cols()
    }

    pub fn with_parts(&self, a: ModMatrix, b: ModMatrix) -> Result<Self> {
        let mut out = MatrixCT::new(self.tag, a, b, self.degree, self.scale)?;
        out.logical_rows = self.logical_rows.min(out.b.rows());
        Ok(out)
    }

    /// The structured-A matrix in dense `d₁ × N` form (`d₁ × d₁` when fully
    /// shared); structured-S formats return the stored part.
    pub fn dense_a(&self) -> ModMatrix {
        let q = self.modulus();
        let (d1, _) = self.dims();
        let n = self.degree;
        match self.tag.format {
            Format::StructASharedA => {
                ModMatrix::vstack(&(0..d1 / n).map(|i| toep_of(&self.a.column(i), q)).collect::<Vec<_>>())
            }
            Format::StructAMlwe => {
                ModMatrix::hstack(&(0..n / d1).map(|l| toep_of(&self.a.column(l), q)).collect::<Vec<_>>())
            }
            Format::StructAFull => {
                let t = toep_of(&self.a.column(0), q);
                let mut out = ModMatrix::zeros(d1, d1, q.clone());
                for i in 0..d1 / n {
                    out.set_block(i * n, i * n, &t);
                }
                out
            }
            _ => self.a.clone(),
        }
    }

    /// RLWE columns as individual ciphertexts.
    pub fn columns(&self) -> Result<Vec<Ciphertext>> {
        if self.tag.format != Format::Rlwe {
            return Err(Error::InvalidParams(format!("{} columns are not RLWE ciphertexts", self.tag.format)));
        }
        let p = RingParams::new(self.degree, self.modulus().clone())?;
        Ok((0..self.dims().1)
            .map(|j| {
                Ciphertext::new(RingElem::new(&p, self.a.column(j)), RingElem::new(&p, self.b.column(j)), self.scale)
            })
            .collect())
    }

    /// Column-oriented RLWE matrix ciphertext from its columns.
    pub fn from_columns(cts: &[Ciphertext], orientation: Orientation) -> Result<Self> {
        let first = cts.first().ok_or_else(|| Error::Dimension("no ciphertexts".into()))?;
        let n = first.degree();
        let q = first.modulus().clone();
        if cts.iter().any(|c| c.modulus() != &q || c.degree() != n) {
            return Err(Error::ParamMismatch("ciphertexts use different rings".into()));
        }
        let a: Vec<Vec<BigInt>> = cts.iter().map(|c| c.a.coeffs().to_vec()).collect();
        let b: Vec<Vec<BigInt>> = cts.iter().map(|c| c.b.coeffs().to_vec()).collect();
        let tag = FormatTag { format: Format::Rlwe, orientation };
        MatrixCT::new(tag, ModMatrix::from_columns(n, q.clone(), &a), ModMatrix::from_columns(n, q, &b), n, first.scale)
    }

    /// `⌊(A, B)·target/q⌉`; the scale follows the plaintext.
    pub fn mod_switch(&self, target: &BigInt) -> Self {
        let q = self.modulus().clone();
        if *target == q {
            return self.clone();
        }
        MatrixCT {
            a: self.a.scale_round(target, &q, target),
            b: self.b.scale_round(target, &q, target),
            scale: self.scale * ratio(target, &q),
            ..self.clone()
        }
    }

    pub fn rescale(&self, target: &BigInt) -> Result<Self> {
        if target >= self.modulus() {
            return Err(Error::InvalidParams(format!("rescale target {} is not below {}", target, self.modulus())));
        }
        Ok(self.mod_switch(target))
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check_compatible(o)?;
        self.with_parts(self.a.add(&o.a), self.b.add(&o.b))
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.check_compatible(o)?;
        self.with_parts(self.a.sub(&o.a), self.b.sub(&o.b))
    }

    fn check_compatible(&self, o: &Self) -> Result<()> {
        if self.tag != o.tag || self.dims() != o.dims() || self.degree != o.degree {
            return Err(Error::ParamMismatch(format!("{} {:?} vs {} {:?}", self.tag, self.dims(), o.tag, o.dims())));
        }
        if self.modulus() != o.modulus() {
            return Err(Error::ModulusMismatch("matrix ciphertexts use different moduli".into()));
        }
        Ok(())
    }
}

fn a_shape(format: Format, d1: usize, d2: usize, n: usize) -> (usize, usize) {
    match format {
        Format::Rlwe | Format::SharedA | Format::Mlwe => (n, d2),
        Format::SharedS => (d1, d2),
        Format::StructASharedA => (n, d1 / n),
        Format::StructAMlwe => (d1, n / d1),
        Format::StructAFull => (n, 1),
    }
}

/// Relabels a ciphertext of `M` as one of `Mᵗ` with the transposed identity.
/// Applying it twice gives back the input.
pub fn transpose_format(ct: &MatrixCT) -> MatrixCT {
    let mut out = ct.clone();
    out.tag.orientation = ct.tag.orientation.flip();
    out
}

/// `⌊scale·M⌉ mod q`.
pub fn encode_matrix(m: &RealMatrix, scale: f64, q: &BigInt) -> Result<ModMatrix> {
    let half = q >> 1u32;
    let mut data = Vec::with_capacity(m.rows() * m.cols());
    for &x in m.data() {
        let v =
            BigInt::from_f64((scale * x + 0.5).floor()).ok_or_else(|| Error::Overflow(format!("cannot encode {x}")))?;
        if v > half || -&v > half {
            return Err(Error::Overflow(format!("encoding of {x} exceeds q/2")));
        }
        data.push(v);
    }
    Ok(ModMatrix::new(m.rows(), m.cols(), q.clone(), data))
}

fn segment(col: &[BigInt], start: usize, len: usize, p: &RingParams) -> RingElem {
    RingElem::new(p, col[start..start + len].to_vec())
}

/// Column-oriented encryption of an integer plaintext `d₁ × d₂` modulo its
/// own modulus.
pub fn encrypt_plain(
    keys: &[SecretKey],
    plain: &ModMatrix,
    format: Format,
    degree: usize,
    scale: f64,
    sampler: &mut Sampler,
) -> Result<MatrixCT> {
    let (d1, d2) = plain.shape();
    if format == Format::StructAFull {
        return Err(Error::InvalidParams("the fully shared structured-A format has no encryptor".into()));
    }
    check_keys(keys, format, d1, d2, degree)?;
    let q = plain.modulus().clone();
    let n = degree;
    let ring_n = RingParams::new(n, q.clone())?;
    let ring_d1 = RingParams::new(format.key_degree(d1, n), q.clone())?;

    // shared structured-A generators come first so that column work is independent
    let shared: Vec<RingElem> = match format {
        Format::StructASharedA => (0..d1 / n).map(|_| sampler.uniform(&ring_n)).collect(),
        Format::StructAMlwe => (0..n / d1).map(|_| sampler.uniform(&ring_d1)).collect(),
        _ => Vec::new(),
    };
    let mut forks: Vec<Sampler> = (0..d2).map(|_| sampler.fork()).collect();

    let cols: Vec<(Vec<BigInt>, Vec<BigInt>)> = forks
        .par_iter_mut()
        .enumerate()
        .map(|(j, s)| {
            let m = plain.column(j);
            let mut a_col = Vec::new();
            let mut b_col = Vec::with_capacity(d1);
            match format {
                Format::Rlwe | Format::SharedS => {
                    for i in 0..d1 / n {
                        let a = s.uniform(&ring_n);
                        let e = s.error(&ring_n);
                        let b = segment(&m, i * n, n, &ring_n).add(&e).sub(&a.mul_small(keys[0].coeffs()));
                        a_col.extend(a.into_coeffs());
                        b_col.extend(b.into_coeffs());
                    }
                }
                Format::SharedA => {
                    let a = s.uniform(&ring_n);
                    for (i, sk) in keys.iter().enumerate() {
                        let e = s.error(&ring_n);
                        let b = segment(&m, i * n, n, &ring_n).add(&e).sub(&a.mul_small(sk.coeffs()));
                        b_col.extend(b.into_coeffs());
                    }
                    a_col = a.into_coeffs();
                }
                Format::Mlwe => {
                    let mut b = segment(&m, 0, d1, &ring_d1).add(&s.error(&ring_d1));
                    for sk in keys {
                        let a = s.uniform(&ring_d1);
                        b = b.sub(&a.mul_small(sk.coeffs()));
                        a_col.extend(a.into_coeffs());
                    }
                    b_col = b.into_coeffs();
                }
                Format::StructASharedA => {
                    for (i, a) in shared.iter().enumerate() {
                        let e = s.error(&ring_n);
                        let b = segment(&m, i * n, n, &ring_n).add(&e).sub(&a.mul_small(keys[j].coeffs()));
                        b_col.extend(b.into_coeffs());
                    }
                }
                Format::StructAMlwe => {
                    let r = shared.len();
                    let mut b = segment(&m, 0, d1, &ring_d1).add(&s.error(&ring_d1));
                    for (l, a) in shared.iter().enumerate() {
                        b = b.sub(&a.mul_small(keys[j * r + l].coeffs()));
                    }
                    b_col = b.into_coeffs();
                }
                Format::StructAFull => unreachable!(),
            }
            (a_col, b_col)
        })
        .collect();

    let b_cols: Vec<Vec<BigInt>> = cols.iter().map(|c| c.1.clone()).collect();
    let b = ModMatrix::from_columns(d1, q.clone(), &b_cols);
    let a = match format {
        Format::StructASharedA | Format::StructAMlwe => {
            let rows = shared[0].degree();
            ModMatrix::from_columns(rows, q, &shared.iter().map(|x| x.coeffs().to_vec()).collect::<Vec<_>>())
        }
        _ => {
            let a_cols: Vec<Vec<BigInt>> = cols.into_iter().map(|c| c.0).collect();
            let rows = a_cols[0].len();
            ModMatrix::from_columns(rows, q, &a_cols)
        }
    };
    MatrixCT::new(FormatTag::column(format), a, b, degree, scale)
}

/// Column-oriented encryption of `⌊scale·M⌉` modulo `q`.
pub fn encrypt_matrix_at(
    keys: &[SecretKey],
    m: &RealMatrix,
    format: Format,
    degree: usize,
    q: &BigInt,
    scale: f64,
    sampler: &mut Sampler,
) -> Result<MatrixCT> {
    format.check_rows(m.rows(), degree)?;
    encrypt_plain(keys, &encode_matrix(m, scale, q)?, format, degree, scale, sampler)
}

/// Fresh column encryption at the top level of `params`.
pub fn encrypt_matrix(
    keys: &[SecretKey],
    m: &RealMatrix,
    format: Format,
    params: &Params,
    sampler: &mut Sampler,
) -> Result<MatrixCT> {
    encrypt_matrix_at(keys, m, format, params.degree, &params.q(), params.delta, sampler)
}

/// As [`encrypt_matrix`], zero-padding the rows first; decryption strips the
/// padding again.
pub fn encrypt_padded(
    keys: &[SecretKey],
    m: &RealMatrix,
    format: Format,
    params: &Params,
    sampler: &mut Sampler,
) -> Result<MatrixCT> {
    let padded = super::pad_to_format(m, format, params.degree)?;
    let mut ct = encrypt_matrix(keys, &padded, format, params, sampler)?;
    ct.logical_rows = m.rows();
    Ok(ct)
}

/// The column identity `S·A + B` (or `A·S + B`) evaluated with ring
/// arithmetic, padding included and ignoring orientation.
pub fn decrypt_int(keys: &[SecretKey], ct: &MatrixCT) -> Result<ModMatrix> {
    let (d1, d2) = ct.dims();
    let format = ct.tag.format;
    check_keys(keys, format, d1, d2, ct.degree)?;
    let q = ct.modulus().clone();
    let n = ct.degree;
    let ring_n = RingParams::new(n, q.clone())?;
    let ring_d1 = RingParams::new(format.key_degree(d1, n), q.clone())?;
    let shared: Vec<Vec<BigInt>> =
        if format.is_structured_a() { (0..ct.a.cols()).map(|i| ct.a.column(i)).collect() } else { Vec::new() };

    let cols: Vec<Vec<BigInt>> = (0..d2)
        .into_par_iter()
        .map(|j| {
            let b = ct.b.column(j);
            let mut out = Vec::with_capacity(d1);
            match format {
                Format::Rlwe | Format::SharedS => {
                    let a = ct.a.column(j);
                    for i in 0..d1 / n {
                        let v = segment(&a, i * n, n, &ring_n).mul_small(keys[0].coeffs()).add(&segment(
                            &b,
                            i * n,
                            n,
                            &ring_n,
                        ));
                        out.extend(v.into_coeffs());
                    }
                }
                Format::SharedA => {
                    let a = RingElem::new(&ring_n, ct.a.column(j));
                    for (i, sk) in keys.iter().enumerate() {
                        out.extend(a.mul_small(sk.coeffs()).add(&segment(&b, i * n, n, &ring_n)).into_coeffs());
                    }
                }
                Format::Mlwe => {
                    let a = ct.a.column(j);
                    let mut acc = RingElem::new(&ring_d1, b);
                    for (l, sk) in keys.iter().enumerate() {
                        acc = acc.add(&segment(&a, l * d1, d1, &ring_d1).mul_small(sk.coeffs()));
                    }
                    out = acc.into_coeffs();
                }
                Format::StructASharedA => {
                    for (i, a) in shared.iter().enumerate() {
                        let a = RingElem::new(&ring_n, a.clone());
                        out.extend(a.mul_small(keys[j].coeffs()).add(&segment(&b, i * n, n, &ring_n)).into_coeffs());
                    }
                }
                Format::StructAMlwe => {
                    let r = shared.len();
                    let mut acc = RingElem::new(&ring_d1, b);
                    for (l, a) in shared.iter().enumerate() {
                        acc = acc.add(&RingElem::new(&ring_d1, a.clone()).mul_small(keys[j * r + l].coeffs()));
                    }
                    out = acc.into_coeffs();
                }
                Format::StructAFull => {
                    let k = d1 / n;
                    let a = RingElem::new(&ring_n, shared[0].clone());
                    for i in 0..k {
                        let v = a.mul_small(keys[j * k + i].coeffs()).add(&segment(&b, i * n, n, &ring_n));
                        out.extend(v.into_coeffs());
                    }
                }
            }
            out
        })
        .collect();
    Ok(ModMatrix::from_columns(d1, q, &cols))
}

/// Decrypts and decodes, stripping padding and honouring orientation.
pub fn decrypt_matrix(keys: &[SecretKey], ct: &MatrixCT) -> Result<RealMatrix> {
    let m = decrypt_int(keys, ct)?;
    let (_, d2) = m.shape();
    let vals = m.to_f64();
    let col = RealMatrix::from_fn(ct.logical_rows, d2, |i, j| vals[i * d2 + j] / ct.scale);
    Ok(match ct.tag.orientation {
        Orientation::Column => col,
        Orientation::Row => col.transpose(),
    })
}

/// `‖identity(S, ct) - plain‖_∞` with the identity evaluated densely from the
/// matrix secret. `plain` is in the ciphertext's plaintext view, padding
/// included.
pub fn format_error(s: &SecretMatrix, ct: &MatrixCT, plain: &ModMatrix) -> Result<BigInt> {
    let (d1, d2) = ct.dims();
    if s.format != ct.tag.format || s.rows != d1 || s.degree != ct.degree {
        return Err(Error::ParamMismatch(format!(
            "secret for {} {}x{} vs {} {:?}",
            s.format,
            s.rows,
            s.cols,
            ct.tag,
            ct.dims()
        )));
    }
    if ct.tag.format.is_structured_a() && s.cols != d2 {
        return Err(Error::Dimension(format!("secret has {} columns, ciphertext {}", s.cols, d2)));
    }
    let q = ct.modulus();
    let sd = s.dense(q);
    let prod =
        if ct.tag.format.is_structured_a() { mod_ppmm_naive(&ct.dense_a(), &sd)? } else { mod_ppmm_naive(&sd, &ct.a)? };
    let mut ident = prod.add(&ct.b);
    if ct.tag.orientation == Orientation::Row {
        ident = ident.transpose();
    }
    if ident.shape() != plain.shape() {
        return Err(Error::Dimension(format!("plaintext {:?} vs identity {:?}", plain.shape(), ident.shape())));
    }
    Ok(ident.dist(&plain.with_modulus(q)))
}

/// Whether `ct` satisfies the identity of its format with `plain` up to `tol`
/// and `S` has the structure of that format.
pub fn verify_plain(s: &SecretMatrix, ct: &MatrixCT, plain: &ModMatrix, tol: f64) -> bool {
    if !s.check_structure() {
        return false;
    }
    match format_error(s, ct, plain) {
        Ok(e) => e.to_f64().is_some_and(|e| e <= tol),
        Err(_) => false,
    }
}

/// [`verify_plain`] against `⌊scale·M⌉`, padding `M` to the ciphertext shape.
pub fn verify_format(s: &SecretMatrix, ct: &MatrixCT, expected: &RealMatrix, tol: f64) -> bool {
    let (d1, _) = ct.dims();
    if expected.shape() != ct.plain_shape() {
        return false;
    }
    let col = match ct.tag.orientation {
        Orientation::Column => expected.clone(),
        Orientation::Row => expected.transpose(),
    };
    let Ok(enc) = encode_matrix(&col.pad_rows(d1), ct.scale, ct.modulus()) else {
        return false;
    };
    let plain = match ct.tag.orientation {
        Orientation::Column => enc,
        Orientation::Row => enc.transpose(),
    };
    verify_plain(s, ct, &plain, tol)
}

/// Encrypts a vector as a one-column matrix.
pub fn encrypt_vector(
    keys: &[SecretKey],
    v: &[f64],
    format: Format,
    params: &Params,
    sampler: &mut Sampler,
) -> Result<VectorCT> {
    let m = RealMatrix::new(v.len(), 1, v.to_vec())?;
    encrypt_padded(keys, &m, format, params, sampler)
}

pub fn decrypt_vector(keys: &[SecretKey], ct: &VectorCT) -> Result<Vec<f64>> {
    Ok(decrypt_matrix(keys, ct)?.data().to_vec())
}

#[cfg(test)]
mod tests {
    use super::super::build_secret_matrix;
    use super::*;
    use crate::ring::SamplerConfig;

    fn setup(format: Format, rows: usize, cols: usize, params: &Params, s: &mut Sampler) -> Vec<SecretKey> {
        let n = params.degree;
        let kd = format.key_degree(rows, n);
        (0..format.key_count(rows, cols, n)).map(|_| SecretKey::generate(kd, s).unwrap()).collect()
    }

    fn rows_for(format: Format, n: usize) -> usize {
        match format {
            Format::Rlwe => n,
            Format::Mlwe | Format::StructAMlwe => n / 2,
            _ => 2 * n,
        }
    }

    #[test]
    fn every_format_round_trips() {
        let params = Params::desk16();
        let mut s = Sampler::new(params.sampler);
        let tol = (params.error_bound() as f64 + 1.0) / params.delta;
        for format in Format::ENCRYPTABLE {
            let rows = rows_for(format, 16);
            let keys = setup(format, rows, 5, &params, &mut s);
            let m = RealMatrix::random(rows, 5, 1.0, s.rng());
            let ct = encrypt_matrix(&keys, &m, format, &params, &mut s).unwrap();
            let back = decrypt_matrix(&keys, &ct).unwrap();
            assert!(back.dist(&m) <= tol, "{format}: {}", back.dist(&m));
            let sm = build_secret_matrix(&keys, format, rows, 5, 16, &params.q()).unwrap();
            assert!(verify_format(&sm, &ct, &m, params.error_bound() as f64), "{format}");
            // the transposed view is verified against Mᵗ
            let t = transpose_format(&ct);
            assert!(verify_format(&sm, &t, &m.transpose(), params.error_bound() as f64), "{format}");
            assert_eq!(transpose_format(&t), ct);
        }
    }

    #[test]
    fn zero_plaintext_without_noise() {
        let params = Params::desk16().with_sigma(0.0);
        let mut s = Sampler::new(params.sampler);
        let keys = setup(Format::SharedA, 32, 3, &params, &mut s);
        let ct = encrypt_matrix(&keys, &RealMatrix::zeros(32, 3), Format::SharedA, &params, &mut s).unwrap();
        assert_eq!(decrypt_matrix(&keys, &ct).unwrap().max_abs(), 0.0);
        let trivial = ct.with_parts(ModMatrix::zeros(16, 3, params.q()), ModMatrix::zeros(32, 3, params.q())).unwrap();
        assert_eq!(decrypt_matrix(&keys, &trivial).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn shared_a_saves_a_entries() {
        let params = Params::desk16();
        let mut s = Sampler::new(params.sampler);
        let m = RealMatrix::random(32, 4, 1.0, s.rng());
        let k1 = setup(Format::SharedA, 32, 4, &params, &mut s);
        let k2 = setup(Format::SharedS, 32, 4, &params, &mut s);
        let sa = encrypt_matrix(&k1, &m, Format::SharedA, &params, &mut s).unwrap();
        let ss = encrypt_matrix(&k2, &m, Format::SharedS, &params, &mut s).unwrap();
        assert_eq!(sa.a.rows(), 16);
        assert_eq!(sa.a_entries(), 16 * 4);
        assert_eq!(ss.a_entries(), 2 * 16 * 4);
    }

    #[test]
    fn perturbation_breaks_verification() {
        let params = Params::desk16();
        let mut s = Sampler::new(params.sampler);
        let keys = setup(Format::Rlwe, 16, 2, &params, &mut s);
        let m = RealMatrix::random(16, 2, 1.0, s.rng());
        let mut ct = encrypt_matrix(&keys, &m, Format::Rlwe, &params, &mut s).unwrap();
        let sm = build_secret_matrix(&keys, Format::Rlwe, 16, 2, 16, &params.q()).unwrap();
        assert!(verify_format(&sm, &ct, &m, 20.0));
        let half = params.q() / 2;
        let v = ct.b.get(3, 1) + half;
        ct.b.set(3, 1, v);
        assert!(!verify_format(&sm, &ct, &m, 20.0));
    }

    #[test]
    fn padding_is_stripped() {
        let params = Params::desk16();
        let mut s = Sampler::new(params.sampler);
        let keys = setup(Format::SharedS, 32, 3, &params, &mut s);
        let m = RealMatrix::random(20, 3, 1.0, s.rng());
        let ct = encrypt_padded(&keys, &m, Format::SharedS, &params, &mut s).unwrap();
        assert_eq!(ct.dims(), (32, 3));
        let back = decrypt_matrix(&keys, &ct).unwrap();
        assert_eq!(back.shape(), (20, 3));
        assert!(back.dist(&m) < 0.05);
    }

    #[test]
    fn fully_shared_is_recognized() {
        let params = Params::desk16().with_sigma(0.0);
        let mut s = Sampler::new(SamplerConfig::new(2, 0.0, 8));
        let q = params.q();
        let keys = setup(Format::StructAFull, 32, 2, &params, &mut s);
        let ring = params.ring(q.clone());
        let a = s.uniform(&ring);
        let m = RealMatrix::random(32, 2, 1.0, s.rng());
        let plain = encode_matrix(&m, params.delta, &q).unwrap();
        let mut b = ModMatrix::zeros(32, 2, q.clone());
        for j in 0..2 {
            for i in 0..2 {
                let mi = RingElem::new(&ring, plain.column(j)[i * 16..(i + 1) * 16].to_vec());
                let bi = mi.sub(&a.mul_small(keys[j * 2 + i].coeffs()));
                for (t, c) in bi.coeffs().iter().enumerate() {
                    b.set(i * 16 + t, j, c.clone());
                }
            }
        }
        let a = ModMatrix::from_columns(16, q.clone(), &[a.coeffs().to_vec()]);
        let ct = MatrixCT::new(FormatTag::column(Format::StructAFull), a, b, 16, params.delta).unwrap();
        let sm = build_secret_matrix(&keys, Format::StructAFull, 32, 2, 16, &q).unwrap();
        assert!(verify_format(&sm, &ct, &m, 0.0));
        assert!(decrypt_matrix(&keys, &ct).unwrap().dist(&m) < 1e-3);
        assert!(encrypt_plain(&keys, &plain, Format::StructAFull, 16, 1.0, &mut s).is_err());
    }
}
