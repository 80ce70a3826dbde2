//! Matrix and vector encryption formats.
//!
//! A matrix ciphertext is a pair of integer matrices `(A, B)`. Under a
//! structured secret `S` it decrypts as `S·A + B`; in the structured-A
//! formats the roles swap and it decrypts as `A·S + B` with `A` structured
//! and `S` an arbitrary stack of key vectors.

mod matrix_ct;
mod rgsw;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::arith::is_power_of_two;
use crate::ckks::SecretKey;
use crate::error::{Error, Result};
use crate::modmm::ModMatrix;
use crate::real::RealMatrix;
use crate::ring::{toeplitz_generator, RingElem, RingParams};

pub use matrix_ct::{
    decrypt_int, decrypt_matrix, decrypt_vector, encode_matrix, encrypt_matrix, encrypt_matrix_at, encrypt_padded,
    encrypt_plain, encrypt_vector, format_error, transpose_format, verify_format, verify_plain, MatrixCT, VectorCT,
};
pub use rgsw::{rgsw_encrypt_matrix, rgsw_plaintexts, PartnerKey, RgswMatrixCT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Format {
    Rlwe,
    SharedS,
    SharedA,
    Mlwe,
    StructASharedA,
    StructAMlwe,
    /// Structured-A with a single `a` shared by every block: `A = I ⊗ toep(a)`.
    StructAFull,
}

impl Format {
    pub const ALL: [Format; 7] = [
        Format::Rlwe,
        Format::SharedS,
        Format::SharedA,
        Format::Mlwe,
        Format::StructASharedA,
        Format::StructAMlwe,
        Format::StructAFull,
    ];

    /// Formats with a dedicated encryptor.
    pub const ENCRYPTABLE: [Format; 6] =
        [Format::Rlwe, Format::SharedS, Format::SharedA, Format::Mlwe, Format::StructASharedA, Format::StructAMlwe];

    pub fn is_structured_a(self) -> bool {
        matches!(self, Format::StructASharedA | Format::StructAMlwe | Format::StructAFull)
    }

    /// Whether `rows` is an admissible row count at ring degree `degree`.
    pub fn admits(self, rows: usize, degree: usize) -> bool {
        match self {
            Format::Rlwe => rows == degree,
            Format::SharedS | Format::SharedA | Format::StructASharedA | Format::StructAFull => {
                rows > 0 && rows % degree == 0
            }
            Format::Mlwe | Format::StructAMlwe => rows > 0 && degree % rows == 0 && is_power_of_two(rows),
        }
    }

    pub fn check_rows(self, rows: usize, degree: usize) -> Result<()> {
        if self.admits(rows, degree) {
            Ok(())
        } else {
            Err(Error::Dimension(format!("{rows} rows are not admissible for {self} at degree {degree}")))
        }
    }

    /// Smallest admissible row count that is at least `rows`.
    pub fn padded_rows(self, rows: usize, degree: usize) -> Result<usize> {
        let r = match self {
            Format::Rlwe => degree,
            Format::SharedS | Format::SharedA | Format::StructASharedA | Format::StructAFull => {
                rows.max(1).div_ceil(degree) * degree
            }
            Format::Mlwe | Format::StructAMlwe => rows.max(1).next_power_of_two(),
        };
        if r < rows || !self.admits(r, degree) {
            return Err(Error::Dimension(format!("{rows} rows exceed what {self} holds at degree {degree}")));
        }
        Ok(r)
    }

    /// Number of keys behind a `rows × cols` matrix secret.
    pub fn key_count(self, rows: usize, cols: usize, degree: usize) -> usize {
        match self {
            Format::Rlwe | Format::SharedS => 1,
            Format::SharedA => rows / degree,
            Format::Mlwe => degree / rows,
            Format::StructASharedA => cols,
            Format::StructAMlwe => cols * (degree / rows),
            Format::StructAFull => cols * (rows / degree),
        }
    }

    /// Ring degree of the individual keys.
    pub fn key_degree(self, rows: usize, degree: usize) -> usize {
        match self {
            Format::Mlwe | Format::StructAMlwe => rows,
            _ => degree,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Format::Rlwe => 0,
            Format::SharedS => 1,
            Format::SharedA => 2,
            Format::Mlwe => 3,
            Format::StructASharedA => 4,
            Format::StructAMlwe => 5,
            Format::StructAFull => 6,
        }
    }

    pub fn from_code(c: u8) -> Result<Self> {
        Format::ALL.get(c as usize).copied().ok_or_else(|| Error::Malformed(format!("format code {c}")))
    }

    fn name(self) -> &'static str {
        match self {
            Format::Rlwe => "rlwe",
            Format::SharedS => "shared-s",
            Format::SharedA => "shared-a",
            Format::Mlwe => "mlwe",
            Format::StructASharedA => "struct-a-shared-a",
            Format::StructAMlwe => "struct-a-mlwe",
            Format::StructAFull => "struct-a-full",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Format::ALL
            .into_iter()
            .find(|f| f.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidParams(format!("unknown format {s:?}")))
    }
}

/// Whether the plaintext is read off the columns of `S·A + B` or off its rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    Column,
    Row,
}

impl Orientation {
    pub fn flip(self) -> Self {
        match self {
            Orientation::Column => Orientation::Row,
            Orientation::Row => Orientation::Column,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FormatTag {
    pub format: Format,
    pub orientation: Orientation,
}

impl FormatTag {
    pub fn column(format: Format) -> Self {
        FormatTag { format, orientation: Orientation::Column }
    }

    pub fn row(format: Format) -> Self {
        FormatTag { format, orientation: Orientation::Row }
    }
}

impl fmt::Display for FormatTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.orientation {
            Orientation::Column => write!(f, "{}", self.format),
            Orientation::Row => write!(f, "{}/row", self.format),
        }
    }
}

/// Matrix secret `S` of a format together with the keys it is built from.
///
/// Structured-S formats store the `rows × N` (shared-s: `rows × rows`)
/// secret; structured-A formats store the `N × cols` key stack (fully
/// shared: `rows × cols`).
#[derive(Clone, Debug, PartialEq)]
pub struct SecretMatrix {
    pub format: Format,
    pub entries: ModMatrix,
    pub keys: Vec<SecretKey>,
    pub degree: usize,
    pub rows: usize,
    pub cols: usize,
}

pub(crate) fn toep_small(sk: &SecretKey, modulus: &BigInt) -> ModMatrix {
    let p = RingParams::new(sk.degree(), modulus.clone()).expect("key degree is a power of two");
    sk.as_ring(&p).toeplitz()
}

fn key_column(sk: &SecretKey) -> Vec<BigInt> {
    sk.coeffs().iter().map(|&c| BigInt::from(c)).collect()
}

pub(crate) fn check_keys(keys: &[SecretKey], format: Format, rows: usize, cols: usize, degree: usize) -> Result<()> {
    format.check_rows(rows, degree)?;
    let want = format.key_count(rows, cols, degree);
    if keys.len() != want {
        return Err(Error::MissingKey(format!("{format} with {rows}x{cols} needs {want} keys, got {}", keys.len())));
    }
    let kd = format.key_degree(rows, degree);
    if let Some(k) = keys.iter().find(|k| k.degree() != kd) {
        return Err(Error::Dimension(format!("{format} needs keys of degree {kd}, got {}", k.degree())));
    }
    Ok(())
}

/// Lays out the matrix secret of `format` for a `rows × cols` plaintext.
pub fn build_secret_matrix(
    keys: &[SecretKey],
    format: Format,
    rows: usize,
    cols: usize,
    degree: usize,
    modulus: &BigInt,
) -> Result<SecretMatrix> {
    check_keys(keys, format, rows, cols, degree)?;
    let n = degree;
    let entries = match format {
        Format::Rlwe => toep_small(&keys[0], modulus),
        Format::SharedS => {
            let t = toep_small(&keys[0], modulus);
            let mut s = ModMatrix::zeros(rows, rows, modulus.clone());
            for i in 0..rows / n {
                s.set_block(i * n, i * n, &t);
            }
            s
        }
        Format::SharedA => ModMatrix::vstack(&keys.iter().map(|k| toep_small(k, modulus)).collect::<Vec<_>>()),
        Format::Mlwe => ModMatrix::hstack(&keys.iter().map(|k| toep_small(k, modulus)).collect::<Vec<_>>()),
        Format::StructASharedA => {
            ModMatrix::from_columns(n, modulus.clone(), &keys.iter().map(key_column).collect::<Vec<_>>())
        }
        Format::StructAMlwe | Format::StructAFull => {
            // column j stacks the keys keys[j·r .. (j+1)·r]
            let r = keys.len() / cols;
            let h = if format == Format::StructAMlwe { n } else { rows };
            let columns: Vec<Vec<BigInt>> =
                (0..cols).map(|j| keys[j * r..(j + 1) * r].iter().flat_map(key_column).collect()).collect();
            ModMatrix::from_columns(h, modulus.clone(), &columns)
        }
    };
    Ok(SecretMatrix { format, entries, keys: keys.to_vec(), degree, rows, cols })
}

impl SecretMatrix {
    /// Shape the stored entries must have.
    pub fn expected_shape(&self) -> (usize, usize) {
        let n = self.degree;
        match self.format {
            Format::Rlwe => (n, n),
            Format::SharedS => (self.rows, self.rows),
            Format::SharedA | Format::Mlwe => (self.rows, n),
            Format::StructASharedA | Format::StructAMlwe => (n, self.cols),
            Format::StructAFull => (self.rows, self.cols),
        }
    }

    /// Tests the Toeplitz structure that characterizes the format. Structured-A
    /// secrets carry no structure beyond their shape.
    pub fn check_structure(&self) -> bool {
        if self.entries.shape() != self.expected_shape() || !self.format.admits(self.rows, self.degree) {
            return false;
        }
        let s = &self.entries;
        let n = self.degree;
        let toeplitz = |r0: usize, c0: usize, k: usize| toeplitz_generator(&s.block(r0, c0, k, k)).is_some();
        match self.format {
            Format::Rlwe => toeplitz(0, 0, n),
            Format::SharedS => {
                let first = s.block(0, 0, n, n);
                if toeplitz_generator(&first).is_none() {
                    return false;
                }
                let k = self.rows / n;
                (0..k).all(|i| {
                    (0..k).all(|j| {
                        let b = s.block(i * n, j * n, n, n);
                        if i == j {
                            b == first
                        } else {
                            b.data().iter().all(Zero::is_zero)
                        }
                    })
                })
            }
            Format::SharedA => (0..self.rows / n).all(|i| toeplitz(i * n, 0, n)),
            Format::Mlwe => (0..n / self.rows).all(|l| toeplitz(0, l * self.rows, self.rows)),
            Format::StructASharedA | Format::StructAMlwe | Format::StructAFull => true,
        }
    }

    /// The secret as a dense matrix modulo `modulus`.
    pub fn dense(&self, modulus: &BigInt) -> ModMatrix {
        self.entries.with_modulus(modulus)
    }
}

/// Zero-pads `m` to the nearest admissible row count of `format`.
pub fn pad_to_format(m: &RealMatrix, format: Format, degree: usize) -> Result<RealMatrix> {
    let rows = format.padded_rows(m.rows(), degree)?;
    Ok(m.pad_rows(rows))
}

/// `toep(x)` for a vector `x` of power-of-two length.
pub(crate) fn toep_of(column: &[BigInt], modulus: &BigInt) -> ModMatrix {
    let p = RingParams::new(column.len(), modulus.clone()).expect("power-of-two length");
    RingElem::new(&p, column.to_vec()).toeplitz()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{Sampler, SamplerConfig};

    fn keys(n: usize, deg: usize, seed: u64) -> Vec<SecretKey> {
        let mut s = Sampler::new(SamplerConfig::new(2, 3.2, seed));
        (0..n).map(|_| SecretKey::generate(deg, &mut s).unwrap()).collect()
    }

    #[test]
    fn rlwe_secret_is_toeplitz() {
        let q = BigInt::from(97);
        let k = keys(1, 8, 1);
        let s = build_secret_matrix(&k, Format::Rlwe, 8, 3, 8, &q).unwrap();
        assert_eq!(s.entries, toep_small(&k[0], &q));
        assert!(s.check_structure());
    }

    #[test]
    fn shared_s_is_block_diagonal() {
        let q = BigInt::from(97);
        let k = keys(1, 8, 2);
        let s = build_secret_matrix(&k, Format::SharedS, 16, 1, 8, &q).unwrap();
        let t = toep_small(&k[0], &q);
        assert_eq!(s.entries.block(0, 0, 8, 8), t);
        assert_eq!(s.entries.block(8, 8, 8, 8), t);
        assert!(s.entries.block(0, 8, 8, 8).is_zero());
        assert!(s.check_structure());
    }

    #[test]
    fn mlwe_secret_matches_module_product() {
        // 4×8 secret from two degree-4 keys: S·Vec(a_0 ‖ a_1) = Vec(a_0 s_0 + a_1 s_1)
        let q = BigInt::from(1009);
        let k = keys(2, 4, 3);
        let s = build_secret_matrix(&k, Format::Mlwe, 4, 1, 8, &q).unwrap();
        assert_eq!(s.entries.shape(), (4, 8));
        assert!(s.check_structure());
        let p = RingParams::new(4, q.clone()).unwrap();
        let mut rng = Sampler::new(SamplerConfig::new(1, 0.0, 4));
        let a: Vec<RingElem> = (0..2).map(|_| rng.uniform(&p)).collect();
        let col: Vec<BigInt> = a.iter().flat_map(|x| x.coeffs().to_vec()).collect();
        let v = ModMatrix::from_columns(8, q.clone(), &[col]);
        let lhs = crate::modmm::mod_ppmm_naive(&s.entries, &v).unwrap();
        let rhs = a[0].mul_small(k[0].coeffs()).add(&a[1].mul_small(k[1].coeffs()));
        assert_eq!(lhs.column(0), rhs.coeffs());
    }

    #[test]
    fn broken_structure_is_detected() {
        let q = BigInt::from(97);
        let mut s = build_secret_matrix(&keys(2, 8, 5), Format::SharedA, 16, 1, 8, &q).unwrap();
        assert!(s.check_structure());
        let v = s.entries.get(3, 4) + 1;
        s.entries.set(3, 4, v);
        assert!(!s.check_structure());
    }

    #[test]
    fn key_count_and_divisibility() {
        let q = BigInt::from(97);
        assert!(build_secret_matrix(&keys(1, 8, 6), Format::SharedA, 16, 1, 8, &q).is_err());
        assert!(build_secret_matrix(&keys(1, 8, 6), Format::SharedS, 12, 1, 8, &q).is_err());
        assert!(build_secret_matrix(&keys(1, 8, 6), Format::Rlwe, 8, 1, 8, &q).is_ok());
    }

    #[test]
    fn padding_and_names() {
        assert_eq!(Format::SharedA.padded_rows(17, 8).unwrap(), 24);
        assert_eq!(Format::Mlwe.padded_rows(3, 8).unwrap(), 4);
        assert!(Format::Mlwe.padded_rows(9, 8).is_err());
        assert!(Format::Rlwe.padded_rows(9, 8).is_err());
        for f in Format::ALL {
            assert_eq!(f.to_string().parse::<Format>().unwrap(), f);
            assert_eq!(Format::from_code(f.code()).unwrap(), f);
        }
    }
}
