//! Encrypted matrix products reduced to modular plaintext products.

mod ccmm;
mod cpmm;
mod gsw;

use num_bigint::BigInt;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::formats::{encode_matrix, Format, MatrixCT, Orientation};
use crate::modmm::{Backend, ModMatrix, Part};
use crate::real::RealMatrix;

pub use ccmm::{ccmm, ccmm_lightweight, pcmm_via_transpose, CcmmKeys};
pub use cpmm::{
    cpmm, cpmm_precomp, cpmm_precomp_to_sk, cpmm_shared_s, precomp_vector_as_shared_s, precompute_cpmm_keys,
    secret_times_plain, PrecomputedKeys, SwitchOrder,
};
pub use gsw::{
    gsw_blockwise, gsw_cp_mv, gsw_matmat, gsw_matvec, gsw_matvec_raw, gsw_pc_mv, gsw_shared_s_blocking, op_norm,
    rgsw_encrypt_plain_matrix, theorem9_bound, BlockingMode, BlockingReport,
};

/// Cleartext right operand `U` and its encoding `⌊scale·U⌉`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlainOperand {
    pub values: RealMatrix,
    pub encoded: ModMatrix,
    pub scale: f64,
}

impl PlainOperand {
    /// Fails when an entry of `scale·U` does not fit below `q/2`.
    pub fn encode(values: &RealMatrix, scale: f64, q: &BigInt) -> Result<Self> {
        Ok(PlainOperand { values: values.clone(), encoded: encode_matrix(values, scale, q)?, scale })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    /// Encoded entries read modulo `modulus`.
    pub fn encoded_mod(&self, modulus: &BigInt) -> ModMatrix {
        self.encoded.with_modulus(modulus)
    }

    pub fn transpose(&self) -> Self {
        PlainOperand { values: self.values.transpose(), encoded: self.encoded.transpose(), scale: self.scale }
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h = Sha256::new();
        h.update(b"U");
        h.update((self.encoded.rows() as u64).to_le_bytes());
        h.update((self.encoded.cols() as u64).to_le_bytes());
        for x in self.encoded.data() {
            h.update(x.to_signed_bytes_le());
            h.update([0xff]);
        }
        u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
    }
}

/// Relative precision `log₂‖M‖_∞ − log₂‖M − M̃‖_∞` in bits; infinite when
/// the approximation is exact.
pub fn precision_bits(exact: &RealMatrix, approx: &RealMatrix) -> f64 {
    let err = exact.dist(approx);
    if err == 0.0 {
        return f64::INFINITY;
    }
    exact.max_abs().log2() - err.log2()
}

/// Heuristic format choice for a `d₁ × d₂ × d₃` product at ring degree `N`.
/// Small blocks go to MLWE; tall matrices use shared-a unless `d₃` is so
/// small that the shared-s conversions would dominate.
pub fn recommend_format(d1: usize, d3: usize, degree: usize) -> Result<Format> {
    if d1 == degree {
        return Ok(Format::Rlwe);
    }
    if d1 < degree && degree % d1 == 0 && d1.is_power_of_two() {
        return Ok(Format::Mlwe);
    }
    if d1 % degree == 0 {
        let log_n = degree.trailing_zeros() as usize;
        return Ok(if d3 <= log_n { Format::SharedS } else { Format::SharedA });
    }
    Err(Error::Dimension(format!("{d1} rows are neither a divisor nor a multiple of N = {degree}")))
}

/// Both halves of `(A, B)·U` with the backend, `A` first.
pub(crate) fn right_multiply(ct: &MatrixCT, u: &ModMatrix, backend: &Backend) -> Result<(ModMatrix, ModMatrix)> {
    let a = backend.mm(&ct.a, u, Part::A)?;
    let b = backend.mm(&ct.b, u, Part::B)?;
    Ok((a, b))
}

pub(crate) fn check_column(ct: &MatrixCT) -> Result<()> {
    if ct.orientation() != Orientation::Column {
        return Err(Error::InvalidParams(format!("{} is row encoded; transpose it first", ct.tag)));
    }
    Ok(())
}
