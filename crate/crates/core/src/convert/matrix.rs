//! The ciphertext-level conversions lifted to matrix ciphertexts, one
//! column at a time.

use num_bigint::BigInt;
use rayon::prelude::*;

use super::fmtswitch::{shared_a_to_shared_s, shared_s_to_shared_a_counted, FormatSwitchKey, SharedACiphertexts};
use super::modular::{mod_decomp, mod_pack, DecompMode, PackingKeys};
use crate::ckks::{Ciphertext, MlweCiphertext, SwitchingKey};
use crate::error::{Error, Result};
use crate::formats::{Format, FormatTag, MatrixCT, Orientation};
use crate::modmm::{Counters, ModMatrix};
use crate::ring::{RingElem, RingParams};

fn blocks(col: &[BigInt], n: usize, ring: &RingParams) -> Vec<RingElem> {
    col.chunks(n).map(|c| RingElem::new(ring, c.to_vec())).collect()
}

fn assemble(format: Format, ct: &MatrixCT, degree: usize, cols: Vec<(Vec<BigInt>, Vec<BigInt>)>) -> Result<MatrixCT> {
    let q = ct.modulus().clone();
    let a_rows = cols[0].0.len();
    let b_rows = cols[0].1.len();
    let a = ModMatrix::from_columns(a_rows, q.clone(), &cols.iter().map(|c| c.0.clone()).collect::<Vec<_>>());
    let b = ModMatrix::from_columns(b_rows, q, &cols.into_iter().map(|c| c.1).collect::<Vec<_>>());
    let mut out = MatrixCT::new(FormatTag { format, orientation: ct.orientation() }, a, b, degree, ct.scale)?;
    out.logical_rows = ct.logical_rows.min(b_rows);
    Ok(out)
}

fn expect(ct: &MatrixCT, format: Format) -> Result<()> {
    if ct.format() != format {
        return Err(Error::InvalidParams(format!("expected a {format} matrix, got {}", ct.tag)));
    }
    Ok(())
}

/// Shared-s to shared-a: each column's `d₁/N` ciphertexts under `sk` become
/// one shared-a group under the target keys of `key`.
pub fn shared_s_matrix_to_shared_a(ct: &MatrixCT, key: &FormatSwitchKey, counters: &Counters) -> Result<MatrixCT> {
    expect(ct, Format::SharedS)?;
    let n = ct.degree;
    let (d1, d2) = ct.dims();
    if d1 / n != key.n() {
        return Err(Error::Dimension(format!("key converts {} blocks, matrix has {}", key.n(), d1 / n)));
    }
    let ring = RingParams::new(n, ct.modulus().clone())?;
    let cols = (0..d2)
        .into_par_iter()
        .map(|j| {
            let a = blocks(&ct.a.column(j), n, &ring);
            let b = blocks(&ct.b.column(j), n, &ring);
            let cts: Vec<Ciphertext> = a.into_iter().zip(b).map(|(a, b)| Ciphertext::new(a, b, ct.scale)).collect();
            let g = shared_s_to_shared_a_counted(key, &cts, counters)?;
            Ok((g.a.into_coeffs(), g.b.into_iter().flat_map(RingElem::into_coeffs).collect()))
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(Format::SharedA, ct, n, cols)
}

/// Shared-a back to shared-s with one key switch per block,
/// `keys[i] = swk(sk′_i → sk)`.
pub fn shared_a_matrix_to_shared_s(ct: &MatrixCT, keys: &[SwitchingKey], counters: &Counters) -> Result<MatrixCT> {
    expect(ct, Format::SharedA)?;
    let n = ct.degree;
    let (d1, d2) = ct.dims();
    let ring = RingParams::new(n, ct.modulus().clone())?;
    counters.add_key_switch(d2 * d1 / n);
    let cols = (0..d2)
        .into_par_iter()
        .map(|j| {
            let g = SharedACiphertexts {
                a: RingElem::new(&ring, ct.a.column(j)),
                b: blocks(&ct.b.column(j), n, &ring),
                scale: ct.scale,
            };
            let cts = shared_a_to_shared_s(keys, &g)?;
            let a = cts.iter().flat_map(|c| c.a.coeffs().to_vec()).collect();
            let b = cts.into_iter().flat_map(|c| c.b.into_coeffs()).collect();
            Ok((a, b))
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(Format::SharedS, ct, n, cols)
}

/// Splits a column RLWE matrix into `k` MLWE matrices of `N/k` rows; part `j`
/// holds the rows `j, j + k, …` under the key components of `sk`.
pub fn rlwe_matrix_to_mlwe(ct: &MatrixCT, k: usize) -> Result<Vec<MatrixCT>> {
    expect(ct, Format::Rlwe)?;
    if ct.orientation() != Orientation::Column {
        return Err(Error::InvalidParams("RLWE to MLWE splits column encodings".into()));
    }
    let per_col: Vec<Vec<MlweCiphertext>> =
        ct.columns()?.par_iter().map(|c| mod_decomp(c, k, DecompMode::SharedS)).collect::<Result<_>>()?;
    (0..k)
        .map(|j| {
            let cols = per_col
                .iter()
                .map(|parts| {
                    let p = &parts[j];
                    (p.a.iter().flat_map(|x| x.coeffs().to_vec()).collect(), p.b.coeffs().to_vec())
                })
                .collect();
            let mut out = assemble(Format::Mlwe, ct, ct.degree, cols)?;
            out.logical_rows = ct.degree / k;
            Ok(out)
        })
        .collect()
}

/// Inverse of [`rlwe_matrix_to_mlwe`] through the packing keys.
pub fn mlwe_matrices_to_rlwe(parts: &[MatrixCT], keys: &PackingKeys) -> Result<MatrixCT> {
    let first = parts.first().ok_or_else(|| Error::Dimension("no MLWE parts".into()))?;
    for p in parts {
        expect(p, Format::Mlwe)?;
        if p.dims() != first.dims() || p.modulus() != first.modulus() {
            return Err(Error::ParamMismatch("MLWE parts differ in shape or modulus".into()));
        }
    }
    let (d1, d2) = first.dims();
    let n = first.degree;
    let sub = RingParams::new(d1, first.modulus().clone())?;
    let cols = (0..d2)
        .into_par_iter()
        .map(|j| {
            let cts: Vec<MlweCiphertext> = parts
                .iter()
                .map(|p| MlweCiphertext {
                    a: blocks(&p.a.column(j), d1, &sub),
                    b: RingElem::new(&sub, p.b.column(j)),
                    scale: p.scale,
                })
                .collect();
            let c = mod_pack(&cts, keys)?;
            Ok((c.a.into_coeffs(), c.b.into_coeffs()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = assemble(Format::Rlwe, first, n, cols)?;
    out.logical_rows = n;
    Ok(out)
}
