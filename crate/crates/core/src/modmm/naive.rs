use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use super::ModMatrix;
use crate::arith::{center, center_i128};
use crate::error::{Error, Result};

pub(crate) fn check_operands(a: &ModMatrix, b: &ModMatrix) -> Result<()> {
    if a.cols() != b.rows() {
        return Err(Error::Dimension(format!(
            "inner dimensions differ: {}x{} times {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    if a.modulus() != b.modulus() {
        return Err(Error::ModulusMismatch(format!("{} vs {}", a.modulus(), b.modulus())));
    }
    Ok(())
}

/// Exact product over the integers without any reduction.
pub fn int_product(a: &ModMatrix, b: &ModMatrix) -> Vec<BigInt> {
    let (d1, d2, d3) = (a.rows(), a.cols(), b.cols());
    let bound = BigInt::from(d2) * a.max_abs() * b.max_abs();
    let small = if bound.bits() <= 126 { a.to_i64().zip(b.to_i64()) } else { None };
    if let Some((ai, bi)) = small {
        let bt: Vec<i64> = (0..d3 * d2).map(|t| bi[(t % d2) * d3 + t / d2]).collect();
        (0..d1 * d3)
            .into_par_iter()
            .map(|t| {
                let (i, j) = (t / d3, t % d3);
                let row = &ai[i * d2..(i + 1) * d2];
                let col = &bt[j * d2..(j + 1) * d2];
                BigInt::from(row.iter().zip(col).map(|(&x, &y)| x as i128 * y as i128).sum::<i128>())
            })
            .collect()
    } else {
        (0..d1 * d3)
            .into_par_iter()
            .map(|t| {
                let (i, j) = (t / d3, t % d3);
                let mut acc = BigInt::zero();
                for k in 0..d2 {
                    acc += a.get(i, k) * b.get(k, j);
                }
                acc
            })
            .collect()
    }
}

/// Reference modular product: exact integer accumulation, then centered
/// reduction.
pub fn mod_ppmm_naive(a: &ModMatrix, b: &ModMatrix) -> Result<ModMatrix> {
    check_operands(a, b)?;
    let m = a.modulus();
    let data = match m.to_i128() {
        Some(mi) if m.bits() <= 126 => int_product(a, b)
            .into_iter()
            .map(|x| match x.to_i128() {
                Some(v) => BigInt::from(center_i128(v, mi)),
                None => center(&x, m),
            })
            .collect(),
        _ => int_product(a, b).iter().map(|x| center(x, m)).collect(),
    };
    Ok(ModMatrix::from_centered(a.rows(), b.cols(), m.clone(), data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_case() {
        let m = BigInt::from(7);
        let a = ModMatrix::from_i64(1, 1, m.clone(), &[3]);
        let b = ModMatrix::from_i64(1, 1, m.clone(), &[5]);
        assert_eq!(mod_ppmm_naive(&a, &b).unwrap(), ModMatrix::from_i64(1, 1, m, &[1]));
    }

    #[test]
    fn identity_is_neutral() {
        let m = BigInt::from(1_000_003);
        let a = ModMatrix::from_fn(3, 4, m.clone(), |i, j| BigInt::from(i as i64 * 1000 - j as i64 * 77));
        assert_eq!(mod_ppmm_naive(&a, &ModMatrix::identity(4, m)).unwrap(), a);
    }

    #[test]
    fn mismatches_are_errors() {
        let a = ModMatrix::zeros(2, 3, BigInt::from(7));
        assert!(matches!(mod_ppmm_naive(&a, &ModMatrix::zeros(2, 2, BigInt::from(7))), Err(Error::Dimension(_))));
        assert!(matches!(
            mod_ppmm_naive(&a, &ModMatrix::zeros(3, 2, BigInt::from(11))),
            Err(Error::ModulusMismatch(_))
        ));
    }
}
