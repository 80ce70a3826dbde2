//! The double-precision product kernel.

use rayon::prelude::*;

use super::IntMatrix;
use crate::error::{Error, Result};

pub const FP_EXACT_BITS: u32 = 53;

/// `d1×d2` times `d2×d3` in `f64`, row-major, no exactness check.
pub fn fp_matmul(a: &[f64], b: &[f64], d1: usize, d2: usize, d3: usize) -> Vec<f64> {
    assert_eq!(a.len(), d1 * d2);
    assert_eq!(b.len(), d2 * d3);
    let mut out = vec![0.0f64; d1 * d3];
    out.par_chunks_mut(d3.max(1)).enumerate().for_each(|(i, row)| {
        let ar = &a[i * d2..(i + 1) * d2];
        for (k, &x) in ar.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let br = &b[k * d3..(k + 1) * d3];
            for (o, &y) in row.iter_mut().zip(br) {
                *o += x * y;
            }
        }
    });
    out
}

/// Whether `d2·‖A‖∞·‖B‖∞ < 2^53`, which makes every partial sum exact.
pub fn fits_fp_exact(d2: usize, a_max: u64, b_max: u64) -> bool {
    (d2 as u128)
        .checked_mul(a_max as u128)
        .and_then(|x| x.checked_mul(b_max as u128))
        .is_some_and(|x| x < 1u128 << FP_EXACT_BITS)
}

/// Exact integer product through the `f64` kernel. Refuses inputs whose size
/// could make an intermediate sum leave the 53-bit exact range.
pub fn fp_exact_mm(a: &IntMatrix, b: &IntMatrix) -> Result<IntMatrix> {
    if a.cols != b.rows {
        return Err(Error::Dimension(format!("{}x{} times {}x{}", a.rows, a.cols, b.rows, b.cols)));
    }
    let (am, bm) = (a.max_abs(), b.max_abs());
    if !fits_fp_exact(a.cols, am, bm) {
        return Err(Error::FpBound(format!("d2={} |A|={} |B|={}", a.cols, am, bm)));
    }
    let af: Vec<f64> = a.data.iter().map(|&x| x as f64).collect();
    let bf: Vec<f64> = b.data.iter().map(|&x| x as f64).collect();
    let out = fp_matmul(&af, &bf, a.rows, a.cols, b.cols);
    Ok(IntMatrix::new(a.rows, b.cols, out.into_iter().map(|x| x as i64).collect()))
}
