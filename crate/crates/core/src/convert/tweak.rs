use rayon::prelude::*;

use crate::arith::is_power_of_two;
use crate::ckks::Ciphertext;
use crate::error::{Error, Result};
use crate::modmm::Counters;
use crate::ring::RingElem;

/// `ct'_j = Σ_{i<n} X^{2ij·N/n}·ct_i` for `0 ≤ j < n`.
///
/// Evaluated by splitting even and odd indices: with `E` and `O` the results
/// on the two halves, `ct'_j = E_{j mod n/2} + X^{2jN/n}·O_{j mod n/2}`. The
/// transform is exact and adds no noise.
pub fn tweak(cts: &[Ciphertext]) -> Result<Vec<Ciphertext>> {
    tweak_counted(cts, &Counters::default())
}

/// [`tweak`], recording ring additions and monomial products in `counters`.
pub fn tweak_counted(cts: &[Ciphertext], counters: &Counters) -> Result<Vec<Ciphertext>> {
    let n = cts.len();
    if !is_power_of_two(n) {
        return Err(Error::InvalidParams(format!("tweak needs a power-of-two count, got {n}")));
    }
    let degree = cts[0].degree();
    if n > degree {
        return Err(Error::Dimension(format!("{n} ciphertexts exceed the ring degree {degree}")));
    }
    if cts.iter().any(|c| c.params() != cts[0].params()) {
        return Err(Error::ParamMismatch("tweak inputs live in different rings".into()));
    }
    let refs: Vec<&Ciphertext> = cts.iter().collect();
    Ok(rec(&refs, degree, counters))
}

fn rec(cts: &[&Ciphertext], degree: usize, counters: &Counters) -> Vec<Ciphertext> {
    let n = cts.len();
    if n == 1 {
        return vec![cts[0].clone()];
    }
    let even: Vec<&Ciphertext> = cts.iter().step_by(2).copied().collect();
    let odd: Vec<&Ciphertext> = cts.iter().skip(1).step_by(2).copied().collect();
    let (e, o) = if n >= 16 {
        rayon::join(|| rec(&even, degree, counters), || rec(&odd, degree, counters))
    } else {
        (rec(&even, degree, counters), rec(&odd, degree, counters))
    };
    let half = n / 2;
    let step = (2 * degree / n) as i64;
    counters.add_ring_ops(4 * n);
    (0..n).into_par_iter().map(|j| e[j % half].add(&o[j % half].mul_monomial(step * j as i64))).collect()
}

/// Direct `O(n²)` evaluation of the defining sum.
pub fn tweak_direct(cts: &[Ciphertext]) -> Vec<Ciphertext> {
    let n = cts.len();
    let degree = cts[0].degree();
    (0..n)
        .map(|j| {
            let mut acc = Ciphertext::trivial(RingElem::zero(cts[0].params()), cts[0].scale);
            for (i, c) in cts.iter().enumerate() {
                acc = acc.add(&c.mul_monomial((2 * i * j * degree / n) as i64));
            }
            acc
        })
        .collect()
}
