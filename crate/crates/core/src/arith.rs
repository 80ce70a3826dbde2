//! Integer helpers shared by every module: centered reduction, rounding
//! division, modular inverses and prime search.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Representative of `x mod m` in `(-m/2, m/2]`.
pub fn center(x: &BigInt, m: &BigInt) -> BigInt {
    let r = x.mod_floor(m);
    if (&r << 1u32) > *m {
        r - m
    } else {
        r
    }
}

/// `⌊x/d + 1/2⌋` for `d > 0`.
pub fn round_div(x: &BigInt, d: &BigInt) -> BigInt {
    debug_assert!(d.is_positive());
    ((x << 1u32) + d).div_floor(&(d << 1u32))
}

/// `⌊x·num/den⌉`.
pub fn scale_round(x: &BigInt, num: &BigInt, den: &BigInt) -> BigInt {
    round_div(&(x * num), den)
}

/// `⌊x⌉ = ⌊x + 1/2⌋` for a real value.
pub fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

pub fn center_i64(x: i64, m: i64) -> i64 {
    let r = x.rem_euclid(m);
    if 2 * r > m {
        r - m
    } else {
        r
    }
}

pub fn center_i128(x: i128, m: i128) -> i128 {
    let r = x.rem_euclid(m);
    if 2 * r > m {
        r - m
    } else {
        r
    }
}

pub fn mod_inverse(x: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = x.mod_floor(m).extended_gcd(m);
    if e.gcd.is_one() {
        Some(e.x.mod_floor(m))
    } else {
        None
    }
}

pub fn mod_inverse_u64(x: u64, m: u64) -> Option<u64> {
    mod_inverse(&BigInt::from(x), &BigInt::from(m)).and_then(|v| v.to_u64())
}

pub fn bits(x: &BigInt) -> u64 {
    x.bits()
}

/// `log2 |x|` computed from the leading bits, exact enough for precision reports.
pub fn log2_abs(x: &BigInt) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let b = x.bits();
    if b <= 1000 {
        x.abs().to_f64().unwrap().log2()
    } else {
        let shifted: BigInt = x.abs() >> (b - 64);
        shifted.to_f64().unwrap().log2() + (b - 64) as f64
    }
}

fn pow_mod(base: &BigInt, exp: &BigInt, m: &BigInt) -> BigInt {
    base.modpow(exp, m)
}

const WITNESSES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Miller-Rabin with the first sixteen prime bases; deterministic below 2^81
/// and overwhelmingly reliable above.
pub fn is_prime(n: &BigInt) -> bool {
    let two = BigInt::from(2);
    if *n < two {
        return false;
    }
    for &p in WITNESSES.iter() {
        let p = BigInt::from(p);
        if *n == p {
            return true;
        }
        if n.is_multiple_of(&p) {
            return false;
        }
    }
    let n1: BigInt = n - 1;
    let s = n1.trailing_zeros().unwrap_or(0);
    let d: BigInt = &n1 >> s;
    'outer: for &a in WITNESSES.iter() {
        let mut x = pow_mod(&BigInt::from(a), &d, n);
        if x.is_one() || x == n1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x).mod_floor(n);
            if x == n1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

pub fn next_prime(n: &BigInt) -> BigInt {
    let mut c = if *n <= BigInt::from(2) {
        return BigInt::from(2);
    } else {
        n.clone()
    };
    if c.is_even() {
        c += 1;
    }
    while !is_prime(&c) {
        c += 2;
    }
    c
}

/// Largest prime `<= n`, if any.
pub fn prev_prime(n: &BigInt) -> Option<BigInt> {
    let two = BigInt::from(2);
    if *n < two {
        return None;
    }
    if *n == two {
        return Some(two);
    }
    let mut c = n.clone();
    if c.is_even() {
        c -= 1;
    }
    while c > two {
        if is_prime(&c) {
            return Some(c);
        }
        c -= 2;
    }
    Some(two)
}

pub fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

pub fn sign_of(x: &BigInt) -> i64 {
    match x.sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_is_in_half_open_range() {
        let m = BigInt::from(10);
        assert_eq!(center(&BigInt::from(5), &m), BigInt::from(5));
        assert_eq!(center(&BigInt::from(6), &m), BigInt::from(-4));
        assert_eq!(center(&BigInt::from(-5), &m), BigInt::from(5));
        assert_eq!(center_i64(-5, 10), 5);
        assert_eq!(center_i64(16, 7), 2);
    }

    #[test]
    fn rounding_ties_go_up() {
        assert_eq!(round_div(&BigInt::from(5), &BigInt::from(2)), BigInt::from(3));
        assert_eq!(round_div(&BigInt::from(-5), &BigInt::from(2)), BigInt::from(-2));
        assert_eq!(round_div(&BigInt::from(7), &BigInt::from(3)), BigInt::from(2));
        assert_eq!(round_half_up(-0.5), 0.0);
    }

    #[test]
    fn primes() {
        assert!(is_prime(&BigInt::from(1_000_000_007u64)));
        assert!(!is_prime(&BigInt::from(1_000_000_005u64)));
        assert_eq!(next_prime(&BigInt::from(14)), BigInt::from(17));
        assert_eq!(prev_prime(&BigInt::from(14)), Some(BigInt::from(13)));
        // 2^61 - 1 is a Mersenne prime.
        let m61 = (BigInt::one() << 61u32) - 1;
        assert!(is_prime(&m61));
    }

    #[test]
    fn inverse() {
        assert_eq!(mod_inverse(&BigInt::from(3), &BigInt::from(7)), Some(BigInt::from(5)));
        assert_eq!(mod_inverse(&BigInt::from(4), &BigInt::from(8)), None);
    }
}
