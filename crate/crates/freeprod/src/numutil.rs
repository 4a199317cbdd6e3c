//! Small arbitrary-precision number-theory helpers used across modules.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

/// Falling factorial `(n)_k = n(n-1)…(n-k+1)` (1 when `k = 0`).
pub fn falling(n: i64, k: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k as i64 {
        acc *= BigInt::from(n - i);
    }
    acc
}

/// Sorted list of positive divisors.
pub fn divisors(n: u64) -> Vec<u64> {
    assert!(n > 0);
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            small.push(d);
            if d != n / d {
                large.push(n / d);
            }
        }
        d += 1;
    }
    large.reverse();
    small.extend(large);
    small
}

/// Möbius function.
pub fn moebius(mut n: u64) -> i64 {
    let mut mu = 1i64;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            mu = -mu;
        }
        p += 1;
    }
    if n > 1 {
        mu = -mu;
    }
    mu
}

/// Stirling numbers of the second kind `S(r, j)` for `0 ≤ j ≤ r`.
pub fn stirling2_row(r: u64) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for _ in 0..r {
        let mut next = vec![BigInt::zero(); row.len() + 1];
        for (j, v) in row.iter().enumerate() {
            next[j] += v * BigInt::from(j as u64); // S(n+1, j) += j·S(n, j)
            next[j + 1] += v;
        }
        row = next;
    }
    row
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Converts a big rational to `f64` without overflowing intermediate floats.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let negative = r.is_negative();
    let num = r.numer().abs();
    let den = r.denom().abs();
    // Scale the integer quotient by 2^64 to keep 64 fractional bits.
    let scaled = (num << 64u32) / den;
    let bits = scaled.bits();
    let value = if bits <= 128 {
        scaled.to_u128().unwrap() as f64 / 2f64.powi(64)
    } else {
        let shift = bits - 64;
        let top = (&scaled >> shift).to_u64().unwrap() as f64;
        top * 2f64.powi(shift as i32 - 64)
    };
    if negative {
        -value
    } else {
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::FromPrimitive;

    #[test]
    fn falling_factorials() {
        assert_eq!(falling(5, 2), BigInt::from(20));
        assert_eq!(falling(5, 0), BigInt::one());
        assert_eq!(falling(3, 5), BigInt::zero());
    }

    #[test]
    fn divisor_lists() {
        assert_eq!(divisors(12), vec![1, 2, 3, 4, 6, 12]);
        assert_eq!(divisors(1), vec![1]);
    }

    #[test]
    fn moebius_values() {
        let vals: Vec<i64> = (1..=10).map(moebius).collect();
        assert_eq!(vals, vec![1, -1, -1, 0, -1, 1, -1, 0, 0, 1]);
    }

    #[test]
    fn stirling_row_five() {
        let row = stirling2_row(5);
        let want: Vec<BigInt> = [0u64, 1, 15, 25, 10, 1].iter().map(|&v| BigInt::from(v)).collect();
        assert_eq!(row, want);
    }

    #[test]
    fn rational_conversion_handles_huge_terms() {
        let r = BigRational::new(BigInt::from(1u8) << 2000u32, (BigInt::from(1u8) << 2000u32) * 3);
        let f = rational_to_f64(&r);
        assert!((f - 1.0 / 3.0).abs() < 1e-12);
        let neg = BigRational::from_f64(-2.5).unwrap();
        assert_eq!(rational_to_f64(&neg), -2.5);
    }
}
